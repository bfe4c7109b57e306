#include "symsplit/cli.hpp"

#include "symsplit/coeffs.hpp"
#include "symsplit/engine.hpp"
#include "symsplit/models.hpp"
#include "symsplit/orderconds.hpp"
#include "symsplit/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

namespace symsplit {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Output stream that is either `fallback` or a file opened on demand.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (path.empty() || path == "-") return;
        file_.open(path);
        if (!file_) throw UsageError("cannot open '" + path + "' for writing");
    }
    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

private:
    std::ostream& fallback_;
    std::ofstream file_;
};

/// Registry methods plus any loaded from a catalog file; the file wins on id clashes.
class MethodTable {
public:
    explicit MethodTable(const std::string& catalog_path) {
        methods_ = registry();
        if (catalog_path.empty()) return;
        std::ifstream in(catalog_path);
        if (!in) throw UsageError("cannot read catalog '" + catalog_path + "'");
        for (auto& m : read_catalog(in)) {
            auto it = std::find_if(methods_.begin(), methods_.end(), [&](const auto& e) { return e.id == m.id; });
            if (it != methods_.end())
                *it = std::move(m);
            else
                methods_.push_back(std::move(m));
        }
    }
    const SplittingMethod& get(const std::string& id) const {
        for (const auto& m : methods_)
            if (m.id == id) return m;
        throw UsageError("unknown method '" + id + "'");
    }
    const std::vector<SplittingMethod>& all() const { return methods_; }

private:
    std::vector<SplittingMethod> methods_;
};

struct ModelOptions {
    std::string model = "kepler";
    double eps = 1e-2;
    double ecc = 0.25;
    std::string elements;
    double m0 = 1.0;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--model", m.model, "kepler (planar perturbed Kepler) or helio (heliocentric N-body)")
        ->check(CLI::IsMember({"kepler", "helio"}));
    cmd->add_option("--eps", m.eps, "perturbation strength for the kepler model")->check(CLI::NonNegativeNumber);
    cmd->add_option("--ecc", m.ecc, "initial eccentricity for the kepler model")->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--elements", m.elements, "orbital elements file for the helio model");
    cmd->add_option("--m0", m.m0, "central mass for the helio model, in solar masses")->check(CLI::PositiveNumber);
}

struct BuiltModel {
    std::shared_ptr<const SplitSystem<double>> system;
    PhaseState<double> initial;
};

BuiltModel build_model(const ModelOptions& m) {
    if (m.model == "kepler") {
        auto sys = std::make_shared<PerturbedKepler<double>>(m.eps);
        return {sys, PerturbedKepler<double>::initial_state(m.ecc)};
    }
    if (m.elements.empty()) throw UsageError("the helio model needs --elements");
    auto setup = helio_system(read_elements_file(m.elements), m.m0);
    return {setup.system, setup.initial};
}

/// Whole number of steps covering `span` at step `tau`, or an error.
long whole_steps(double span, double tau, const char* what) {
    const double n = span / tau;
    const double r = std::round(n);
    if (r < 1 || std::abs(n - r) > 1e-9 * std::max(1.0, r))
        throw UsageError(std::string(what) + " is not a whole number of steps of size tau");
    return static_cast<long>(r);
}

std::vector<double> parse_taus(const std::string& text) {
    if (text.empty()) return default_tau_grid();
    std::vector<double> taus;
    for (const auto& item : split_list(text)) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !(v > 0)) throw UsageError("bad tau value '" + item + "'");
        taus.push_back(v);
    }
    return taus;
}

std::vector<std::size_t> parse_zeroed(const PolySystem& sys, const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& name : split_list(text)) {
        bool found = false;
        for (std::size_t i = 0; i < sys.unknowns(); ++i)
            if (sys.unknown_name(i) == name) {
                out.push_back(i);
                found = true;
            }
        if (!found) throw UsageError("unknown coefficient '" + name + "' in --zero");
    }
    return out;
}

/// Effective settings of a subcommand as `key = value` lines.
ConfigEntries effective_config(const CLI::App* cmd) {
    ConfigEntries out;
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (key == "help" || key == "print-config" || key == "config") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeLast)
                value = res.back();
            else
                for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
        } else {
            value = opt->get_default_str();
        }
        if (!value.empty()) out.emplace_back(key, value);
    }
    return out;
}

struct VerifyArgs {
    std::vector<std::string> ids;
    bool all = false;
    std::string tol = "1e-30";
    std::string order;
    std::string catalog;
    int digits = 0;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const MethodTable table(a.catalog);
    std::vector<const SplittingMethod*> methods;
    if (a.all)
        for (const auto& m : table.all()) methods.push_back(&m);
    for (const auto& id : a.ids) methods.push_back(&table.get(id));
    if (methods.empty()) throw UsageError("verify: name at least one method or pass --all");

    const int digits = a.digits > 0 ? a.digits : default_digits();
    ScopedDigits guard(digits);
    const Real tol = parse_real(a.tol);
    bool all_ok = true;
    for (const auto* m : methods) {
        ConditionReport rep;
        if (a.order.empty()) {
            rep = certify(*m, tol, digits);
        } else {
            const auto set = condition_set_for(parse_order(a.order), true, m->cubic_condition);
            rep = certify_against(*m, set, tol, digits);
        }
        out << format_report(rep) << '\n';
        all_ok = all_ok && rep.certified;
    }
    return all_ok ? kExitOk : kExitFailure;
}

struct IntegrateArgs {
    std::string method;
    std::string catalog;
    ModelOptions model;
    double tau = 0.0;
    double tf = 0.0;
    long niter = 0;
    double sample_dt = 0.0;
    long sample_every = 0;
    bool compensated = true;
    bool allow_degraded = false;
    bool with_state = false;
    std::string output;
};

int cmd_integrate(const IntegrateArgs& a, std::ostream& out, std::ostream& err) {
    const MethodTable table(a.catalog);
    if (!(a.tau > 0)) throw UsageError("integrate: --tau must be positive");
    if ((a.tf > 0) == (a.niter > 0)) throw UsageError("integrate: give exactly one of --tf and --niter");
    if (a.sample_dt > 0 && a.sample_every > 0) throw UsageError("integrate: give at most one of --sample-dt and --sample-every");

    auto model = build_model(a.model);
    IntegrationPlan<double> plan;
    plan.method = table.get(a.method);
    plan.system = model.system;
    plan.initial = model.initial;
    plan.tau = a.tau;
    plan.n_steps = a.tf > 0 ? whole_steps(a.tf, a.tau, "--tf") : a.niter;
    plan.sample_every = a.sample_dt > 0 ? whole_steps(a.sample_dt, a.tau, "--sample-dt")
                                        : std::max<long>(1, a.sample_every);
    plan.compensated = a.compensated;
    plan.allow_degraded = a.allow_degraded;
    plan.keep_states = a.with_state;
    try {
        check_compatible(plan.method, model.system->approximate_b(), a.allow_degraded);
    } catch (const CompatibilityError& e) {
        throw UsageError(e.what());
    }

    const auto rec = integrate(plan);
    Sink sink(a.output, out);
    write_trajectory_csv(sink.stream(), rec, a.with_state);
    char line[160];
    std::snprintf(line, sizeof line, "%s: %ld steps, %zu samples, max |dE/E| = %.6e\n", plan.method.id.c_str(),
                  rec.steps_done, rec.times.size(), rec.max_energy_deviation);
    err << line;
    if (!rec.ok()) {
        err << "integration stopped: " << rec.error << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

struct SweepArgs {
    std::string methods;
    std::string catalog;
    ModelOptions model;
    std::string taus;
    long niter = 100000;
    long sample_every = 1;
    bool compensated = true;
    bool allow_degraded = false;
    unsigned jobs = 1;
    std::string output;
    std::string plot_data;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    const MethodTable table(a.catalog);
    const auto ids = split_list(a.methods);
    if (ids.empty()) throw UsageError("sweep: --methods is empty");
    std::vector<SplittingMethod> methods;
    for (const auto& id : ids) methods.push_back(table.get(id));
    const auto taus = parse_taus(a.taus);
    if (taus.size() < 2) throw UsageError("sweep: need at least two tau values");
    if (a.niter < 1) throw UsageError("sweep: --niter must be positive");

    auto model = build_model(a.model);
    for (const auto& m : methods) try {
            check_compatible(m, model.system->approximate_b(), a.allow_degraded);
        } catch (const CompatibilityError& e) {
            throw UsageError(e.what());
        }
    SweepOptions opt;
    opt.niter = a.niter;
    opt.sample_every = a.sample_every;
    opt.compensated = a.compensated;
    opt.allow_degraded = a.allow_degraded;
    opt.jobs = std::max(1u, a.jobs);
    const auto rows = efficiency_sweep(methods, model.system, model.initial, taus, opt);

    Sink sink(a.output, out);
    write_sweep_csv(sink.stream(), rows, true);
    if (!a.plot_data.empty()) {
        Sink plot(a.plot_data, out);
        write_sweep_csv(plot.stream(), sort_by_cost(rows), false);
    }
    long failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
    if (failed > 0) err << failed << " of " << rows.size() << " runs did not finish; see the status column\n";
    return kExitOk;
}

struct SolveArgs {
    std::string order;
    int stages = 0;
    bool abah = false;
    std::optional<bool> cubic;
    std::string strategy = "auto";
    int seeds = 16;
    std::uint64_t seed = 0;
    int starts = 200;
    int grid = 12;
    std::string zero;
    int digits = 0;
    unsigned jobs = 1;
    std::string id = "SOLVED";
    std::string output;
    std::string log;
    bool all = false;
};

const char* status_name(HomotopyOutcome::Status s) {
    switch (s) {
        case HomotopyOutcome::Status::RealSolution: return "real";
        case HomotopyOutcome::Status::NonReal: return "non-real";
        case HomotopyOutcome::Status::Failed: return "failed";
    }
    return "failed";
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
    const int digits = std::max(a.digits > 0 ? a.digits : default_digits(), kDefaultDigits);
    ScopedDigits guard(digits);
    const MethodKind kind = a.abah ? MethodKind::ABAH : MethodKind::ABA;
    const bool cubic = a.cubic.value_or(a.abah);
    std::optional<PolySystem> sys;
    try {
        sys.emplace(parse_order(a.order), a.stages, kind, cubic);
    } catch (const SolverError& e) {
        throw UsageError(e.what());
    }

    SolveOptions opt;
    opt.strategy = a.strategy;
    opt.zeroed = parse_zeroed(*sys, a.zero);
    opt.seeds = a.seeds;
    opt.first_seed = a.seed;
    opt.starts = a.starts;
    opt.grid = a.grid;
    opt.digits = digits;
    opt.jobs = std::max(1u, a.jobs);
    SolveReport report;
    try {
        report = solve(*sys, opt);
    } catch (const SolverError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNoSolution;
    }

    err << "strategy " << report.strategy << ", " << sys->equation_count() << " equations in "
        << sys->unknowns() << " unknowns\n";
    if (report.x0) err << "start point x0: |f1| = " << format_sci(report.x0->residual) << '\n';
    for (const auto& p : report.paths)
        err << "  seed " << p.seed << ": " << status_name(p.status) << " (" << p.steps << " steps) " << p.message
            << '\n';
    err << report.candidates.size() << " distinct real solution(s)\n";

    const std::string log_path = !a.log.empty() ? a.log : (!a.output.empty() && a.output != "-" ? a.output + ".paths" : "");
    if (!log_path.empty() && !report.paths.empty()) {
        Sink log(log_path, out);
        write_path_log(log.stream(), report.paths);
    }
    if (!report.selected) {
        err << "no real solution within the budget\n";
        return kExitNoSolution;
    }

    Sink sink(a.output, out);
    const std::size_t sel = *report.selected;
    sink.stream() << "# selection: " << report.selection_rule << '\n';
    write_solution(sink.stream(), *sys, report.candidates[sel], a.id, 40);
    if (a.all) {
        int k = 1;
        for (std::size_t i = 0; i < report.candidates.size(); ++i) {
            if (i == sel) continue;
            sink.stream() << '\n';
            write_solution(sink.stream(), *sys, report.candidates[i], a.id + "_ALT" + std::to_string(k++), 40);
        }
    }
    return kExitOk;
}

struct CatalogArgs {
    std::string ids;
    std::string input;
    std::string output;
};

int cmd_catalog(const CatalogArgs& a, std::ostream& out) {
    std::vector<SplittingMethod> methods;
    if (!a.input.empty()) {
        std::ifstream in(a.input);
        if (!in) throw UsageError("cannot read catalog '" + a.input + "'");
        methods = read_catalog(in);
    } else {
        methods = registry();
    }
    const auto ids = split_list(a.ids);
    if (!ids.empty()) {
        std::vector<SplittingMethod> picked;
        for (const auto& id : ids) {
            auto it = std::find_if(methods.begin(), methods.end(), [&](const auto& m) { return m.id == id; });
            if (it == methods.end()) throw UsageError("unknown method '" + id + "'");
            picked.push_back(*it);
        }
        methods = std::move(picked);
    }
    Sink sink(a.output, out);
    write_catalog(sink.stream(), methods);
    return kExitOk;
}

/// Pulls `--config PATH` / `--config=PATH` out of the arguments.
std::optional<std::string> take_config_path(std::vector<std::string>& args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a path");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    return path;
}

}  // namespace

ConfigEntries parse_config(std::istream& in) {
    ConfigEntries out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

ConfigEntries read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    return parse_config(in);
}

std::string format_config(const ConfigEntries& entries) {
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + '\n';
    return out;
}

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Splitting methods for near-integrable Hamiltonian systems", "symsplit"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    bool print_config = false;

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "certify coefficient sets against their order conditions");
    verify->add_option("ids", va.ids, "method identifiers")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    verify->add_flag("--all", va.all, "every registry method (and every method of --catalog)");
    verify->add_option("--tol", va.tol, "largest accepted residual");
    verify->add_option("--order", va.order, "check against this generalized order instead of the claimed one");
    verify->add_option("--catalog", va.catalog, "extra methods in catalog format");
    verify->add_option("--digits", va.digits, "working precision (default: SYMSPLIT_DIGITS or 50)");

    IntegrateArgs ia;
    auto* integ = app.add_subcommand("integrate", "integrate one trajectory and write t, dE/E as CSV");
    integ->add_option("--method", ia.method, "method identifier")->required();
    integ->add_option("--catalog", ia.catalog, "extra methods in catalog format");
    add_model_options(integ, ia.model);
    integ->add_option("--tau", ia.tau, "step size")->required();
    integ->add_option("--tf", ia.tf, "final time");
    integ->add_option("--niter", ia.niter, "number of steps");
    integ->add_option("--sample-dt", ia.sample_dt, "time between samples (a multiple of tau)");
    integ->add_option("--sample-every", ia.sample_every, "steps between samples");
    integ->add_flag("--compensated,!--no-compensated", ia.compensated, "compensated summation of the state");
    integ->add_flag("--allow-degraded", ia.allow_degraded, "run ABA methods on systems with an approximate B flow");
    integ->add_flag("--with-state", ia.with_state, "append q and p columns");
    integ->add_option("--output,-o", ia.output, "CSV path (default stdout)");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "energy error against step size for several methods");
    sweep->add_option("--methods", sa.methods, "comma-separated method identifiers");
    sweep->add_option("--catalog", sa.catalog, "extra methods in catalog format");
    add_model_options(sweep, sa.model);
    sweep->add_option("--taus", sa.taus, "comma-separated step sizes (default 1/2^i, i = 1..15)");
    sweep->add_option("--niter", sa.niter, "steps per run");
    sweep->add_option("--sample-every", sa.sample_every, "steps between energy samples")->check(CLI::PositiveNumber);
    sweep->add_flag("--compensated,!--no-compensated", sa.compensated, "compensated summation of the state");
    sweep->add_flag("--allow-degraded", sa.allow_degraded, "run ABA methods on systems with an approximate B flow");
    sweep->add_option("--jobs,-j", sa.jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--output,-o", sa.output, "CSV path (default stdout)");
    sweep->add_option("--plot-data", sa.plot_data, "rows sorted by tau/s, for plotting");

    SolveArgs so;
    auto* solvec = app.add_subcommand("solve", "solve the order conditions for new coefficients");
    solvec->add_option("--order", so.order, "generalized order, e.g. 10,6,4")->required();
    solvec->add_option("--stages", so.stages, "number of stages")->required()->check(CLI::PositiveNumber);
    solvec->add_flag("--abah", so.abah, "ABAH method (implies the cubic condition unless --no-cubic)");
    solvec->add_flag("--cubic,!--no-cubic", so.cubic, "impose sum b^3 = 0");
    solvec->add_option("--strategy", so.strategy, "auto, grid, multistart or homotopy")
        ->check(CLI::IsMember({"auto", "grid", "multistart", "homotopy"}));
    solvec->add_option("--seeds", so.seeds, "homotopy paths to track")->check(CLI::NonNegativeNumber);
    solvec->add_option("--seed", so.seed, "first random seed");
    solvec->add_option("--starts", so.starts, "random starts for multistart")->check(CLI::PositiveNumber);
    solvec->add_option("--grid", so.grid, "grid points per coordinate")->check(CLI::PositiveNumber);
    solvec->add_option("--zero", so.zero, "coefficients fixed to zero in the start point, e.g. a3,a4");
    solvec->add_option("--digits", so.digits, "working precision, at least 50");
    solvec->add_option("--jobs,-j", so.jobs, "threads for path tracking")->check(CLI::PositiveNumber);
    solvec->add_option("--id", so.id, "identifier written into the solution file");
    solvec->add_option("--output,-o", so.output, "solution file (default stdout)");
    solvec->add_option("--log", so.log, "path-tracking log (default OUTPUT.paths)");
    solvec->add_flag("--all-solutions", so.all, "also write the solutions that were not selected");

    CatalogArgs ca;
    auto* catalog = app.add_subcommand("catalog", "print coefficient sets in catalog format");
    catalog->add_option("--ids", ca.ids, "comma-separated identifiers (default all)");
    catalog->add_option("--input", ca.input, "read this catalog instead of the registry");
    catalog->add_option("--output,-o", ca.output, "output path (default stdout)");

    for (auto* sub : {verify, integ, sweep, solvec, catalog})
        sub->add_flag("--print-config", print_config, "print the effective settings as key = value lines and exit");

    try {
        std::vector<std::string> args = args_in;
        if (auto path = take_config_path(args)) {
            // File values go in front of the command-line flags so the flags win.
            auto pos = std::find_if(args.begin(), args.end(), [](const std::string& s) { return s.empty() || s[0] != '-'; });
            if (pos == args.end()) throw UsageError("--config needs a subcommand");
            std::vector<std::string> injected;
            for (const auto& [k, v] : read_config_file(*path)) injected.push_back("--" + k + "=" + v);
            args.insert(pos + 1, injected.begin(), injected.end());
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    if (print_config) {
        out << format_config(effective_config(chosen));
        return kExitOk;
    }
    try {
        if (chosen == verify) return cmd_verify(va, out);
        if (chosen == integ) return cmd_integrate(ia, out, err);
        if (chosen == sweep) return cmd_sweep(sa, out, err);
        if (chosen == solvec) return cmd_solve(so, out, err);
        return cmd_catalog(ca, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const MethodError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace symsplit
