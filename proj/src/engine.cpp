#include "symsplit/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ostream>
#include <thread>

namespace symsplit {

void check_compatible(const SplittingMethod& method, bool approximate_b, bool allow_degraded) {
    if (approximate_b && method.kind != MethodKind::ABAH && !allow_degraded)
        throw CompatibilityError("method " + method.id + " (" + std::string(to_string(method.kind)) +
                                 ") assumes an exact B flow; this system approximates it. "
                                 "Allow the degraded order explicitly to run it anyway");
}

std::vector<double> default_tau_grid() {
    std::vector<double> taus;
    for (int i = 1; i <= 15; ++i) taus.push_back(std::ldexp(1.0, -i));
    return taus;
}

namespace {

SweepRow run_one(const SplittingMethod& method, const std::shared_ptr<const SplitSystem<double>>& system,
                 const PhaseState<double>& initial, double tau, const SweepOptions& options) {
    SweepRow row;
    row.method = method.id;
    row.tau = tau;
    row.stages = method.stages;
    row.tau_over_s = tau / method.stages;
    row.niter = options.niter;
    try {
        IntegrationPlan<double> plan;
        plan.method = method;
        plan.system = system;
        plan.initial = initial;
        plan.tau = tau;
        plan.n_steps = options.niter;
        plan.sample_every = options.sample_every;
        plan.compensated = options.compensated;
        plan.keep_states = false;
        plan.allow_degraded = options.allow_degraded;
        auto rec = integrate(plan);
        row.max_dE_rel = rec.max_energy_deviation;
        row.final_t = rec.final_state.t;
        if (!rec.ok()) row.status = rec.error;
    } catch (const std::exception& e) {
        row.status = e.what();
    }
    // Keep the status column a single CSV field.
    std::replace(row.status.begin(), row.status.end(), ',', ';');
    std::replace(row.status.begin(), row.status.end(), '\n', ' ');
    return row;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_e(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

}  // namespace

std::vector<SweepRow> efficiency_sweep(const std::vector<SplittingMethod>& methods,
                                       std::shared_ptr<const SplitSystem<double>> system,
                                       const PhaseState<double>& initial, const std::vector<double>& taus,
                                       const SweepOptions& options) {
    if (methods.empty()) throw std::invalid_argument("sweep: no methods");
    if (taus.empty()) throw std::invalid_argument("sweep: no step sizes");
    const std::size_t total = methods.size() * taus.size();
    std::vector<SweepRow> rows(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++)
            rows[k] = run_one(methods[k / taus.size()], system, initial, taus[k % taus.size()], options);
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(total)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_status) {
    out << "method,tau,tau_over_s,stages,niter,max_dE_rel,final_t" << (with_status ? ",status" : "") << '\n';
    for (const auto& r : rows) {
        out << r.method << ',' << format_g17(r.tau) << ',' << format_g17(r.tau_over_s) << ',' << r.stages << ','
            << r.niter << ',' << format_e(r.max_dE_rel) << ',' << format_g17(r.final_t);
        if (with_status) out << ',' << r.status;
        out << '\n';
    }
}

std::vector<SweepRow> sort_by_cost(std::vector<SweepRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
        if (x.tau_over_s != y.tau_over_s) return x.tau_over_s < y.tau_over_s;
        return x.method < y.method;
    });
    return rows;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<double>& rec, bool with_state) {
    out << "t,deltaE_rel";
    const std::size_t d = rec.states.empty() ? 0 : rec.states.front().dim();
    if (with_state) {
        for (std::size_t i = 1; i <= d; ++i) out << ",q" << i;
        for (std::size_t i = 1; i <= d; ++i) out << ",p" << i;
    }
    out << '\n';
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        out << format_g17(rec.times[k]) << ',' << format_e(rec.energy_deviation[k]);
        if (with_state && k < rec.states.size()) {
            for (double v : rec.states[k].q) out << ',' << format_g17(v);
            for (double v : rec.states[k].p) out << ',' << format_g17(v);
        }
        out << '\n';
    }
}

}  // namespace symsplit
