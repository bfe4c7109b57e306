#include "symsplit/cli.hpp"
#include "symsplit/coeffs.hpp"
#include "symsplit/orderconds.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace symsplit;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "symsplit_test_cli";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double column(const std::string& line, std::size_t index) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= index; ++i) std::getline(ss, cell, ',');
    return std::stod(cell);
}

}  // namespace

TEST_CASE("verify exit codes") {
    SUBCASE("--all certifies the registry") {
        auto r = run({"verify", "--all"});
        CHECK(r.code == kExitOk);
        for (const auto& m : registry()) CHECK(r.out.find(m.id) != std::string::npos);
        CHECK(r.out.find("NOT") == std::string::npos);
    }
    SUBCASE("single method with an explicit tolerance") {
        CHECK(run({"verify", "ABA104", "--tol", "1e-30"}).code == kExitOk);
    }
    SUBCASE("leapfrog is not of order (10,4)") {
        CHECK(run({"verify", "LEAPFROG", "--order", "10,4"}).code == kExitFailure);
    }
    SUBCASE("unknown method is a usage error") {
        auto r = run({"verify", "NOPE"});
        CHECK(r.code == kExitUsage);
        CHECK(r.err.find("NOPE") != std::string::npos);
    }
    SUBCASE("no method at all") { CHECK(run({"verify"}).code == kExitUsage); }
    SUBCASE("unknown subcommand and missing subcommand") {
        CHECK(run({"frobnicate"}).code == kExitUsage);
        CHECK(run({}).code == kExitUsage);
    }
}

TEST_CASE("verify reads extra methods from a catalog") {
    const auto path = scratch("extra.cat");
    {
        std::ofstream f(path);
        write_catalog(f, {make_bab("BAB_LF", {2, 2}, 1, {"1"}, {"0.5"})});
    }
    CHECK(run({"verify", "BAB_LF", "--catalog", path.string()}).code == kExitOk);
    CHECK(run({"verify", "BAB_LF"}).code == kExitUsage);
}

TEST_CASE("integrate samples every 20 time units including t = 0") {
    auto r = run({"integrate", "--method", "ABA864", "--tau", "0.1", "--tf", "10000", "--sample-dt", "20"});
    REQUIRE(r.code == kExitOk);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 502);
    CHECK(lines.front() == "t,deltaE_rel");
    CHECK(column(lines[1], 0) == 0.0);
    for (std::size_t k = 1; k < lines.size(); ++k) CHECK(column(lines[k], 0) == doctest::Approx(20.0 * (k - 1)));
    CHECK(r.err.find("100000 steps") != std::string::npos);
}

TEST_CASE("integrate with eps = 0 conserves energy to round-off") {
    auto r = run({"integrate", "--method", "ABA82", "--eps", "0", "--tau", "0.1", "--niter", "20000", "--sample-every",
                  "100"});
    REQUIRE(r.code == kExitOk);
    const auto lines = lines_of(r.out);
    double worst = 0;
    for (std::size_t k = 1; k < lines.size(); ++k) worst = std::max(worst, std::abs(column(lines[k], 1)));
    CHECK(worst <= 1e-12);
}

TEST_CASE("integrate usage errors") {
    CHECK(run({"integrate", "--method", "ABA82", "--tau", "0.1"}).code == kExitUsage);
    CHECK(run({"integrate", "--method", "ABA82", "--tau", "0.1", "--tf", "10", "--niter", "5"}).code == kExitUsage);
    CHECK(run({"integrate", "--method", "ABA82", "--tau", "0.1", "--tf", "10", "--sample-dt", "0.25"}).code ==
          kExitUsage);
    CHECK(run({"integrate", "--method", "ABA82", "--tau", "0.1", "--tf", "10", "--model", "helio"}).code ==
          kExitUsage);
    CHECK(run({"integrate", "--method", "XYZ", "--tau", "0.1", "--tf", "10"}).code == kExitUsage);
    const std::string outer = std::string(SYMSPLIT_DATA_DIR) + "/outer4.txt";
    SUBCASE("ABA on the heliocentric model needs --allow-degraded") {
        const std::vector<std::string> base{"integrate", "--method", "ABA82", "--model", "helio", "--elements",
                                            outer,       "--tau",    "10",    "--niter", "10"};
        CHECK(run(base).code == kExitUsage);
        auto with = base;
        with.push_back("--allow-degraded");
        CHECK(run(with).code == kExitOk);
    }
}

TEST_CASE("integrate writes to a file and with the state columns") {
    const auto path = scratch("traj.csv");
    auto r = run({"integrate", "--method", "LEAPFROG", "--tau", "0.1", "--niter", "10", "--with-state", "-o",
                  path.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    const auto lines = lines_of(slurp(path));
    REQUIRE(lines.size() == 12);
    CHECK(lines.front() == "t,deltaE_rel,q1,q2,p1,p2");
}

TEST_CASE("heliocentric ABAH1064 run has bounded energy error without drift") {
    const std::string planets = std::string(SYMSPLIT_DATA_DIR) + "/planets.txt";
    auto r = run({"integrate", "--method", "ABAH1064", "--model", "helio", "--elements", planets, "--tau", "0.25",
                  "--niter", "10000", "--sample-every", "100"});
    REQUIRE(r.code == kExitOk);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 102);
    std::vector<double> dev;
    for (std::size_t k = 1; k < lines.size(); ++k) dev.push_back(std::abs(column(lines[k], 1)));
    double first_half = 0, second_half = 0;
    for (std::size_t k = 1; k <= 50; ++k) first_half = std::max(first_half, dev[k]);
    for (std::size_t k = 51; k < dev.size(); ++k) second_half = std::max(second_half, dev[k]);
    // tau is close to Mercury's period, so the level is high but must stay flat
    CHECK(second_half < 1e-5);
    // A secular drift would roughly double the error between the halves.
    CHECK(second_half < 1.5 * first_half + 1e-14);
}

TEST_CASE("sweep") {
    SUBCASE("rows, status column and the plot-data file") {
        const auto plot = scratch("plot.csv");
        auto r = run({"sweep", "--methods", "LEAPFROG,ABA82", "--taus", "0.1,0.05", "--niter", "2000", "--plot-data",
                      plot.string()});
        REQUIRE(r.code == kExitOk);
        const auto lines = lines_of(r.out);
        REQUIRE(lines.size() == 5);
        CHECK(lines.front() == "method,tau,tau_over_s,stages,niter,max_dE_rel,final_t,status");
        double lf = 0, aba = 0;
        for (std::size_t k = 1; k < lines.size(); ++k) {
            CHECK(lines[k].substr(lines[k].rfind(',') + 1) == "ok");
            if (column(lines[k], 1) == 0.05) (lines[k].rfind("LEAPFROG", 0) == 0 ? lf : aba) = column(lines[k], 5);
        }
        CHECK(aba > 0);
        CHECK(aba < lf);

        const auto plines = lines_of(slurp(plot));
        REQUIRE(plines.size() == 5);
        CHECK(plines.front() == "method,tau,tau_over_s,stages,niter,max_dE_rel,final_t");
        for (std::size_t k = 2; k < plines.size(); ++k) CHECK(column(plines[k - 1], 2) <= column(plines[k], 2));
    }
    SUBCASE("the default grid has 15 step sizes") {
        auto r = run({"sweep", "--methods", "LEAPFROG", "--niter", "1"});
        REQUIRE(r.code == kExitOk);
        const auto lines = lines_of(r.out);
        REQUIRE(lines.size() == 16);
        for (std::size_t i = 1; i <= 15; ++i) CHECK(column(lines[i], 1) == std::ldexp(1.0, -static_cast<int>(i)));
    }
    SUBCASE("usage errors") {
        CHECK(run({"sweep", "--methods", ""}).code == kExitUsage);
        CHECK(run({"sweep"}).code == kExitUsage);
        CHECK(run({"sweep", "--methods", "ABA82", "--taus", "0.1"}).code == kExitUsage);
        CHECK(run({"sweep", "--methods", "ABA82", "--taus", "0.1,-1"}).code == kExitUsage);
        CHECK(run({"sweep", "--methods", "ABA82", "--taus", "0.1,abc"}).code == kExitUsage);
    }
}

TEST_CASE("output is byte-identical across runs and job counts") {
    const std::vector<std::string> args{"sweep", "--methods", "ABA82,LEAPFROG,ABA864", "--taus", "0.2,0.1,0.05",
                                        "--niter", "500"};
    auto one = run(args);
    auto again = run(args);
    auto threaded = args;
    threaded.insert(threaded.end(), {"--jobs", "3"});
    auto three = run(threaded);
    REQUIRE(one.code == kExitOk);
    CHECK(one.out == again.out);
    CHECK(one.out == three.out);

    const std::vector<std::string> integ{"integrate", "--method", "ABA104", "--tau", "0.05", "--niter", "2000"};
    CHECK(run(integ).out == run(integ).out);
}

TEST_CASE("print-config round-trips through a config file") {
    const std::vector<std::string> args{"integrate", "--method", "ABA84", "--tau", "0.05", "--niter",
                                        "300",       "--eps",    "0.03",  "--no-compensated"};
    auto printed = args;
    printed.push_back("--print-config");
    auto cfg = run(printed);
    REQUIRE(cfg.code == kExitOk);
    CHECK(cfg.out.find("method = ABA84") != std::string::npos);
    CHECK(cfg.out.find("eps = 0.03") != std::string::npos);

    const auto path = scratch("run.cfg");
    {
        std::ofstream f(path);
        f << "# reproduction manifest\n" << cfg.out;
    }
    auto direct = run(args);
    auto from_file = run({"integrate", "--config", path.string()});
    REQUIRE(direct.code == kExitOk);
    CHECK(from_file.code == kExitOk);
    CHECK(from_file.out == direct.out);

    // Printing again from the file reproduces the same settings.
    CHECK(run({"integrate", "--config", path.string(), "--print-config"}).out == cfg.out);

    SUBCASE("flags override the file") {
        auto over = run({"integrate", "--config", path.string(), "--tau", "0.1", "--print-config"});
        CHECK(over.out.find("tau = 0.1\n") != std::string::npos);
        CHECK(over.out.find("method = ABA84") != std::string::npos);
    }
    SUBCASE("a broken config file is a usage error") {
        const auto bad = scratch("bad.cfg");
        {
            std::ofstream f(bad);
            f << "tau 0.1\n";
        }
        CHECK(run({"integrate", "--config", bad.string()}).code == kExitUsage);
        CHECK(run({"integrate", "--config", (scratch("missing.cfg")).string()}).code == kExitUsage);
    }
}

TEST_CASE("config parsing") {
    std::istringstream in("# comment\n\n  tau = 0.5  \nmethods=ABA82,ABA84\n");
    const auto entries = parse_config(in);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0] == std::pair<std::string, std::string>{"tau", "0.5"});
    CHECK(entries[1].second == "ABA82,ABA84");
    std::istringstream bad("= 3\n");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    CHECK(format_config(entries) == "tau = 0.5\nmethods = ABA82,ABA84\n");
}

TEST_CASE("solve writes importable solutions") {
    auto import = [](const std::string& text) {
        std::istringstream in(text);
        return read_catalog(in);
    };
    SUBCASE("order (2,2) with one stage is the leapfrog") {
        auto r = run({"solve", "--order", "2,2", "--stages", "1", "--id", "LF"});
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.rfind("# selection:", 0) == 0);
        auto ms = import(r.out);
        REQUIRE(ms.size() == 1);
        CHECK(ms[0].id == "LF");
        const auto lf = registry_lookup("LEAPFROG");
        ScopedDigits guard(50);
        CHECK(abs(ms[0].a_kernel.back().exact() - lf.a_kernel.back().exact()) < Real("1e-39"));
        CHECK(certify(ms[0], Real("1e-30")).certified);
    }
    SUBCASE("order (8,2) with four stages is all positive") {
        auto r = run({"solve", "--order", "8,2", "--stages", "4", "--id", "P4"});
        REQUIRE(r.code == kExitOk);
        auto ms = import(r.out);
        REQUIRE(ms.size() == 1);
        ScopedDigits guard(50);
        CHECK(certify(ms[0], Real("1e-30")).certified);
        for (const auto& a : ms[0].a_kernel) CHECK(a.exact() >= 0);
        for (const auto& b : ms[0].b_kernel) CHECK(b.exact() > 0);
    }
    SUBCASE("files and the path log") {
        const auto sol = scratch("p4.cat");
        auto r = run({"solve", "--order", "8,2", "--stages", "4", "-o", sol.string()});
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.empty());
        CHECK(import(slurp(sol)).size() == 1);
    }
    SUBCASE("usage errors and exhaustion") {
        CHECK(run({"solve", "--order", "10,6,4", "--stages", "2"}).code == kExitUsage);
        CHECK(run({"solve", "--order", "x", "--stages", "2"}).code == kExitUsage);
        CHECK(run({"solve", "--order", "4,4", "--stages", "3", "--strategy", "bogus"}).code == kExitUsage);
        CHECK(run({"solve", "--order", "2,2", "--stages", "1", "--zero", "a9"}).code == kExitUsage);
        // (4,4) needs negative coefficients, so an all-positive grid search finds nothing.
        auto none = run({"solve", "--order", "4,4", "--stages", "3", "--strategy", "grid", "--grid", "6"});
        CHECK(none.code == kExitNoSolution);
    }
}

TEST_CASE("catalog") {
    auto all = run({"catalog"});
    REQUIRE(all.code == kExitOk);
    std::istringstream in(all.out);
    CHECK(read_catalog(in).size() == registry().size());

    auto some = run({"catalog", "--ids", "ABA82,LEAPFROG"});
    REQUIRE(some.code == kExitOk);
    std::istringstream in2(some.out);
    auto ms = read_catalog(in2);
    REQUIRE(ms.size() == 2);
    CHECK(ms[0].id == "ABA82");
    CHECK(ms[1].id == "LEAPFROG");
    CHECK(run({"catalog", "--ids", "NOPE"}).code == kExitUsage);

    const auto path = scratch("registry.cat");
    REQUIRE(run({"catalog", "-o", path.string()}).code == kExitOk);
    auto round = run({"catalog", "--input", path.string()});
    CHECK(round.out == all.out);
}
