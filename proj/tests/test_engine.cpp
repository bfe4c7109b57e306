#include "oracles.hpp"
#include "symsplit/engine.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace symsplit;

namespace {

std::shared_ptr<PerturbedKepler<double>> kepler_system(double eps) { return std::make_shared<PerturbedKepler<double>>(eps); }

IntegrationPlan<double> kepler_plan(const std::string& id, double eps, double tau, long n, long every = 1) {
    IntegrationPlan<double> plan;
    plan.method = registry_lookup(id);
    plan.system = kepler_system(eps);
    plan.initial = PerturbedKepler<double>::initial_state(0.25);
    plan.tau = tau;
    plan.n_steps = n;
    plan.sample_every = every;
    return plan;
}

double rel_distance(const PhaseState<double>& a, const PhaseState<double>& b) {
    double scale = 0;
    for (std::size_t i = 0; i < b.dim(); ++i) scale = std::max({scale, std::abs(b.q[i]), std::abs(b.p[i])});
    return oracle::state_distance(a, b) / scale;
}

// Local error of one step against the reference flow, at the current Real precision.
double local_error(const std::string& id, const Real& eps, const Real& tau) {
    PerturbedKepler<Real> sys(eps);
    auto x0 = PerturbedKepler<Real>::initial_state(Real(1) / 4);
    auto one = step(registry_lookup(id), sys, x0, tau);
    auto ref = oracle::reference_flow(sys, x0, tau, 100);
    return static_cast<double>(oracle::state_distance(one, ref));
}

double slope_over(const std::string& id, const Real& eps, double lo, double hi, int points) {
    std::vector<double> taus, errs;
    for (int k = 0; k < points; ++k) {
        const double tau = lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
        taus.push_back(tau);
        errs.push_back(local_error(id, eps, Real(tau)));
    }
    return oracle::loglog_slope(taus, errs);
}

// Harmonic oscillator whose B flow throws on a given call.
class FailingSystem final : public SplitSystem<double> {
public:
    explicit FailingSystem(int fail_at) : fail_at_(fail_at) {}
    std::string name() const override { return "failing"; }
    std::size_t dim() const override { return 2; }
    bool approximate_b() const override { return false; }
    void flow_a(PhaseState<double>& x, const double& tau) const override {
        for (std::size_t i = 0; i < 2; ++i) x.add_q(i, tau * x.p[i]);
    }
    void flow_b(PhaseState<double>& x, const double& tau) const override {
        if (++calls_ == fail_at_) throw std::runtime_error("injected failure");
        for (std::size_t i = 0; i < 2; ++i) x.add_p(i, -tau * x.q[i]);
    }
    double energy_a(const PhaseState<double>& x) const override { return (x.p[0] * x.p[0] + x.p[1] * x.p[1]) / 2; }
    double energy_b(const PhaseState<double>& x) const override { return (x.q[0] * x.q[0] + x.q[1] * x.q[1]) / 2; }

private:
    int fail_at_;
    mutable int calls_ = 0;
};

}  // namespace

TEST_CASE("step: leapfrog on pure Kepler is the Kepler flow") {
    PerturbedKepler<double> sys(0.0);
    auto x0 = PerturbedKepler<double>::initial_state(0.25);
    for (double tau : {1e-3, 0.05, 0.5}) {
        auto a = step(registry_lookup("LEAPFROG"), sys, x0, tau);
        auto b = kepler_flow(x0, 1.0, tau);
        CHECK(oracle::state_distance(a, b) <= 1e-13);
        CHECK(a.t == tau);
    }
}

TEST_CASE("step: every registry method is time-symmetric") {
    PerturbedKepler<double> sys(1e-3);
    auto x0 = PerturbedKepler<double>::initial_state(0.25);
    for (const auto& m : registry()) {
        for (double tau : {1e-2, 0.1, 0.4}) {
            auto fwd = step(m, sys, x0, tau);
            auto back = step(m, sys, fwd, -tau);
            CAPTURE(m.id);
            CAPTURE(tau);
            CHECK(oracle::state_distance(back, x0) <= 1e-12);
        }
    }
}

TEST_CASE("step: ABA82 local error falls eightfold per halving when eps^2 tau^3 dominates") {
    // eps = 1e-3, tau <= 0.1: eps tau^9 <= 1e-12 against eps^2 tau^3 ~ 1e-9.
    ScopedDigits guard(40);
    const Real eps = parse_real("1e-3");
    for (double tau : {0.1, 0.05}) {
        const double ratio = local_error("ABA82", eps, Real(tau)) / local_error("ABA82", eps, Real(tau / 2));
        CAPTURE(tau);
        CHECK(ratio == doctest::Approx(8.0).epsilon(0.2));
    }
}

TEST_CASE("step: the full step is symplectic for every registry method") {
    PerturbedKepler<double> sys(1e-3);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (const auto& m : registry()) {
        CAPTURE(m.id);
        for (int trial = 0; trial < 3; ++trial) {
            auto x = PerturbedKepler<double>::initial_state(0.25);
            for (auto& v : x.q) v += u(rng);
            for (auto& v : x.p) v += u(rng);
            auto defect = oracle::symplectic_defect<double>(
                [&](const PhaseState<double>& s) { return step(m, sys, s, 0.1); }, x, 1e-5);
            CHECK(defect <= 1e-9);
        }
    }
}

TEST_CASE("step: compatibility of method kind and B flow") {
    auto setup = helio_system({{"A", 1e-3, {1.0, 0.01, 0.0, 0.0, 0.0, 0.0}}, {"B", 1e-4, {3.0, 0.02, 0.01, 0.0, 0.0, 1.0}}});
    const auto& helio = *setup.system;
    CHECK_THROWS_AS(step(registry_lookup("ABA82"), helio, setup.initial, 0.1), CompatibilityError);
    CHECK_NOTHROW(step(registry_lookup("ABA82"), helio, setup.initial, 0.1, true));
    CHECK_NOTHROW(step(registry_lookup("ABAH864"), helio, setup.initial, 0.1));
}

TEST_CASE("step: flow failures carry the stage index") {
    PerturbedKepler<double> sys(1e-3);
    PhaseState<double> bad({0.0, 0.0}, {0.0, 1.0});
    try {
        step(registry_lookup("ABA104"), sys, bad, 0.1);
        FAIL("expected a StepError");
    } catch (const StepError& e) {
        CHECK(e.stage == 1);
        CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
    }
}

TEST_CASE("integrate: zero steps returns the initial state only") {
    auto plan = kepler_plan("ABA864", 1e-2, 0.1, 0);
    auto rec = integrate(plan);
    REQUIRE(rec.ok());
    CHECK(rec.times == std::vector<double>{0.0});
    CHECK(rec.energy_deviation == std::vector<double>{0.0});
    CHECK(rec.final_state.q == plan.initial.q);
    CHECK(rec.steps_done == 0);
    CHECK(rec.a_evaluations == 0);
}

TEST_CASE("integrate: plan validation") {
    auto plan = kepler_plan("ABA82", 1e-2, 0.0, 10);
    CHECK_THROWS_AS(integrate(plan), std::invalid_argument);
    plan.tau = 0.1;
    plan.sample_every = 0;
    CHECK_THROWS_AS(integrate(plan), std::invalid_argument);
    plan.sample_every = 1;
    plan.initial = PhaseState<double>({1.0, 0.0, 0.0}, {0.0, 1.0, 0.0});
    CHECK_THROWS_AS(integrate(plan), std::invalid_argument);
}

TEST_CASE("integrate: FSAL merging matches the unmerged run") {
    for (const char* id : {"ABA82", "ABA864", "ABAH1064"}) {
        auto plan = kepler_plan(id, 1e-2, 0.05, 1000, 1000);
        plan.fsal = true;
        auto merged = integrate(plan);
        plan.fsal = false;
        auto plain = integrate(plan);
        REQUIRE(merged.ok());
        REQUIRE(plain.ok());
        CAPTURE(id);
        // the two runs round differently; allow about 1e-15 per step
        CHECK(rel_distance(merged.final_state, plain.final_state) <= 1e-12);
        CHECK(merged.a_evaluations < plain.a_evaluations);
    }
}

TEST_CASE("integrate: stage evaluation count under FSAL") {
    for (const char* id : {"LEAPFROG", "ABA82", "ABA104", "ABA1064", "ABAH844"}) {
        const auto& m = registry_lookup(id);
        auto plan = kepler_plan(id, 1e-2, 0.05, 777, 777);
        auto rec = integrate(plan);
        CAPTURE(id);
        CHECK(rec.b_evaluations == 777L * m.stages);
        CHECK(rec.a_evaluations == 777L * m.stages + 1);
        CHECK(rec.tau_over_s == doctest::Approx(0.05 / m.stages));
    }
}

TEST_CASE("integrate: 500 samples at t = 20 k over [0, 10000]") {
    auto plan = kepler_plan("ABA82", 1e-2, 0.1, 100000, 200);
    plan.keep_states = false;
    auto rec = integrate(plan);
    REQUIRE(rec.ok());
    REQUIRE(rec.times.size() == 501);
    for (std::size_t k = 0; k < rec.times.size(); ++k) CHECK(rec.times[k] == doctest::Approx(20.0 * static_cast<double>(k)).epsilon(1e-12));
    CHECK(rec.final_state.t == doctest::Approx(10000.0).epsilon(1e-12));
}

TEST_CASE("integrate: a failing flow aborts with a partial record") {
    auto plan = kepler_plan("ABA82", 0.0, 0.1, 100, 1);
    plan.system = std::make_shared<FailingSystem>(50);
    auto rec = integrate(plan);
    CHECK_FALSE(rec.ok());
    CHECK(rec.error.find("step 13") != std::string::npos);
    CHECK(rec.steps_done == 12);
    CHECK(rec.times.size() == 13);
}

TEST_CASE("compensated summation keeps round-off flat on pure Kepler") {
    auto run = [](long n) {
        auto plan = kepler_plan("LEAPFROG", 0.0, 0.01, n, n / 10);
        plan.compensated = true;
        plan.keep_states = false;
        auto rec = integrate(plan);
        REQUIRE(rec.ok());
        return rec.max_energy_deviation;
    };
    const double short_run = run(1000), long_run = run(1000000);
    CAPTURE(short_run);
    CAPTURE(long_run);
    CHECK(long_run <= 10 * std::max(short_run, 1e-16));
}

TEST_CASE("sweep: one method and one step size give one row") {
    auto rows = efficiency_sweep({registry_lookup("ABA82")}, kepler_system(1e-2),
                                 PerturbedKepler<double>::initial_state(0.25), {0.05}, SweepOptions{2000, 1, true, false, 1});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == "ABA82");
    CHECK(rows[0].max_dE_rel > 0);
    CHECK(rows[0].tau_over_s == doctest::Approx(0.05 / 4));
    CHECK(rows[0].final_t == doctest::Approx(100.0));
    CHECK(rows[0].status == "ok");
    CHECK_THROWS(efficiency_sweep({}, kepler_system(1e-2), PerturbedKepler<double>::initial_state(0.25), {0.05}, {}));
}

TEST_CASE("sweep: leapfrog energy error falls fourfold per halving") {
    auto rows = efficiency_sweep({registry_lookup("LEAPFROG")}, kepler_system(1e-2),
                                 PerturbedKepler<double>::initial_state(0.25), {0.02, 0.01, 0.005},
                                 SweepOptions{100000, 1, true, false, 1});
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const double ratio = rows[k].max_dE_rel / rows[k + 1].max_dE_rel;
        CAPTURE(ratio);
        CHECK(ratio >= 4.0 / 1.3);
        CHECK(ratio <= 4.0 * 1.3);
    }
}

TEST_CASE("sweep: failed runs are recorded and the sweep continues") {
    SplittingMethod bad = registry_lookup("ABA82");
    auto setup = helio_system({{"A", 1e-3, {1.0, 0.01, 0.0, 0.0, 0.0, 0.0}}, {"B", 1e-4, {3.0, 0.02, 0.01, 0.0, 0.0, 1.0}}});
    auto rows = efficiency_sweep({bad, registry_lookup("ABAH864")}, setup.system, setup.initial, {0.1},
                                 SweepOptions{100, 1, true, false, 1});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].status != "ok");
    CHECK(rows[0].status.find(',') == std::string::npos);
    CHECK(rows[1].status == "ok");
}

TEST_CASE("sweep: CSV output is deterministic and independent of the thread count") {
    std::vector<SplittingMethod> methods{registry_lookup("ABA82"), registry_lookup("ABA864"), registry_lookup("LEAPFROG")};
    auto run = [&](unsigned jobs) {
        auto rows = efficiency_sweep(methods, kepler_system(1e-2), PerturbedKepler<double>::initial_state(0.25),
                                     {0.1, 0.05, 0.025}, SweepOptions{3000, 1, true, false, jobs});
        std::ostringstream out;
        write_sweep_csv(out, rows, false);
        return out.str();
    };
    const auto a = run(1), b = run(1), c = run(3);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(a.rfind("method,tau,tau_over_s,stages,niter,max_dE_rel,final_t\n", 0) == 0);
    CHECK(std::count(a.begin(), a.end(), '\n') == 10);
}

TEST_CASE("sweep: rows sort by cost") {
    std::vector<SweepRow> rows(3);
    rows[0].method = "B";
    rows[0].tau_over_s = 0.2;
    rows[1].method = "A";
    rows[1].tau_over_s = 0.1;
    rows[2].method = "C";
    rows[2].tau_over_s = 0.1;
    auto sorted = sort_by_cost(rows);
    CHECK(sorted[0].method == "A");
    CHECK(sorted[1].method == "C");
    CHECK(sorted[2].method == "B");
}

TEST_CASE("trajectory CSV columns") {
    auto plan = kepler_plan("ABA82", 1e-2, 0.1, 4, 2);
    auto rec = integrate(plan);
    std::ostringstream plain, full;
    write_trajectory_csv(plain, rec, false);
    write_trajectory_csv(full, rec, true);
    const std::string a = plain.str(), b = full.str();
    CHECK(a.rfind("t,deltaE_rel\n0,0.000000e+00\n", 0) == 0);
    CHECK(b.rfind("t,deltaE_rel,q1,q2,p1,p2\n", 0) == 0);
    CHECK(std::count(a.begin(), a.end(), '\n') == 4);
}

TEST_CASE("default step-size grid") {
    auto taus = default_tau_grid();
    REQUIRE(taus.size() == 15);
    CHECK(taus.front() == 0.5);
    CHECK(taus.back() == std::ldexp(1.0, -15));
}

TEST_CASE("ABA864 local error follows its generalized order") {
    ScopedDigits guard(40);
    SUBCASE("eps tau^9 regime") {
        // eps = 1e-8: eps^2 tau^7 <= 1e-16 * 0.3^7 stays far below eps tau^9 over the window.
        const double slope = slope_over("ABA864", parse_real("1e-8"), 0.02, 0.3, 5);
        CAPTURE(slope);
        CHECK(slope == doctest::Approx(9.0).epsilon(0.5 / 9.0));
    }
    SUBCASE("eps^3 tau^5 regime") {
        // eps = 1e-1, tau <= 1e-2: eps^3 tau^5 exceeds eps^2 tau^7 by 1 / (eps tau^2) >= 1e5.
        const double slope = slope_over("ABA864", parse_real("1e-1"), 1e-3, 1e-2, 5);
        CAPTURE(slope);
        CHECK(slope == doctest::Approx(5.0).epsilon(0.5 / 5.0));
    }
}
