#pragma once

#include "symsplit/coeffs.hpp"
#include "symsplit/models.hpp"
#include "symsplit/state.hpp"

#include <cmath>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace symsplit {

/// A flow failed inside a composition; `what()` names the stage.
struct StepError : std::runtime_error {
    StepError(const std::string& msg, int stage_) : std::runtime_error(msg), stage(stage_) {}
    int stage;
};

struct CompatibilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// ABA and BAB methods assume the exact B flow. Running them on a system whose
/// B flow is approximate degrades the order to (r, 4, 2); that needs `allow_degraded`.
void check_compatible(const SplittingMethod& method, bool approximate_b, bool allow_degraded);

/// Expanded coefficients of a method bound to a system, reused across steps.
template <class T>
class Composition {
public:
    Composition(const SplittingMethod& method, const SplitSystem<T>& system, bool allow_degraded = false)
        : system_(&system), seq_(method.expand<T>()), stages_(method.stages) {
        check_compatible(method, system.approximate_b(), allow_degraded);
    }

    int stages() const { return stages_; }
    const StageSequence<T>& sequence() const { return seq_; }
    const SplitSystem<T>& system() const { return *system_; }

    /// A flow for `coef * tau`; returns the number of A evaluations (0 when coef is zero).
    long apply_a(PhaseState<T>& x, const T& coef, const T& tau, int stage) const {
        if (coef == 0) return 0;
        try {
            system_->flow_a(x, coef * tau);
        } catch (const std::exception& e) {
            throw StepError("stage " + std::to_string(stage) + " (A flow): " + e.what(), stage);
        }
        return 1;
    }

    void apply_b(PhaseState<T>& x, const T& coef, const T& tau, int stage) const {
        try {
            system_->flow_b(x, coef * tau);
        } catch (const std::exception& e) {
            throw StepError("stage " + std::to_string(stage) + " (B flow): " + e.what(), stage);
        }
    }

    /// Applies b_1..b_s with the interior A flows a_2..a_s; the caller owns a_1 and a_{s+1}.
    long apply_interior(PhaseState<T>& x, const T& tau) const {
        long evals = 0;
        for (int i = 0; i < stages_; ++i) {
            apply_b(x, seq_.b[static_cast<std::size_t>(i)], tau, i + 1);
            if (i + 1 < stages_) evals += apply_a(x, seq_.a[static_cast<std::size_t>(i + 1)], tau, i + 2);
        }
        return evals;
    }

    /// One full step: A(a_1 tau) first, then B(b_1 tau), A(a_2 tau), ..., A(a_{s+1} tau).
    long step(PhaseState<T>& x, const T& tau) const {
        long evals = apply_a(x, seq_.a.front(), tau, 1);
        evals += apply_interior(x, tau);
        evals += apply_a(x, seq_.a.back(), tau, stages_ + 1);
        x.add_t(tau);
        return evals;
    }

private:
    const SplitSystem<T>* system_;
    StageSequence<T> seq_;
    int stages_;
};

template <class T>
PhaseState<T> step(const SplittingMethod& method, const SplitSystem<T>& system, PhaseState<T> x, const T& tau,
                   bool allow_degraded = false) {
    Composition<T> comp(method, system, allow_degraded);
    comp.step(x, tau);
    return x;
}

template <class T>
struct IntegrationPlan {
    SplittingMethod method;
    std::shared_ptr<const SplitSystem<T>> system;
    PhaseState<T> initial;
    T tau{0};
    long n_steps = 0;
    long sample_every = 1;
    bool compensated = false;
    bool fsal = true;
    bool keep_states = true;
    bool allow_degraded = false;

    void validate() const {
        if (!system) throw std::invalid_argument("plan: no system");
        if (tau == 0) throw std::invalid_argument("plan: tau must be non-zero");
        if (n_steps < 0) throw std::invalid_argument("plan: negative step count");
        if (sample_every < 1) throw std::invalid_argument("plan: sample_every must be at least 1");
        if (initial.dim() != system->dim()) throw std::invalid_argument("plan: initial state has the wrong dimension");
    }
};

template <class T>
struct TrajectoryRecord {
    std::vector<T> times;
    std::vector<PhaseState<T>> states;  // empty unless the plan keeps states
    std::vector<double> energy_deviation;
    double max_energy_deviation = 0.0;
    PhaseState<T> final_state;
    long steps_done = 0;
    long a_evaluations = 0;
    long b_evaluations = 0;
    double tau_over_s = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
};

/// Runs the plan. With FSAL the trailing A flow of a step is merged with the
/// leading A flow of the next, except at sample points where the true step
/// boundary state is needed. A flow failure stops the run and is recorded.
template <class T>
TrajectoryRecord<T> integrate(const IntegrationPlan<T>& plan) {
    using std::abs;
    plan.validate();
    const Composition<T> comp(plan.method, *plan.system, plan.allow_degraded);
    const auto& seq = comp.sequence();
    const SplitSystem<T>& sys = *plan.system;

    TrajectoryRecord<T> rec;
    rec.tau_over_s = static_cast<double>(plan.tau) / comp.stages();

    PhaseState<T> x = plan.initial.plain();
    x.set_compensated(plan.compensated);
    const T h0 = sys.energy(x);

    auto sample = [&](const PhaseState<T>& s) {
        rec.times.push_back(s.t);
        T h = sys.energy(s);
        double dev = h0 != 0 ? static_cast<double>(abs(h - h0) / abs(h0)) : static_cast<double>(abs(h - h0));
        rec.energy_deviation.push_back(dev);
        if (dev > rec.max_energy_deviation || !std::isfinite(dev)) rec.max_energy_deviation = dev;
        if (plan.keep_states) rec.states.push_back(s.plain());
    };
    sample(x);

    const T& a_first = seq.a.front();
    const T& a_last = seq.a.back();
    bool pending = false;  // a trailing A(a_{s+1} tau) has not been applied yet
    try {
        for (long n = 1; n <= plan.n_steps; ++n) {
            if (pending)
                rec.a_evaluations += comp.apply_a(x, a_first + a_last, plan.tau, 1);
            else
                rec.a_evaluations += comp.apply_a(x, a_first, plan.tau, 1);
            rec.a_evaluations += comp.apply_interior(x, plan.tau);
            rec.b_evaluations += comp.stages();
            x.t = plan.initial.t + T(n) * plan.tau;  // no drift from repeated addition
            rec.steps_done = n;

            const bool at_sample = n % plan.sample_every == 0 || n == plan.n_steps;
            if (plan.fsal && !at_sample) {
                pending = true;
                continue;
            }
            rec.a_evaluations += comp.apply_a(x, a_last, plan.tau, comp.stages() + 1);
            pending = false;
            if (!x.finite()) throw StepError("non-finite state", comp.stages() + 1);
            if (n % plan.sample_every == 0) sample(x);
        }
    } catch (const std::exception& e) {
        rec.error = "step " + std::to_string(rec.steps_done + 1) + ": " + e.what();
    }
    rec.final_state = x.plain();
    return rec;
}

/// tau_i = 1/2^i for i = 1..15.
std::vector<double> default_tau_grid();

struct SweepOptions {
    long niter = 100000;
    long sample_every = 1;
    bool compensated = true;
    bool allow_degraded = false;
    unsigned jobs = 1;
};

struct SweepRow {
    std::string method;
    double tau = 0.0;
    double tau_over_s = 0.0;
    int stages = 0;
    long niter = 0;
    double max_dE_rel = 0.0;
    double final_t = 0.0;
    std::string status = "ok";
};

/// One integration of `niter` steps per (method, tau), run on up to
/// `jobs` threads. Rows come back in (method, tau) input order.
std::vector<SweepRow> efficiency_sweep(const std::vector<SplittingMethod>& methods,
                                       std::shared_ptr<const SplitSystem<double>> system,
                                       const PhaseState<double>& initial, const std::vector<double>& taus,
                                       const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_status);

/// Rows reordered by tau/s (then method) for plotting error against cost.
std::vector<SweepRow> sort_by_cost(std::vector<SweepRow> rows);

/// `t,deltaE_rel[,q...,p...]`, one row per sample.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<double>& rec, bool with_state);

}  // namespace symsplit
