#pragma once

#include "symsplit/coeffs.hpp"
#include "symsplit/jet.hpp"
#include "symsplit/linalg.hpp"
#include "symsplit/orderconds.hpp"
#include "symsplit/precision.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace symsplit {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EquationKind { ConsistencyA, ConsistencyB, Index, Cubic };

struct Equation {
    EquationKind kind;
    MultiIndex index{1};  // meaningful for Index only
    int part = 1;         // 1: solved for the start point, 2: deformed by the homotopy
    std::string label;
};

/// Residual value and Jacobian at one point.
template <class S>
struct Linearization {
    std::vector<S> f;
    Matrix<S> J;
};

/// Order conditions of a symmetric ABA/ABAH composition as polynomials in the
/// kernel coefficients x = (a_1..a_p, b_1..b_q). Part 1 holds consistency,
/// single-part indices and the cubic condition; part 2 the multi-part indices.
class PolySystem {
public:
    PolySystem(GeneralizedOrder order, int stages, MethodKind kind, bool cubic);

    const GeneralizedOrder& order() const { return order_; }
    int stages() const { return stages_; }
    MethodKind kind() const { return kind_; }
    bool cubic() const { return cubic_; }
    std::size_t a_count() const { return static_cast<std::size_t>(a_kernel_size(stages_)); }
    std::size_t b_count() const { return static_cast<std::size_t>(b_kernel_size(stages_)); }
    std::size_t unknowns() const { return a_count() + b_count(); }
    const std::vector<Equation>& equations() const { return equations_; }
    std::size_t equation_count() const { return equations_.size(); }
    bool square() const { return equations_.size() == unknowns(); }
    std::vector<std::size_t> rows_of_part(int part) const;
    std::string unknown_name(std::size_t i) const;  // "a3", "b1"

    template <class S>
    std::vector<S> residual(const std::vector<S>& x) const;

    template <class S>
    Linearization<S> linearize(const std::vector<S>& x) const;

    /// Kernel vector of a method with the same layout.
    std::vector<Real> unknowns_of(const SplittingMethod& method) const;
    /// Method carrying `x` printed to `digits` significant digits.
    SplittingMethod to_method(const std::string& id, const std::vector<Real>& x, int digits = 40) const;
    ConditionSet condition_set() const;

private:
    template <class S>
    S evaluate(const Equation& eq, const std::vector<S>& a, const std::vector<S>& b, const std::vector<S>& c) const;

    GeneralizedOrder order_;
    int stages_;
    MethodKind kind_;
    bool cubic_;
    std::vector<Equation> equations_;
};

PolySystem build_system(const GeneralizedOrder& order, int stages, MethodKind kind, bool cubic);

template <class S>
S PolySystem::evaluate(const Equation& eq, const std::vector<S>& a, const std::vector<S>& b,
                       const std::vector<S>& c) const {
    switch (eq.kind) {
        case EquationKind::ConsistencyA: {
            S sum(0);
            for (const auto& v : a) sum = sum + v;
            return sum - S(1);
        }
        case EquationKind::ConsistencyB: {
            S sum(0);
            for (const auto& v : b) sum = sum + v;
            return sum - S(1);
        }
        case EquationKind::Cubic: {
            S sum(0);
            for (const auto& v : b) sum = sum + v * v * v;
            return sum;
        }
        case EquationKind::Index:
            return condition_lhs(b, c, eq.index) - condition_rhs_as<S>(eq.index);
    }
    return S(0);
}

template <class S>
std::vector<S> PolySystem::residual(const std::vector<S>& x) const {
    if (x.size() != unknowns()) throw std::invalid_argument("PolySystem: wrong number of unknowns");
    const auto s = static_cast<std::size_t>(stages_);
    std::vector<S> a(s + 1), b(s), c(s);
    for (std::size_t i = 0; i <= s; ++i) a[i] = x[static_cast<std::size_t>(a_kernel_slot(static_cast<int>(i), stages_))];
    for (std::size_t i = 0; i < s; ++i)
        b[i] = x[a_count() + static_cast<std::size_t>(b_kernel_slot(static_cast<int>(i), stages_))];
    S acc(0);
    for (std::size_t i = 0; i < s; ++i) {
        acc = acc + a[i];
        c[i] = acc;
    }
    std::vector<S> out;
    out.reserve(equations_.size());
    for (const auto& eq : equations_) out.push_back(evaluate(eq, a, b, c));
    return out;
}

template <class S>
Linearization<S> PolySystem::linearize(const std::vector<S>& x) const {
    const std::size_t n = unknowns();
    std::vector<Jet<S>> xj;
    xj.reserve(n);
    for (std::size_t i = 0; i < n; ++i) xj.push_back(Jet<S>::variable(x[i], i, n));
    auto r = residual(xj);
    Linearization<S> lin;
    lin.f.reserve(r.size());
    lin.J = Matrix<S>(r.size(), n);
    for (std::size_t k = 0; k < r.size(); ++k) {
        lin.f.push_back(r[k].value);
        for (std::size_t i = 0; i < n; ++i) lin.J(k, i) = r[k].derivative(i);
    }
    return lin;
}

/// Real roots and their quality, at solver precision.
struct SolutionCandidate {
    std::vector<Real> x;
    Real norm;
    Real residual;        // max |f_i(x)|
    Real leading_error;   // sum of |residuals| of the first unsatisfied conditions
    std::vector<Real> negatives;  // magnitudes of the negative kernel entries
    std::string origin;           // "seed 3", "grid", ...
};

SolutionCandidate make_candidate(const PolySystem& system, std::vector<Real> x, std::string origin);

struct PolishResult {
    std::vector<Real> x;
    Real residual;
    std::vector<Real> history;  // max |f| after each iteration
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt globalization followed by pure Newton steps (minimum
/// norm steps when the system is underdetermined) at `digits` precision.
PolishResult newton_polish(const PolySystem& system, const std::vector<Real>& x, int digits = kDefaultDigits);

/// Minimizes sum x_i^2 subject to the part-1 equations and x_j = 0 for j in
/// `zeroed` (unknown positions, 0-based), by Newton iteration on the KKT system.
SolutionCandidate solve_x0(const PolySystem& system, const std::vector<std::size_t>& zeroed,
                           int digits = kDefaultDigits, std::uint64_t seed = 0);

/// gamma on the unit circle away from the real axis; M has orthonormal rows.
struct HomotopySetup {
    std::complex<double> gamma;
    Matrix<double> M;
    std::uint64_t seed = 0;
};

HomotopySetup random_homotopy(std::size_t rows, std::size_t unknowns, std::uint64_t seed);

struct TrackOptions {
    double initial_dt = 1e-2;
    double min_dt = 1e-8;
    double grow = 1.5;
    int corrector_iterations = 5;
    double corrector_tolerance = 1e-12;
    double max_norm = 1e4;
    long max_steps = 200000;
    double endgame_start = 0.999;  // a stall beyond this t still hands the point to the endpoint polish
};

struct PathLogEntry {
    double t;
    double dt;
    int corrector_iterations;
    bool accepted;
};

struct HomotopyOutcome {
    enum class Status { RealSolution, NonReal, Failed };
    Status status = Status::Failed;
    std::vector<std::complex<double>> endpoint;
    std::optional<SolutionCandidate> candidate;
    double max_imag_after_polish = 0.0;
    long steps = 0;
    std::vector<PathLogEntry> log;
    std::string message;
    std::uint64_t seed = 0;
};

/// Follows H(x, t) = [f1(x); t f2(x) + (1 - t) gamma M (x - x0)] from t = 0
/// to t = 1 in complex double arithmetic, then polishes the endpoint at `digits`.
HomotopyOutcome track_homotopy(const PolySystem& system, const std::vector<Real>& x0, const HomotopySetup& setup,
                               const TrackOptions& options = {}, int digits = kDefaultDigits);

struct SolveOptions {
    std::string strategy = "auto";  // auto | grid | multistart | homotopy
    std::vector<std::size_t> zeroed;  // for homotopy; empty picks a_3.. by default
    int seeds = 16;
    std::uint64_t first_seed = 0;
    int starts = 200;  // multistart
    int grid = 12;     // points per free coordinate
    int digits = kDefaultDigits;
    unsigned jobs = 1;
    TrackOptions track;
};

struct SolveReport {
    std::string strategy;
    std::optional<SolutionCandidate> x0;
    std::vector<HomotopyOutcome> paths;
    std::vector<SolutionCandidate> candidates;  // distinct accepted real solutions
    std::optional<std::size_t> selected;
    std::string selection_rule;
};

SolveReport solve(const PolySystem& system, const SolveOptions& options);

/// Solution file: residual report as '#' comments followed by a catalog block.
void write_solution(std::ostream& out, const PolySystem& system, const SolutionCandidate& candidate,
                    const std::string& id, int digits = 40);

/// Path-tracking log: one line per step attempt.
void write_path_log(std::ostream& out, const std::vector<HomotopyOutcome>& paths);

}  // namespace symsplit
