#include "symsplit/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace symsplit {

namespace {

using Cd = std::complex<double>;
using Cr = std::complex<Real>;

Real pow10(int e) { return boost::multiprecision::pow(Real(10), e); }

std::vector<Real> with_digits(const std::vector<Real>& x, int digits) {
    std::vector<Real> out;
    out.reserve(x.size());
    for (const auto& v : x) out.emplace_back(v, static_cast<unsigned>(digits));
    return out;
}

template <class R>
R max_abs(const std::vector<R>& v) {
    using std::abs;
    R m(0);
    for (const auto& x : v)
        if (abs(x) > m) m = abs(x);
    return m;
}

template <class S>
Matrix<S> select(const Matrix<S>& J, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Matrix<S> out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = J(rows[i], cols[j]);
    return out;
}

template <class S>
std::vector<S> select(const std::vector<S>& v, const std::vector<std::size_t>& idx) {
    std::vector<S> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

/// Newton step for J d = -f: exact when square, minimum norm when J is wide,
/// least squares when tall.
template <class S>
std::vector<S> newton_step(const Matrix<S>& J, const std::vector<S>& f) {
    std::vector<S> rhs(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) rhs[i] = -f[i];
    if (J.rows() == J.cols()) return lu_solve(J, rhs);
    const Matrix<S> Jt = J.transpose();
    if (J.rows() < J.cols()) {
        auto y = lu_solve(J * Jt, rhs);
        return Jt.apply(y);
    }
    return lu_solve(Jt * J, Jt.apply(rhs));
}

struct LmResult {
    bool ok = false;
    int iterations = 0;
};

/// Drives max |f| below target. Each iteration tries the plain Newton step
/// first and falls back to Levenberg-Marquardt when it does not reduce |f|^2.
template <class R, class Lin>
LmResult levenberg_marquardt(const Lin& linearize, std::vector<R>& x, const R& target, int max_iter,
                             std::vector<R>* history = nullptr) {
    using std::abs;
    R mu(1e-3);
    auto lin = linearize(x);
    auto cost = [](const std::vector<R>& f) {
        R c(0);
        for (const auto& v : f) c += v * v;
        return c;
    };
    R c0 = cost(lin.f);
    LmResult res;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        if (max_abs(lin.f) <= target) {
            res.ok = true;
            return res;
        }
        const std::size_t n = x.size();
        try {
            auto d = newton_step(lin.J, lin.f);
            std::vector<R> trial = x;
            for (std::size_t i = 0; i < n; ++i) trial[i] += d[i];
            auto lt = linearize(trial);
            R ct = cost(lt.f);
            if (ct < c0 / R(4)) {
                x = std::move(trial);
                lin = std::move(lt);
                c0 = ct;
                if (history) history->push_back(max_abs(lin.f));
                continue;
            }
        } catch (const SingularMatrixError&) {
        }
        Matrix<R> JtJ = lin.J.transpose() * lin.J;
        std::vector<R> g = lin.J.transpose().apply(lin.f);
        bool accepted = false;
        while (!accepted) {
            Matrix<R> A = JtJ;
            for (std::size_t i = 0; i < n; ++i) A(i, i) += mu * (R(1) + JtJ(i, i));
            std::vector<R> rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
            std::vector<R> d;
            try {
                d = lu_solve(A, rhs);
            } catch (const SingularMatrixError&) {
                mu *= R(4);
                if (mu > R(1e20)) return res;
                continue;
            }
            std::vector<R> trial = x;
            for (std::size_t i = 0; i < n; ++i) trial[i] += d[i];
            auto lt = linearize(trial);
            R ct = cost(lt.f);
            if (ct < c0) {
                x = std::move(trial);
                lin = std::move(lt);
                c0 = ct;
                mu /= R(3);
                accepted = true;
                if (history) history->push_back(max_abs(lin.f));
            } else {
                mu *= R(4);
                if (mu > R(1e20)) return res;
            }
        }
    }
    res.iterations = max_iter;
    res.ok = max_abs(lin.f) <= target;
    return res;
}

std::vector<Real> to_real(const std::vector<double>& x) {
    std::vector<Real> out;
    for (double v : x) out.emplace_back(v);
    return out;
}

/// Expanded b and nodes c_1..c_s of a kernel vector.
void expand_kernel(const PolySystem& sys, const std::vector<Real>& x, std::vector<Real>& a, std::vector<Real>& b,
                   std::vector<Real>& c) {
    const int s = sys.stages();
    a.assign(static_cast<std::size_t>(s + 1), Real(0));
    b.assign(static_cast<std::size_t>(s), Real(0));
    c.assign(static_cast<std::size_t>(s), Real(0));
    for (int i = 0; i <= s; ++i) a[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(a_kernel_slot(i, s))];
    for (int i = 0; i < s; ++i)
        b[static_cast<std::size_t>(i)] = x[sys.a_count() + static_cast<std::size_t>(b_kernel_slot(i, s))];
    Real acc(0);
    for (int i = 0; i < s; ++i) {
        acc += a[static_cast<std::size_t>(i)];
        c[static_cast<std::size_t>(i)] = acc;
    }
}

/// Residuals of the first conditions beyond the claimed order: for each k,
/// the Lyndon indices with k parts and weight r_k + 1.
Real leading_error_estimate(const PolySystem& sys, const std::vector<Real>& x) {
    std::vector<Real> a, b, c;
    expand_kernel(sys, x, a, b, c);
    Real total(0);
    const auto& order = sys.order();
    for (std::size_t k = 1; k <= order.size(); ++k) {
        const int weight = order[k - 1] + 1;
        for (const auto& m : lyndon_upto(weight, static_cast<int>(k), false)) {
            if (m.k() != static_cast<int>(k) || m.weight() != weight) continue;
            total += abs(condition_lhs(b, c, m) - condition_rhs_as<Real>(m));
        }
    }
    return total;
}

}  // namespace

PolySystem::PolySystem(GeneralizedOrder order, int stages, MethodKind kind, bool cubic)
    : order_(std::move(order)), stages_(stages), kind_(kind), cubic_(cubic) {
    if (stages_ < 1) throw SolverError("solver: stage count must be positive");
    if (kind_ == MethodKind::BAB) throw SolverError("solver: BAB systems are not supported; use the ABA form");
    auto set = condition_set_for(order_, true, cubic_);
    equations_.push_back({EquationKind::ConsistencyA, MultiIndex{1}, 1, "sum a-1"});
    equations_.push_back({EquationKind::ConsistencyB, MultiIndex{1}, 1, "sum b-1"});
    for (const auto& m : set.indices)
        if (m.k() == 1) equations_.push_back({EquationKind::Index, m, 1, to_string(m)});
    if (cubic_) equations_.push_back({EquationKind::Cubic, MultiIndex{1}, 1, "sum b^3"});
    for (const auto& m : set.indices)
        if (m.k() > 1) equations_.push_back({EquationKind::Index, m, 2, to_string(m)});
    if (equations_.size() > unknowns())
        throw SolverError("solver: " + std::to_string(equations_.size()) + " equations for " +
                          std::to_string(unknowns()) + " unknowns; add stages");
}

PolySystem build_system(const GeneralizedOrder& order, int stages, MethodKind kind, bool cubic) {
    return PolySystem(order, stages, kind, cubic);
}

std::vector<std::size_t> PolySystem::rows_of_part(int part) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < equations_.size(); ++i)
        if (equations_[i].part == part) rows.push_back(i);
    return rows;
}

std::string PolySystem::unknown_name(std::size_t i) const {
    return i < a_count() ? "a" + std::to_string(i + 1) : "b" + std::to_string(i - a_count() + 1);
}

std::vector<Real> PolySystem::unknowns_of(const SplittingMethod& method) const {
    if (method.stages != stages_) throw SolverError("method " + method.id + " has a different stage count");
    method.validate();
    std::vector<Real> x;
    for (const auto& c : method.a_kernel) x.push_back(c.exact());
    for (const auto& c : method.b_kernel) x.push_back(c.exact());
    return x;
}

SplittingMethod PolySystem::to_method(const std::string& id, const std::vector<Real>& x, int digits) const {
    if (x.size() != unknowns()) throw SolverError("to_method: wrong number of unknowns");
    SplittingMethod m;
    m.id = id;
    m.kind = kind_;
    m.order = order_;
    m.stages = stages_;
    m.cubic_condition = cubic_;
    for (std::size_t i = 0; i < a_count(); ++i) m.a_kernel.emplace_back(format_fixed(x[i], digits));
    for (std::size_t i = 0; i < b_count(); ++i) m.b_kernel.emplace_back(format_fixed(x[a_count() + i], digits));
    return m;
}

ConditionSet PolySystem::condition_set() const { return condition_set_for(order_, true, cubic_); }

SolutionCandidate make_candidate(const PolySystem& system, std::vector<Real> x, std::string origin) {
    SolutionCandidate c;
    c.norm = norm2(x);
    c.residual = max_abs(system.residual(x));
    c.leading_error = leading_error_estimate(system, x);
    for (const auto& v : x)
        if (v < 0) c.negatives.push_back(-v);
    c.x = std::move(x);
    c.origin = std::move(origin);
    return c;
}

PolishResult newton_polish(const PolySystem& system, const std::vector<Real>& x_in, int digits) {
    ScopedDigits guard(digits);
    PolishResult out;
    out.x = with_digits(x_in, digits);
    auto lin = [&](const std::vector<Real>& x) { return system.linearize(x); };

    // Globalize until the residual is small enough for Newton to take over.
    LmResult lm = levenberg_marquardt<Real>(lin, out.x, Real(1e-12), 500, &out.history);
    out.iterations = lm.iterations;
    if (!lm.ok) {
        out.residual = max_abs(system.residual(out.x));
        return out;
    }

    const Real step_floor = pow10(-(digits - 3));
    const Real accept = pow10(-(digits - 10));
    Real previous = max_abs(system.residual(out.x));
    int stagnant = 0;
    for (int it = 0; it < 60; ++it) {
        auto l = system.linearize(out.x);
        std::vector<Real> d;
        try {
            d = newton_step(l.J, l.f);
        } catch (const SingularMatrixError&) {
            break;
        }
        for (std::size_t i = 0; i < d.size(); ++i) out.x[i] += d[i];
        ++out.iterations;
        Real r = max_abs(system.residual(out.x));
        out.history.push_back(r);
        if (norm_inf(d) <= step_floor * (Real(1) + norm_inf(out.x))) break;
        if (r >= previous && ++stagnant >= 2) break;
        previous = r;
    }
    out.residual = max_abs(system.residual(out.x));
    out.converged = out.residual <= accept;
    return out;
}

namespace {

/// With a_{j+1} .. a_k zeroed, b_j .. b_k act at one node, so any permutation
/// of them is an equally good minimizer. Picks the arrangement that keeps the
/// merged block palindromic: equal values pair up from the outside in.
std::vector<Real> arrange_merged_blocks(const PolySystem& sys, std::vector<Real> x, const std::vector<bool>& zero) {
    const std::size_t na = sys.a_count(), nb = sys.b_count();
    const bool centre_b = sys.stages() % 2 == 1;  // the last b kernel entry is unpaired
    const Real tie = pow10(-(default_digits() / 2));
    std::size_t j = 0;
    while (j < nb) {
        std::size_t k = j;
        while (k + 1 < nb && k + 1 < na && zero[k + 1]) ++k;
        if (k > j && !(centre_b && k == nb - 1)) {
            std::vector<Real> vals(x.begin() + static_cast<std::ptrdiff_t>(na + j),
                                   x.begin() + static_cast<std::ptrdiff_t>(na + k + 1));
            std::sort(vals.begin(), vals.end());
            std::vector<Real> pairs, singles;
            for (std::size_t i = 0; i < vals.size(); ++i) {
                if (i + 1 < vals.size() && abs(vals[i] - vals[i + 1]) <= tie) {
                    pairs.push_back(vals[i]);
                    ++i;
                } else {
                    singles.push_back(vals[i]);
                }
            }
            if (singles.size() <= 1) {
                const std::size_t len = k - j + 1;
                for (std::size_t p = 0; p < pairs.size(); ++p) {
                    x[na + j + p] = pairs[p];
                    x[na + j + len - 1 - p] = pairs[p];
                }
                if (!singles.empty()) x[na + j + len / 2] = singles.front();
            }
        }
        j = k + 1;
    }
    return x;
}

}  // namespace

SolutionCandidate solve_x0(const PolySystem& system, const std::vector<std::size_t>& zeroed, int digits,
                           std::uint64_t seed) {
    ScopedDigits guard(digits);
    const std::size_t n = system.unknowns();
    std::vector<bool> is_zero(n, false);
    for (auto z : zeroed) {
        if (z >= n) throw SolverError("solve_x0: zeroed index out of range");
        is_zero[z] = true;
    }
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!is_zero[i]) free_idx.push_back(i);
    const auto rows = system.rows_of_part(1);
    const std::size_t nf = free_idx.size(), m1 = rows.size();
    if (m1 > nf) throw SolverError("solve_x0: more part-1 equations than free unknowns");

    auto embed = [&](const std::vector<Real>& y) {
        std::vector<Real> x(n, Real(0));
        for (std::size_t i = 0; i < nf; ++i) x[free_idx[i]] = y[i];
        return x;
    };
    auto f1_lin = [&](const std::vector<Real>& y) {
        auto l = system.linearize(embed(y));
        return Linearization<Real>{select(l.f, rows), select(l.J, rows, free_idx)};
    };

    // Consistent start spreading each sum evenly over the free coefficients.
    std::vector<Real> start(nf);
    {
        const int s = system.stages();
        std::vector<int> mult(n, 0);
        for (int i = 0; i <= s; ++i) ++mult[static_cast<std::size_t>(a_kernel_slot(i, s))];
        for (int i = 0; i < s; ++i) ++mult[system.a_count() + static_cast<std::size_t>(b_kernel_slot(i, s))];
        int wa = 0, wb = 0;
        for (std::size_t i : free_idx) (i < system.a_count() ? wa : wb) += mult[i];
        for (std::size_t k = 0; k < nf; ++k) start[k] = Real(1) / Real(free_idx[k] < system.a_count() ? wa : wb);
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    const Real tol = pow10(-25);
    std::string last_error = "no attempt";
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<Real> y = start;
        if (attempt > 0)
            for (auto& v : y) v += Real(noise(rng));

        // Feasibility first; the damped iteration handles the wide system.
        if (!levenberg_marquardt<Real>(f1_lin, y, Real(1e-20), 400).ok) {
            last_error = "feasibility phase did not converge";
            continue;
        }
        // Multipliers by least squares on y + J^T lambda = 0.
        std::vector<Real> lambda;
        {
            auto l = f1_lin(y);
            try {
                lambda = lu_solve(l.J * l.J.transpose(), l.J.apply(y));
            } catch (const SingularMatrixError&) {
                last_error = "rank-deficient constraints at the feasible start";
                continue;
            }
            for (auto& v : lambda) v = -v;
        }

        // Lagrange-Newton on G(y, lambda) = [y + J^T lambda; f1(y)].
        using J2 = Jet<Jet<Real>>;
        auto kkt = [&](const std::vector<Real>& yy, const std::vector<Real>& lam, Matrix<Real>* K) {
            std::vector<J2> xj(n, J2(0));
            for (std::size_t a = 0; a < nf; ++a) {
                const std::size_t i = free_idx[a];
                J2 v(Jet<Real>::variable(yy[a], i, n));
                v.grad.assign(n, Jet<Real>(Real(0)));
                v.grad[i] = Jet<Real>(Real(1));
                xj[i] = std::move(v);
            }
            auto r = system.residual(xj);
            std::vector<Real> G(nf + m1, Real(0));
            if (K) *K = Matrix<Real>(nf + m1, nf + m1);
            for (std::size_t a = 0; a < nf; ++a) {
                G[a] = yy[a];
                if (K) (*K)(a, a) = Real(1);
            }
            for (std::size_t k = 0; k < m1; ++k) {
                const J2& fk = r[rows[k]];
                G[nf + k] = fk.value.value;
                for (std::size_t a = 0; a < nf; ++a) {
                    const std::size_t ia = free_idx[a];
                    Real grad = fk.value.derivative(ia);
                    G[a] += lam[k] * grad;
                    if (K) {
                        (*K)(nf + k, a) = grad;
                        (*K)(a, nf + k) = grad;
                        const Jet<Real> second = ia < fk.grad.size() ? fk.grad[ia] : Jet<Real>(Real(0));
                        for (std::size_t b2 = 0; b2 < nf; ++b2) (*K)(a, b2) += lam[k] * second.derivative(free_idx[b2]);
                    }
                }
            }
            return G;
        };

        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            Matrix<Real> K;
            auto G = kkt(y, lambda, &K);
            Real g0 = max_abs(G);
            if (g0 <= tol) {
                converged = true;
                break;
            }
            std::vector<Real> d;
            try {
                d = newton_step(K, G);
            } catch (const SingularMatrixError&) {
                last_error = "singular KKT matrix";
                break;
            }
            Real alpha(1);
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls) {
                std::vector<Real> yt = y, lt = lambda;
                for (std::size_t a = 0; a < nf; ++a) yt[a] += alpha * d[a];
                for (std::size_t k = 0; k < m1; ++k) lt[k] += alpha * d[nf + k];
                if (max_abs(kkt(yt, lt, nullptr)) < g0) {
                    y = std::move(yt);
                    lambda = std::move(lt);
                    moved = true;
                    break;
                }
                alpha /= Real(2);
            }
            if (!moved) {
                last_error = "line search failed";
                break;
            }
        }
        if (!converged) continue;
        auto cand = make_candidate(system, arrange_merged_blocks(system, embed(y), is_zero), "x0");
        Real f1 = max_abs(select(system.residual(cand.x), rows));
        cand.residual = f1;
        return cand;
    }
    throw SolverError("solve_x0: Lagrange-Newton iteration failed (" + last_error + ")");
}

HomotopySetup random_homotopy(std::size_t rows, std::size_t unknowns, std::uint64_t seed) {
    if (rows > unknowns) throw SolverError("random_homotopy: more rows than unknowns");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double theta = angle(rng);
    while (std::abs(std::sin(theta)) <= std::sin(0.1)) theta = angle(rng);

    HomotopySetup h;
    h.seed = seed;
    h.gamma = std::polar(1.0, theta);
    std::normal_distribution<double> gauss(0.0, 1.0);
    h.M = Matrix<double>(rows, unknowns);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < unknowns; ++c) h.M(r, c) = gauss(rng);
    // Modified Gram-Schmidt, applied twice for orthogonality at round-off level.
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t q = 0; q < r; ++q) {
                double dot = 0;
                for (std::size_t c = 0; c < unknowns; ++c) dot += h.M(r, c) * h.M(q, c);
                for (std::size_t c = 0; c < unknowns; ++c) h.M(r, c) -= dot * h.M(q, c);
            }
            double nrm = 0;
            for (std::size_t c = 0; c < unknowns; ++c) nrm += h.M(r, c) * h.M(r, c);
            nrm = std::sqrt(nrm);
            if (nrm == 0) throw SolverError("random_homotopy: degenerate Gaussian sample");
            for (std::size_t c = 0; c < unknowns; ++c) h.M(r, c) /= nrm;
        }
    return h;
}

namespace {

/// Path following in complex double; fills endpoint, status Failed or (provisionally) RealSolution.
void follow_path(const PolySystem& sys, const std::vector<Cd>& x0, const HomotopySetup& setup,
                 const TrackOptions& opt, HomotopyOutcome& out) {
    const std::size_t n = sys.unknowns();
    const auto rows1 = sys.rows_of_part(1);
    const auto rows2 = sys.rows_of_part(2);
    if (rows1.size() + rows2.size() != n) throw SolverError("homotopy: the system must be square");
    if (setup.M.rows() != rows2.size() || setup.M.cols() != n) throw SolverError("homotopy: M has the wrong shape");
    const std::size_t m1 = rows1.size();
    const Cd gamma = setup.gamma;

    auto Mdx = [&](const std::vector<Cd>& x) {
        std::vector<Cd> out2(rows2.size(), Cd(0));
        for (std::size_t r = 0; r < rows2.size(); ++r)
            for (std::size_t c = 0; c < n; ++c) out2[r] += setup.M(r, c) * (x[c] - x0[c]);
        return out2;
    };
    // H(x, t) and dH/dx.
    auto eval = [&](const std::vector<Cd>& x, double t, Matrix<Cd>* J) {
        auto l = sys.linearize(x);
        auto md = Mdx(x);
        std::vector<Cd> H(n);
        if (J) *J = Matrix<Cd>(n, n);
        for (std::size_t k = 0; k < m1; ++k) {
            H[k] = l.f[rows1[k]];
            if (J)
                for (std::size_t c = 0; c < n; ++c) (*J)(k, c) = l.J(rows1[k], c);
        }
        for (std::size_t k = 0; k < rows2.size(); ++k) {
            H[m1 + k] = t * l.f[rows2[k]] + (1.0 - t) * gamma * md[k];
            if (J)
                for (std::size_t c = 0; c < n; ++c)
                    (*J)(m1 + k, c) = t * l.J(rows2[k], c) + (1.0 - t) * gamma * setup.M(k, c);
        }
        return H;
    };
    auto dHdt = [&](const std::vector<Cd>& x) {
        auto f = sys.residual(x);
        auto md = Mdx(x);
        std::vector<Cd> Ht(n, Cd(0));
        for (std::size_t k = 0; k < rows2.size(); ++k) Ht[m1 + k] = f[rows2[k]] - gamma * md[k];
        return Ht;
    };

    std::vector<Cd> x = x0;
    double t = 0.0, dt = opt.initial_dt;
    out.steps = 0;
    while (t < 1.0) {
        if (out.steps >= opt.max_steps) {
            out.message = "step budget exhausted at t=" + std::to_string(t);
            return;
        }
        dt = std::min(dt, 1.0 - t);
        const double t_new = (1.0 - t <= dt) ? 1.0 : t + dt;
        bool ok = false;
        int iters = 0;
        std::vector<Cd> xp;
        try {
            Matrix<Cd> J;
            eval(x, t, &J);
            auto Ht = dHdt(x);
            std::vector<Cd> neg(n);
            for (std::size_t i = 0; i < n; ++i) neg[i] = -Ht[i];
            auto v = lu_solve(J, neg);
            xp = x;
            for (std::size_t i = 0; i < n; ++i) xp[i] += (t_new - t) * v[i];
            // Converged once the deformed system holds to the tolerance; the
            // step norm alone stalls near 1e-11 where the Jacobian is ill-conditioned.
            Matrix<Cd> Jc;
            auto H = eval(xp, t_new, &Jc);
            for (iters = 1; iters <= opt.corrector_iterations; ++iters) {
                for (auto& h : H) h = -h;
                auto d = lu_solve(Jc, H);
                for (std::size_t i = 0; i < n; ++i) xp[i] += d[i];
                H = eval(xp, t_new, &Jc);
                if (norm_inf(H) <= opt.corrector_tolerance) {
                    ok = true;
                    break;
                }
            }
        } catch (const SingularMatrixError&) {
            ok = false;
        }
        if (ok) {
            std::vector<Cd> jump(n);
            for (std::size_t i = 0; i < n; ++i) jump[i] = xp[i] - x[i];
            if (norm2(jump) > 0.1 * (1.0 + norm2(x))) ok = false;  // likely path jump
        }
        out.log.push_back({t_new, dt, std::min(iters, opt.corrector_iterations), ok});
        ++out.steps;
        if (ok) {
            x = std::move(xp);
            t = t_new;
            if (iters < 3) dt *= opt.grow;
            if (norm2(x) > opt.max_norm) {
                out.message = "path diverged (|x| > " + std::to_string(opt.max_norm) + ") at t=" + std::to_string(t);
                return;
            }
        } else {
            dt /= 2.0;
            if (dt < opt.min_dt) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "step size below %.1e at t=%.12f, |x| = %.3e", opt.min_dt, t,
                              norm2(x));
                out.message = buf;
                if (t >= opt.endgame_start) {
                    // Close enough to t = 1 for the target-system polish to decide.
                    out.endpoint = x;
                    out.status = HomotopyOutcome::Status::RealSolution;
                }
                return;
            }
        }
    }
    out.endpoint = std::move(x);
    out.status = HomotopyOutcome::Status::RealSolution;
}

/// Classifies and polishes a finished path on the calling thread.
void finish_path(const PolySystem& sys, HomotopyOutcome& out, int digits) {
    if (out.status == HomotopyOutcome::Status::Failed) return;
    auto note = [&](const std::string& text) { out.message += (out.message.empty() ? "" : "; ") + text; };
    ScopedDigits guard(digits);
    const std::size_t n = sys.unknowns();
    std::vector<Cr> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = Cr(Real(out.endpoint[i].real()), Real(out.endpoint[i].imag()));

    // Complex Newton: a real root pulls the imaginary parts to zero.
    bool complex_ok = false;
    try {
        const Real floor = pow10(-(digits - 3));
        for (int it = 0; it < 40; ++it) {
            auto l = sys.linearize(z);
            auto d = newton_step(l.J, l.f);
            for (std::size_t i = 0; i < n; ++i) z[i] += d[i];
            Real dn(0), zn(0);
            for (std::size_t i = 0; i < n; ++i) {
                dn = std::max(dn, Real(abs(d[i])));
                zn = std::max(zn, Real(abs(z[i])));
            }
            if (dn <= floor * (Real(1) + zn)) break;
        }
        Real res(0);
        for (const auto& v : sys.residual(z)) res = std::max(res, Real(abs(v)));
        complex_ok = res <= pow10(-30);
    } catch (const SingularMatrixError&) {
        complex_ok = false;
    }

    std::vector<Real> xr(n);
    double max_imag = 0.0;
    if (complex_ok) {
        for (std::size_t i = 0; i < n; ++i) {
            xr[i] = z[i].real();
            max_imag = std::max(max_imag, static_cast<double>(abs(z[i].imag())));
        }
        out.max_imag_after_polish = max_imag;
        if (max_imag > 1e-20) {
            out.status = HomotopyOutcome::Status::NonReal;
            char buf[96];
            std::snprintf(buf, sizeof buf, "non-real endpoint (max |Im x| = %.3e)", max_imag);
            note(buf);
            return;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            xr[i] = Real(out.endpoint[i].real());
            max_imag = std::max(max_imag, std::abs(out.endpoint[i].imag()));
        }
        if (max_imag > 1e-6) {
            out.status = HomotopyOutcome::Status::NonReal;
            note("complex polish failed; endpoint not real");
            return;
        }
    }
    auto pol = newton_polish(sys, xr, digits);
    if (!pol.converged) {
        out.status = HomotopyOutcome::Status::Failed;
        note("real polish did not converge");
        return;
    }
    out.candidate = make_candidate(sys, pol.x, "seed " + std::to_string(out.seed));
    out.status = HomotopyOutcome::Status::RealSolution;
    note("real solution");
}

std::vector<Cd> complex_start(const std::vector<Real>& x0) {
    std::vector<Cd> z;
    for (const auto& v : x0) z.emplace_back(static_cast<double>(v), 0.0);
    return z;
}

}  // namespace

HomotopyOutcome track_homotopy(const PolySystem& system, const std::vector<Real>& x0, const HomotopySetup& setup,
                               const TrackOptions& options, int digits) {
    HomotopyOutcome out;
    out.seed = setup.seed;
    follow_path(system, complex_start(x0), setup, options, out);
    finish_path(system, out, digits);
    return out;
}

namespace {

bool same_point(const std::vector<Real>& x, const std::vector<Real>& y, const Real& tol) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (abs(x[i] - y[i]) > tol) return false;
    return true;
}

void add_distinct(std::vector<SolutionCandidate>& list, SolutionCandidate c) {
    const Real tol(1e-20);
    for (const auto& e : list)
        if (same_point(e.x, c.x, tol)) return;
    list.push_back(std::move(c));
}

/// Runs LM in double from each start, keeps converged distinct points, polishes them.
std::vector<SolutionCandidate> refine_starts(const PolySystem& sys, const std::vector<std::vector<double>>& starts,
                                             int digits, const std::string& origin) {
    auto lin = [&](const std::vector<double>& x) { return sys.linearize(x); };
    std::vector<std::vector<double>> roots;
    for (const auto& s : starts) {
        std::vector<double> x = s;
        if (!levenberg_marquardt<double>(lin, x, 1e-11, 200).ok) continue;
        bool seen = false;
        for (const auto& r : roots) {
            double d = 0;
            for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - r[i]));
            if (d < 1e-6) {
                seen = true;
                break;
            }
        }
        if (!seen) roots.push_back(x);
    }
    std::vector<SolutionCandidate> out;
    for (const auto& r : roots) {
        auto pol = newton_polish(sys, to_real(r), digits);
        if (!pol.converged) continue;
        ScopedDigits guard(digits);
        add_distinct(out, make_candidate(sys, pol.x, origin));
    }
    return out;
}

/// Kernel vectors on a grid of positive values satisfying both consistency sums.
std::vector<std::vector<double>> positive_grid(const PolySystem& sys, int points) {
    const int s = sys.stages();
    const std::size_t na = sys.a_count(), nb = sys.b_count();
    std::vector<int> mult(na + nb, 0);
    for (int i = 0; i <= s; ++i) ++mult[static_cast<std::size_t>(a_kernel_slot(i, s))];
    for (int i = 0; i < s; ++i) ++mult[na + static_cast<std::size_t>(b_kernel_slot(i, s))];

    // All positive vectors on one block whose weighted sum is 1 (last entry solved for).
    auto block = [&](std::size_t offset, std::size_t len) {
        std::vector<std::vector<double>> out;
        std::vector<double> cur(len, 0.0);
        std::function<void(std::size_t, double)> rec = [&](std::size_t i, double used) {
            if (i + 1 == len) {
                double last = (1.0 - used) / mult[offset + i];
                if (last > 0) {
                    cur[i] = last;
                    out.push_back(cur);
                }
                return;
            }
            for (int g = 1; g <= points; ++g) {
                double v = g / (points + 1.0) / mult[offset + i];
                if (used + v * mult[offset + i] >= 1.0) break;
                cur[i] = v;
                rec(i + 1, used + v * mult[offset + i]);
            }
        };
        rec(0, 0.0);
        return out;
    };
    auto as = block(0, na), bs = block(na, nb);
    std::vector<std::vector<double>> starts;
    for (const auto& a : as)
        for (const auto& b : bs) {
            std::vector<double> x = a;
            x.insert(x.end(), b.begin(), b.end());
            starts.push_back(std::move(x));
        }
    return starts;
}

bool all_positive(const SolutionCandidate& c) { return c.negatives.empty(); }

}  // namespace

SolveReport solve(const PolySystem& system, const SolveOptions& options) {
    SolveReport report;
    std::string strategy = options.strategy;
    const auto rows2 = system.rows_of_part(2);
    if (strategy == "auto") {
        if (rows2.empty())
            strategy = "grid";
        else if (system.square() && system.stages() >= 7)
            strategy = "homotopy";  // small systems are cheaper to cover by random starts
        else
            strategy = "multistart";
    }
    report.strategy = strategy;

    if (strategy == "grid") {
        auto starts = positive_grid(system, options.grid);
        for (auto& c : refine_starts(system, starts, options.digits, "grid")) add_distinct(report.candidates, c);
        report.selection_rule = "all coefficients positive, then smallest norm";
    } else if (strategy == "multistart") {
        std::mt19937_64 rng(options.first_seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<std::vector<double>> starts(static_cast<std::size_t>(options.starts));
        for (auto& s : starts) {
            s.resize(system.unknowns());
            for (auto& v : s) v = u(rng);
        }
        for (auto& c : refine_starts(system, starts, options.digits, "multistart")) add_distinct(report.candidates, c);
        report.selection_rule = "smallest norm, then smallest leading error terms";
    } else if (strategy == "homotopy") {
        if (!system.square()) throw SolverError("homotopy strategy needs a square system");
        if (rows2.empty()) throw SolverError("homotopy strategy needs multi-part conditions to deform");
        std::vector<std::size_t> zeroed = options.zeroed;
        if (zeroed.empty()) {
            const std::size_t z = rows2.size() - 1;
            if (z + 2 > system.a_count()) throw SolverError("homotopy: not enough a coefficients to zero");
            for (std::size_t k = 0; k < z; ++k) zeroed.push_back(2 + k);  // a_3, a_4, ...
        }
        report.x0 = solve_x0(system, zeroed, options.digits, options.first_seed);
        const auto start = complex_start(report.x0->x);

        const std::size_t count = static_cast<std::size_t>(std::max(0, options.seeds));
        report.paths.resize(count);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k = next++; k < count; k = next++) {
                auto& out = report.paths[k];
                out.seed = options.first_seed + k;
                try {
                    auto setup = random_homotopy(rows2.size(), system.unknowns(), out.seed);
                    follow_path(system, start, setup, options.track, out);
                } catch (const std::exception& e) {
                    out.status = HomotopyOutcome::Status::Failed;
                    out.message = e.what();
                }
            }
        };
        const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (auto& p : report.paths) {
            finish_path(system, p, options.digits);
            if (p.candidate) add_distinct(report.candidates, *p.candidate);
        }
        report.selection_rule = "smallest norm, then smallest leading error terms";
    } else {
        throw SolverError("unknown strategy '" + strategy + "'");
    }

    ScopedDigits guard(options.digits);
    const Real accept = pow10(-30);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const auto& c = report.candidates[i];
        if (c.residual > accept) continue;
        if (strategy == "grid" && !all_positive(c)) continue;
        eligible.push_back(i);
    }
    if (!eligible.empty()) {
        auto best = *std::min_element(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
            const auto& ca = report.candidates[a];
            const auto& cb = report.candidates[b];
            if (abs(ca.norm - cb.norm) > Real(1e-12)) return ca.norm < cb.norm;
            return ca.leading_error < cb.leading_error;
        });
        report.selected = best;
    }
    return report;
}

void write_solution(std::ostream& out, const PolySystem& system, const SolutionCandidate& candidate,
                    const std::string& id, int digits) {
    const auto res = system.residual(candidate.x);
    out << "# solution of order (" << format_order(system.order()) << "), " << system.stages() << " stages, "
        << to_string(system.kind()) << (system.cubic() ? ", with sum b^3 = 0" : "") << '\n';
    out << "# origin " << candidate.origin << ", norm " << format_sci(candidate.norm, 6) << ", leading error "
        << format_sci(candidate.leading_error) << '\n';
    out << "# residuals at " << candidate.x.front().precision() << " digits:\n";
    for (std::size_t i = 0; i < res.size(); ++i)
        out << "#   " << system.equations()[i].label << ' ' << format_sci(res[i]) << '\n';
    write_catalog(out, {system.to_method(id, candidate.x, digits)});
}

void write_path_log(std::ostream& out, const std::vector<HomotopyOutcome>& paths) {
    out << "# seed t dt corrector_iterations accepted\n";
    for (const auto& p : paths) {
        const char* status = p.status == HomotopyOutcome::Status::RealSolution ? "real"
                             : p.status == HomotopyOutcome::Status::NonReal ? "non-real"
                                                                            : "failed";
        out << "# seed " << p.seed << ": " << status << " after " << p.steps << " steps; " << p.message << '\n';
        char buf[128];
        for (const auto& e : p.log) {
            std::snprintf(buf, sizeof buf, "%llu %.15g %.6e %d %d\n", static_cast<unsigned long long>(p.seed), e.t,
                          e.dt, e.corrector_iterations, e.accepted ? 1 : 0);
            out << buf;
        }
    }
}

}  // namespace symsplit
