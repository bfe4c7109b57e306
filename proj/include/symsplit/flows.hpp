#pragma once

#include "symsplit/kepler.hpp"
#include "symsplit/state.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace symsplit {

/// Writes grad U(q) into the second argument (already sized like q).
template <class T>
using GradientFn = std::function<void(const std::vector<T>&, std::vector<T>&)>;

/// Exact flow of a position-only Hamiltonian: p <- p - tau grad U(q).
template <class T>
void kick_inplace(PhaseState<T>& x, const GradientFn<T>& grad, const T& tau) {
    std::vector<T> g(x.dim(), T(0));
    grad(x.q, g);
    for (std::size_t i = 0; i < x.dim(); ++i) x.add_p(i, -tau * g[i]);
}

template <class T>
PhaseState<T> kick(PhaseState<T> x, const GradientFn<T>& grad, const T& tau) {
    kick_inplace(x, grad, tau);
    return x;
}

/// Masses and coupling constant of a heliocentric planetary system.
template <class T>
struct HelioParams {
    T m0;
    std::vector<T> m;  // planet masses
    T G;

    std::size_t planets() const { return m.size(); }
    T mu(std::size_t i) const { return G * (m0 + m[i]); }
    /// Reduced mass m0 m_i / (m0 + m_i); momentum = reduced mass * heliocentric velocity.
    T reduced_mass(std::size_t i) const { return m0 * m[i] / (m0 + m[i]); }
};

/// Exact flow of sum_{i<j} rt_i . rt_j / m0: r_i <- r_i + (tau/m0) sum_{j != i} rt_j.
template <class T>
void drift_momentum_coupling_inplace(PhaseState<T>& x, const T& m0, const T& tau) {
    const std::size_t n = x.dim() / 3;
    if (x.dim() != 3 * n) throw std::invalid_argument("drift_momentum_coupling: dimension is not 3n");
    if (n < 2) return;
    const T scale = tau / m0;
    std::vector<T> shift(x.dim(), T(0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            for (std::size_t k = 0; k < 3; ++k) shift[3 * i + k] += x.p[3 * j + k];
        }
    for (std::size_t i = 0; i < x.dim(); ++i) x.add_q(i, scale * shift[i]);
}

template <class T>
PhaseState<T> drift_momentum_coupling(PhaseState<T> x, const T& m0, const T& tau) {
    drift_momentum_coupling_inplace(x, m0, tau);
    return x;
}

/// Exact flow of -G sum_{i<j} m_i m_j / Delta_ij. Each pair force is applied
/// with both signs so the total momentum changes only by round-off.
template <class T>
void helio_kick_inplace(PhaseState<T>& x, const HelioParams<T>& sys, const T& tau) {
    using std::sqrt;
    const std::size_t n = sys.planets();
    std::vector<T> dp(x.dim(), T(0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            T d[3];
            T d2(0);
            for (std::size_t k = 0; k < 3; ++k) {
                d[k] = x.q[3 * i + k] - x.q[3 * j + k];
                d2 += d[k] * d[k];
            }
            if (!(d2 > 0)) throw std::domain_error("helio kick: coincident planets");
            T coef = tau * sys.G * sys.m[i] * sys.m[j] / (d2 * sqrt(d2));
            for (std::size_t k = 0; k < 3; ++k) {
                dp[3 * i + k] -= coef * d[k];
                dp[3 * j + k] += coef * d[k];
            }
        }
    for (std::size_t i = 0; i < x.dim(); ++i) x.add_p(i, dp[i]);
}

/// Second-order symmetric approximation of the heliocentric perturbation flow:
/// coupling drift for tau/2, pairwise kick for tau, coupling drift for tau/2.
template <class T>
void inner_leapfrog_b_inplace(PhaseState<T>& x, const HelioParams<T>& sys, const T& tau) {
    const T half = tau / T(2);
    drift_momentum_coupling_inplace(x, sys.m0, half);
    helio_kick_inplace(x, sys, tau);
    drift_momentum_coupling_inplace(x, sys.m0, half);
}

template <class T>
PhaseState<T> inner_leapfrog_b(PhaseState<T> x, const HelioParams<T>& sys, const T& tau) {
    inner_leapfrog_b_inplace(x, sys, tau);
    return x;
}

/// Independent two-body flows of every planet around the central mass.
template <class T>
void helio_kepler_inplace(PhaseState<T>& x, const HelioParams<T>& sys, const T& tau) {
    for (std::size_t i = 0; i < sys.planets(); ++i) kepler_advance(x, 3 * i, 3, sys.mu(i), tau, sys.reduced_mass(i));
}

}  // namespace symsplit
