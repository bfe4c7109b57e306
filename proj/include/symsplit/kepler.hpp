#pragma once

#include "symsplit/state.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace symsplit {

struct KeplerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
using Vec3 = std::array<T, 3>;

template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Stumpff functions c_0..c_3 at z.
template <class T>
struct Stumpff {
    T c0, c1, c2, c3;
};

template <class T>
Stumpff<T> stumpff(T z) {
    using std::abs;
    using std::cos;
    using std::cosh;
    using std::sin;
    using std::sinh;
    using std::sqrt;
    int halvings = 0;
    while (abs(z) > T(4)) {
        z /= T(4);
        ++halvings;
    }
    Stumpff<T> s;
    if (abs(z) < T(0.1)) {
        // c_k = sum_n (-z)^n / (2n + k)!, summed for k = 2, 3; the rest by recurrence.
        const T eps = std::numeric_limits<T>::epsilon();
        T term2 = T(1) / T(2), term3 = T(1) / T(6);
        T c2 = term2, c3 = term3;
        for (int n = 1; n < 200; ++n) {
            term2 = -term2 * z / T((2 * n + 1) * (2 * n + 2));
            term3 = -term3 * z / T((2 * n + 2) * (2 * n + 3));
            c2 += term2;
            c3 += term3;
            if (abs(term2) <= eps * abs(c2) && abs(term3) <= eps * abs(c3)) break;
        }
        s.c2 = c2;
        s.c3 = c3;
        s.c1 = T(1) - z * c3;
        s.c0 = T(1) - z * c2;
    } else if (z > 0) {
        T sz = sqrt(z);
        T sn = sin(sz), cs = cos(sz);
        s.c0 = cs;
        s.c1 = sn / sz;
        s.c2 = (T(1) - cs) / z;
        s.c3 = (sz - sn) / (z * sz);
    } else {
        T sz = sqrt(-z);
        T sh = sinh(sz), ch = cosh(sz);
        s.c0 = ch;
        s.c1 = sh / sz;
        s.c2 = (ch - T(1)) / (-z);
        s.c3 = (sh - sz) / (-z * sz);
    }
    for (; halvings > 0; --halvings) {
        Stumpff<T> d;
        d.c0 = T(2) * s.c0 * s.c0 - T(1);
        d.c1 = s.c0 * s.c1;
        d.c2 = s.c1 * s.c1 / T(2);
        d.c3 = (s.c2 + s.c0 * s.c3) / T(4);
        s = d;
    }
    return s;
}

/// Change of position and velocity after time tau on the two-body orbit.
template <class T>
struct KeplerIncrement {
    Vec3<T> dr;
    Vec3<T> dv;
    int iterations = 0;
};

inline constexpr int kKeplerMaxIterations = 50;

/// Universal-variable propagation with Gauss f and g functions. The result is
/// returned as increments (f-1) r + g v and fdot r + (gdot-1) v so callers can
/// accumulate them with compensation.
template <class T>
KeplerIncrement<T> kepler_increment(const Vec3<T>& r0, const Vec3<T>& v0, const T& mu, const T& tau) {
    using std::abs;
    using std::sqrt;
    if (!(mu > 0)) throw KeplerError("kepler: gravitational parameter must be positive");
    const T r0n = sqrt(dot(r0, r0));
    if (!(r0n > 0)) throw KeplerError("kepler: zero radius");
    KeplerIncrement<T> inc{};
    inc.dr = {T(0), T(0), T(0)};
    inc.dv = {T(0), T(0), T(0)};
    if (tau == T(0)) return inc;

    const T eta = dot(r0, v0);
    const T beta = T(2) * mu / r0n - dot(v0, v0);
    const T eps = std::numeric_limits<T>::epsilon();

    struct Eval {
        T F, r, G1, G2, G3, scale;  // scale bounds the round-off in F
    };
    auto evaluate = [&](const T& s) {
        auto st = stumpff(beta * s * s);
        T G1 = s * st.c1, G2 = s * s * st.c2, G3 = s * s * s * st.c3;
        T G0 = st.c0;
        T t1 = r0n * G1, t2 = eta * G2, t3 = mu * G3;
        return Eval{t1 + t2 + t3 - tau, r0n * G0 + eta * G1 + mu * G2, G1, G2, G3,
                    abs(t1) + abs(t2) + abs(t3) + abs(tau)};
    };

    // F(s) = r0 G1 + eta G2 + mu G3 - tau is increasing in s (dF/ds = r > 0); keep a bracket for the bisection safeguard.
    const int sign = tau > 0 ? 1 : -1;
    T lo(0), hi(0);
    T s = tau / r0n;
    Eval e = evaluate(s);
    for (int grow = 0; grow < 400 && sign * e.F < 0; ++grow) {
        lo = s;
        s *= T(2);
        e = evaluate(s);
    }
    if (sign * e.F < 0) throw KeplerError("kepler: failed to bracket the universal anomaly");
    hi = s;
    // Bracket endpoints in increasing order of |s|: lo has sign*F < 0, hi has sign*F >= 0.

    // Newton with a bisection fallback. Once corrections stop shrinking the
    // iteration sits at the round-off floor of F; keep the best iterate.
    Eval best = e;
    T prev_step(0);
    int it = 0;
    bool converged = false;
    for (; it < kKeplerMaxIterations; ++it) {
        if (abs(e.F) < abs(best.F)) best = e;
        if (e.F == T(0)) {
            converged = true;
            break;
        }
        if (sign * e.F < 0)
            lo = s;
        else
            hi = s;
        if (abs(hi - lo) <= T(4) * eps * abs(s)) {
            converged = true;
            break;
        }
        T step = -e.F / e.r;
        const bool tiny = abs(step) <= T(4) * eps * abs(s) || abs(e.F) <= T(2) * eps * e.scale;
        const bool stalled = it > 0 && abs(step) <= T(1e-8) * abs(s) && abs(step) >= abs(prev_step) / T(2);
        if (tiny || stalled) {
            T next = s + step;
            Eval en = evaluate(next);
            if (abs(en.F) <= abs(best.F)) best = en;
            converged = true;
            break;
        }
        T next = s + step;
        bool inside = (sign > 0) ? (next >= lo && next <= hi) : (next <= lo && next >= hi);
        if (!inside) {
            next = (lo + hi) / T(2);
            step = next - s;
        }
        prev_step = step;
        s = next;
        e = evaluate(s);
    }
    if (!converged)
        throw KeplerError("kepler: universal Kepler equation did not converge in " +
                          std::to_string(kKeplerMaxIterations) + " iterations");
    e = best;
    inc.iterations = it + 1;

    const T f_m1 = -mu * e.G2 / r0n;
    const T g = r0n * e.G1 + eta * e.G2;
    const T fdot = -mu * e.G1 / (r0n * e.r);
    const T gdot_m1 = -mu * e.G2 / e.r;
    for (int k = 0; k < 3; ++k) {
        inc.dr[k] = f_m1 * r0[k] + g * v0[k];
        inc.dv[k] = fdot * r0[k] + gdot_m1 * v0[k];
    }
    return inc;
}

/// Advances the body stored at q[offset..offset+dim), p[offset..offset+dim)
/// along the Kepler orbit with parameter mu. Velocity is p / mass_factor.
template <class T>
void kepler_advance(PhaseState<T>& x, std::size_t offset, std::size_t dim, const T& mu, const T& tau,
                    const T& mass_factor = T(1)) {
    Vec3<T> r{T(0), T(0), T(0)}, v{T(0), T(0), T(0)};
    for (std::size_t k = 0; k < dim; ++k) {
        r[k] = x.q[offset + k];
        v[k] = x.p[offset + k] / mass_factor;
    }
    auto inc = kepler_increment(r, v, mu, tau);
    for (std::size_t k = 0; k < dim; ++k) {
        x.add_q(offset + k, inc.dr[k]);
        x.add_p(offset + k, mass_factor * inc.dv[k]);
    }
}

/// Exact two-body flow of a single planar or spatial orbit (dim 2 or 3).
template <class T>
PhaseState<T> kepler_flow(PhaseState<T> state, const T& mu, const T& tau) {
    const std::size_t dim = state.dim();
    if (dim != 2 && dim != 3) throw std::invalid_argument("kepler_flow: state dimension must be 2 or 3");
    kepler_advance(state, 0, dim, mu, tau);
    state.add_t(tau);
    return state;
}

}  // namespace symsplit
