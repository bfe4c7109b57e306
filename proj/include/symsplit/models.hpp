#pragma once

#include "symsplit/flows.hpp"
#include "symsplit/kepler.hpp"
#include "symsplit/state.hpp"

#include <cmath>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symsplit {

/// Two-part Hamiltonian H = H_a + H_b with an exactly solvable A part.
/// Flows act in place and do not touch the state's time.
template <class T>
class SplitSystem {
public:
    virtual ~SplitSystem() = default;

    virtual std::string name() const = 0;
    /// Length of q (and of p).
    virtual std::size_t dim() const = 0;
    /// Explicit perturbation parameter, when the model has one.
    virtual std::optional<double> epsilon() const { return std::nullopt; }
    /// True when flow_b is a symmetric second-order approximation of the B flow.
    virtual bool approximate_b() const = 0;

    virtual void flow_a(PhaseState<T>& x, const T& tau) const = 0;
    virtual void flow_b(PhaseState<T>& x, const T& tau) const = 0;

    virtual T energy_a(const PhaseState<T>& x) const = 0;
    virtual T energy_b(const PhaseState<T>& x) const = 0;
    T energy(const PhaseState<T>& x) const { return energy_a(x) + energy_b(x); }
};

/// H = |p|^2/2 - 1/r + eps U(q), U = -(1 - 3 q1^2 / r^2) / (2 r^3), planar.
template <class T>
class PerturbedKepler final : public SplitSystem<T> {
public:
    explicit PerturbedKepler(T epsilon) : eps_(std::move(epsilon)) {
        if (eps_ < 0) throw std::invalid_argument("perturbed Kepler: epsilon must be non-negative");
    }

    std::string name() const override { return "kepler"; }
    std::size_t dim() const override { return 2; }
    std::optional<double> epsilon() const override { return static_cast<double>(eps_); }
    bool approximate_b() const override { return false; }
    const T& eps() const { return eps_; }

    void flow_a(PhaseState<T>& x, const T& tau) const override { kepler_advance(x, 0, 2, T(1), tau); }

    void flow_b(PhaseState<T>& x, const T& tau) const override {
        if (eps_ == 0) return;
        std::vector<T> g(2);
        potential_gradient(x.q, g);
        x.add_p(0, -tau * eps_ * g[0]);
        x.add_p(1, -tau * eps_ * g[1]);
    }

    T energy_a(const PhaseState<T>& x) const override {
        using std::sqrt;
        return (x.p[0] * x.p[0] + x.p[1] * x.p[1]) / T(2) - T(1) / sqrt(x.q[0] * x.q[0] + x.q[1] * x.q[1]);
    }
    T energy_b(const PhaseState<T>& x) const override { return eps_ * potential(x.q); }

    /// U without the factor eps.
    static T potential(const std::vector<T>& q) {
        using std::sqrt;
        T r2 = q[0] * q[0] + q[1] * q[1];
        T r = sqrt(r2);
        return -(T(1) - T(3) * q[0] * q[0] / r2) / (T(2) * r2 * r);
    }

    /// grad U = (9/2 q1 r^-5 - 15/2 q1^3 r^-7, 3/2 q2 r^-5 - 15/2 q1^2 q2 r^-7).
    static void potential_gradient(const std::vector<T>& q, std::vector<T>& g) {
        using std::sqrt;
        T r2 = q[0] * q[0] + q[1] * q[1];
        if (!(r2 > 0)) throw std::domain_error("perturbed Kepler: zero radius");
        T r5 = r2 * r2 * sqrt(r2);
        T r7 = r5 * r2;
        T q1sq = q[0] * q[0];
        g[0] = T(9) / T(2) * q[0] / r5 - T(15) / T(2) * q1sq * q[0] / r7;
        g[1] = T(3) / T(2) * q[1] / r5 - T(15) / T(2) * q1sq * q[1] / r7;
    }

    /// q = (1 - e, 0), p = (0, sqrt((1 + e) / (1 - e))): pericentre of the unperturbed ellipse.
    static PhaseState<T> initial_state(const T& e) {
        using std::sqrt;
        return PhaseState<T>({T(1) - e, T(0)}, {T(0), sqrt((T(1) + e) / (T(1) - e))});
    }

private:
    T eps_;
};

/// Sun plus n planets in heliocentric positions r_i and barycentric momenta rt_i.
/// q = (r_1, ..., r_n), p = (rt_1, ..., rt_n), each 3-vectors.
template <class T>
class HelioSystem final : public SplitSystem<T> {
public:
    HelioSystem(HelioParams<T> params, std::vector<std::string> names = {})
        : params_(std::move(params)), names_(std::move(names)) {
        if (params_.planets() < 1) throw std::invalid_argument("helio system: need at least one planet");
        if (!(params_.m0 > 0)) throw std::invalid_argument("helio system: central mass must be positive");
        for (const auto& mi : params_.m)
            if (!(mi > 0)) throw std::invalid_argument("helio system: planet masses must be positive");
    }

    std::string name() const override { return "helio"; }
    std::size_t dim() const override { return 3 * params_.planets(); }
    bool approximate_b() const override { return params_.planets() > 1; }
    const HelioParams<T>& params() const { return params_; }
    const std::vector<std::string>& names() const { return names_; }

    void flow_a(PhaseState<T>& x, const T& tau) const override { helio_kepler_inplace(x, params_, tau); }
    void flow_b(PhaseState<T>& x, const T& tau) const override { inner_leapfrog_b_inplace(x, params_, tau); }

    T energy_a(const PhaseState<T>& x) const override {
        using std::sqrt;
        T h(0);
        for (std::size_t i = 0; i < params_.planets(); ++i) {
            T p2(0), r2(0);
            for (std::size_t k = 0; k < 3; ++k) {
                p2 += x.p[3 * i + k] * x.p[3 * i + k];
                r2 += x.q[3 * i + k] * x.q[3 * i + k];
            }
            h += p2 / (T(2) * params_.reduced_mass(i)) - params_.G * params_.m0 * params_.m[i] / sqrt(r2);
        }
        return h;
    }

    T energy_b(const PhaseState<T>& x) const override {
        using std::sqrt;
        T h(0);
        const std::size_t n = params_.planets();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                T pp(0), d2(0);
                for (std::size_t k = 0; k < 3; ++k) {
                    pp += x.p[3 * i + k] * x.p[3 * j + k];
                    T d = x.q[3 * i + k] - x.q[3 * j + k];
                    d2 += d * d;
                }
                h += pp / params_.m0 - params_.G * params_.m[i] * params_.m[j] / sqrt(d2);
            }
        return h;
    }

private:
    HelioParams<T> params_;
    std::vector<std::string> names_;
};

/// Osculating elements; angles in radians inside the library.
struct KeplerianElements {
    double a = 1.0;
    double e = 0.0;
    double i = 0.0;
    double Omega = 0.0;
    double omega = 0.0;
    double M = 0.0;
};

/// Cartesian position and velocity of an elliptic orbit (0 <= e < 1).
std::pair<Vec3<double>, Vec3<double>> elements_to_state(const KeplerianElements& el, double mu);

/// One body of an elements file: `name m a e i Omega omega M`, angles in degrees.
struct BodyRecord {
    std::string name;
    double mass = 0.0;
    KeplerianElements elements;
};

std::vector<BodyRecord> read_elements(std::istream& in);
std::vector<BodyRecord> read_elements_file(const std::string& path);

/// G in AU^3 / (yr^2 Msun).
inline constexpr double kGaussG = 39.47841760435743;  // 4 pi^2

/// Heliocentric system and initial state built from osculating elements about
/// mu_i = G (m0 + m_i). Momenta are barycentric: rt_i = m_i (v_i + u_0), with
/// u_0 the Sun's barycentric velocity.
struct HelioSetup {
    std::shared_ptr<HelioSystem<double>> system;
    PhaseState<double> initial;
};

HelioSetup helio_system(const std::vector<BodyRecord>& bodies, double m0 = 1.0, double G = kGaussG);

/// Relative energy deviation |H(t) - H(0)| / |H(0)| per sample.
struct EnergySeries {
    std::vector<double> deviation;
    double max = 0.0;
};

EnergySeries energy_error_series(const std::vector<double>& energies);

template <class T>
EnergySeries energy_error_series(const SplitSystem<T>& system, const std::vector<PhaseState<T>>& states) {
    using std::abs;
    if (states.size() < 2) throw std::invalid_argument("energy series: need at least two samples");
    const T h0 = system.energy(states.front());
    if (h0 == 0) throw std::domain_error("energy series: H(0) = 0");
    EnergySeries out;
    out.deviation.reserve(states.size());
    for (const auto& x : states) {
        double d = static_cast<double>(abs(system.energy(x) - h0) / abs(h0));
        out.deviation.push_back(d);
        if (d > out.max) out.max = d;
    }
    return out;
}

}  // namespace symsplit
