#include "symsplit/models.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace symsplit {

namespace {

double solve_kepler_equation(double M, double e) {
    double E = e < 0.8 ? M : std::numbers::pi;
    for (int it = 0; it < 100; ++it) {
        double f = E - e * std::sin(E) - M;
        double d = f / (1.0 - e * std::cos(E));
        E -= d;
        if (std::abs(d) <= 1e-16 * (1.0 + std::abs(E))) break;
    }
    return E;
}

constexpr double kDegree = std::numbers::pi / 180.0;

}  // namespace

std::pair<Vec3<double>, Vec3<double>> elements_to_state(const KeplerianElements& el, double mu) {
    if (!(el.a > 0)) throw std::invalid_argument("elements: semi-major axis must be positive");
    if (!(el.e >= 0 && el.e < 1)) throw std::invalid_argument("elements: only elliptic orbits (0 <= e < 1) are supported");
    if (!(mu > 0)) throw std::invalid_argument("elements: mu must be positive");

    const double M = std::remainder(el.M, 2.0 * std::numbers::pi);
    const double E = solve_kepler_equation(M, el.e);
    const double cosE = std::cos(E), sinE = std::sin(E);
    const double root = std::sqrt(1.0 - el.e * el.e);
    const double n = std::sqrt(mu / (el.a * el.a * el.a));
    const double denom = 1.0 - el.e * cosE;

    const double x = el.a * (cosE - el.e);
    const double y = el.a * root * sinE;
    const double vx = -el.a * n * sinE / denom;
    const double vy = el.a * n * root * cosE / denom;

    // Perifocal to reference frame: Rz(Omega) Rx(i) Rz(omega).
    const double cO = std::cos(el.Omega), sO = std::sin(el.Omega);
    const double ci = std::cos(el.i), si = std::sin(el.i);
    const double cw = std::cos(el.omega), sw = std::sin(el.omega);
    const double P[3] = {cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si};
    const double Q[3] = {-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si};

    Vec3<double> r{}, v{};
    for (int k = 0; k < 3; ++k) {
        r[k] = x * P[k] + y * Q[k];
        v[k] = vx * P[k] + vy * Q[k];
    }
    return {r, v};
}

std::vector<BodyRecord> read_elements(std::istream& in) {
    std::vector<BodyRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        BodyRecord b;
        if (!(ls >> b.name)) continue;
        double i_deg, node_deg, peri_deg, mean_deg;
        if (!(ls >> b.mass >> b.elements.a >> b.elements.e >> i_deg >> node_deg >> peri_deg >> mean_deg))
            throw std::runtime_error("elements file line " + std::to_string(lineno) +
                                     ": expected `name m a e i Omega omega M`");
        std::string extra;
        if (ls >> extra) throw std::runtime_error("elements file line " + std::to_string(lineno) + ": trailing field '" + extra + "'");
        b.elements.i = i_deg * kDegree;
        b.elements.Omega = node_deg * kDegree;
        b.elements.omega = peri_deg * kDegree;
        b.elements.M = mean_deg * kDegree;
        if (!(b.mass > 0)) throw std::runtime_error("elements file line " + std::to_string(lineno) + ": mass must be positive");
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<BodyRecord> read_elements_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open elements file '" + path + "'");
    return read_elements(in);
}

HelioSetup helio_system(const std::vector<BodyRecord>& bodies, double m0, double G) {
    HelioParams<double> params{m0, {}, G};
    std::vector<std::string> names;
    for (const auto& b : bodies) {
        params.m.push_back(b.mass);
        names.push_back(b.name);
    }
    auto system = std::make_shared<HelioSystem<double>>(params, names);

    const std::size_t n = bodies.size();
    std::vector<double> q(3 * n), v(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [r, vel] = elements_to_state(bodies[i].elements, params.mu(i));
        for (std::size_t k = 0; k < 3; ++k) {
            q[3 * i + k] = r[k];
            v[3 * i + k] = vel[k];
        }
    }
    // Zero total momentum: u_0 = -sum m_j v_j / (m0 + sum m_j).
    double total = m0;
    Vec3<double> mv{0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        total += params.m[i];
        for (std::size_t k = 0; k < 3; ++k) mv[k] += params.m[i] * v[3 * i + k];
    }
    std::vector<double> p(3 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 3; ++k) p[3 * i + k] = params.m[i] * (v[3 * i + k] - mv[k] / total);

    return {system, PhaseState<double>(q, p)};
}

EnergySeries energy_error_series(const std::vector<double>& energies) {
    if (energies.size() < 2) throw std::invalid_argument("energy series: need at least two samples");
    const double h0 = energies.front();
    if (h0 == 0.0) throw std::domain_error("energy series: H(0) = 0");
    EnergySeries out;
    out.deviation.reserve(energies.size());
    for (double h : energies) {
        double d = std::abs(h - h0) / std::abs(h0);
        out.deviation.push_back(d);
        if (d > out.max) out.max = d;
    }
    return out;
}

}  // namespace symsplit
