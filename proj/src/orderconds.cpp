#include "symsplit/orderconds.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace symsplit {

MultiIndex::MultiIndex(std::initializer_list<int> p) : MultiIndex(std::vector<int>(p)) {}

MultiIndex::MultiIndex(std::vector<int> p) : parts(std::move(p)) {
    for (int j : parts)
        if (j < 1) throw std::invalid_argument("multi-index parts must be positive");
}

int MultiIndex::weight() const { return std::accumulate(parts.begin(), parts.end(), 0); }

std::string to_string(const MultiIndex& m) {
    std::string out = "(";
    for (std::size_t i = 0; i < m.parts.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(m.parts[i]);
    }
    return out + ")";
}

bool is_lyndon(const MultiIndex& m) {
    const auto& w = m.parts;
    for (std::size_t split = 1; split < w.size(); ++split) {
        bool less = std::lexicographical_compare(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(split),
                                                 w.begin() + static_cast<std::ptrdiff_t>(split), w.end());
        if (!less) return false;
    }
    return true;
}

std::vector<MultiIndex> lyndon_upto(int max_weight, int max_parts, bool odd_only) {
    if (max_weight < 1 || max_parts < 1) throw std::invalid_argument("lyndon_upto: bounds must be positive");
    // A k-part index has every letter <= max_weight - (k - 1), so the
    // alphabet never needs more than max_weight letters.
    const int alphabet = max_weight;
    const std::size_t n = static_cast<std::size_t>(std::min(max_parts, max_weight));
    std::vector<MultiIndex> out;
    std::vector<int> w{1};
    while (!w.empty()) {
        int weight = std::accumulate(w.begin(), w.end(), 0);
        if (weight <= max_weight && (!odd_only || weight % 2 == 1)) out.emplace_back(w);
        const std::size_t period = w.size();
        while (w.size() < n) w.push_back(w[w.size() - period]);
        while (!w.empty() && w.back() == alphabet) w.pop_back();
        if (!w.empty()) ++w.back();
    }
    std::sort(out.begin(), out.end(), [](const MultiIndex& x, const MultiIndex& y) {
        if (x.weight() != y.weight()) return x.weight() < y.weight();
        return x < y;
    });
    return out;
}

ConditionSet condition_set_for(const GeneralizedOrder& order, bool symmetric, bool cubic) {
    if (order.empty()) throw std::invalid_argument("generalized order must not be empty");
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] < 1) throw std::invalid_argument("generalized order entries must be positive");
        if (i && order[i] > order[i - 1]) throw std::invalid_argument("generalized order must be non-increasing");
        if (symmetric && order[i] % 2 != 0)
            throw std::invalid_argument("symmetric methods have even generalized order entries");
    }
    ConditionSet set;
    set.order = order;
    set.symmetric = symmetric;
    set.include_cubic = cubic;
    for (std::size_t k = 1; k <= order.size(); ++k) {
        for (auto& m : lyndon_upto(order[k - 1], static_cast<int>(k), symmetric)) {
            if (m.k() != static_cast<int>(k)) continue;
            if (m.parts == std::vector<int>{1}) continue;  // sum b = 1 is consistency
            set.indices.push_back(std::move(m));
        }
    }
    return set;
}

boost::rational<std::int64_t> condition_rhs(const MultiIndex& m) {
    if (m.parts.empty()) throw std::invalid_argument("condition_rhs: empty multi-index");
    std::int64_t denom = 1, partial = 0;
    for (int j : m.parts) {
        partial += j;
        denom *= partial;
    }
    return {1, denom};
}

ConditionReport certify_against(const SplittingMethod& method, const ConditionSet& set, const Real& tol,
                                int digits) {
    ScopedDigits precision(digits);
    if (!(tol > 0)) throw std::invalid_argument("certify: tolerance must be positive");
    ConditionReport report;
    report.method_id = method.id;
    report.order = set.order;
    report.tolerance = Real(tol);
    report.digits = digits;

    auto seq = method.expand<Real>();
    auto c = nodes(seq);
    Real sum_b(0), sum_b3(0);
    for (const auto& b : seq.b) {
        sum_b += b;
        sum_b3 += b * b * b;
    }
    report.consistency.push_back({"c_{s+1}-1", c.back() - 1});
    report.consistency.push_back({"sum b-1", sum_b - 1});

    std::vector<Real> c_stage(c.begin(), c.end() - 1);
    for (const auto& m : set.indices)
        report.conditions.push_back({to_string(m), condition_lhs(seq.b, c_stage, m) - condition_rhs_as<Real>(m)});
    if (set.include_cubic) report.cubic = ConditionResidual{"sum b^3", sum_b3};

    Real worst(0);
    auto track = [&](const ConditionResidual& r) {
        Real mag = abs(r.residual);
        if (mag > worst) worst = mag;
    };
    for (const auto& r : report.consistency) track(r);
    for (const auto& r : report.conditions) track(r);
    if (report.cubic) track(*report.cubic);
    report.max_residual = worst;
    report.certified = worst <= report.tolerance;
    return report;
}

ConditionReport certify(const SplittingMethod& method, const Real& tol, int digits) {
    auto set = condition_set_for(method.order, /*symmetric=*/true, method.cubic_condition);
    return certify_against(method, set, tol, digits);
}

std::string format_report(const ConditionReport& report) {
    std::ostringstream out;
    out << report.method_id << " order (" << format_order(report.order) << ") tol " << format_sci(report.tolerance)
        << " digits " << report.digits << ": " << (report.certified ? "certified" : "NOT certified") << '\n';
    auto line = [&](const ConditionResidual& r) {
        out << "  " << r.label << std::string(r.label.size() < 12 ? 12 - r.label.size() : 1, ' ')
            << format_sci(r.residual) << '\n';
    };
    for (const auto& r : report.consistency) line(r);
    for (const auto& r : report.conditions) line(r);
    if (report.cubic) line(*report.cubic);
    return out.str();
}

}  // namespace symsplit
