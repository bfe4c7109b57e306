#pragma once

#include "symsplit/coeffs.hpp"
#include "symsplit/precision.hpp"

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace symsplit {

/// Tuple (j_1, ..., j_k) of positive integers indexing one order condition.
struct MultiIndex {
    std::vector<int> parts;

    MultiIndex() = default;
    MultiIndex(std::initializer_list<int> p);
    explicit MultiIndex(std::vector<int> p);

    int weight() const;
    int k() const { return static_cast<int>(parts.size()); }

    // Dictionary order; a proper prefix sorts first.
    auto operator<=>(const MultiIndex&) const = default;
};

std::string to_string(const MultiIndex& m);  // "(1,2)"

/// True iff every split (i_1..i_k | i_{k+1}..i_m) has prefix < suffix.
bool is_lyndon(const MultiIndex& m);

/// All Lyndon multi-indices with at most `max_parts` parts and weight at most
/// `max_weight` (odd weights only when `odd_only`), sorted by weight then
/// lexicographically. Generated with Duval's algorithm.
std::vector<MultiIndex> lyndon_upto(int max_weight, int max_parts, bool odd_only);

/// The independent conditions for a generalized order. The two consistency
/// equations (sum a = 1, sum b = 1) are implicit and always imposed; the
/// index (1) is therefore not listed.
struct ConditionSet {
    GeneralizedOrder order;
    bool symmetric = true;
    std::vector<MultiIndex> indices;  // by part count, then weight, then lexicographic
    bool include_cubic = false;

    int equation_count() const { return 2 + static_cast<int>(indices.size()) + (include_cubic ? 1 : 0); }
};

ConditionSet condition_set_for(const GeneralizedOrder& order, bool symmetric, bool cubic);

namespace detail {
template <class T>
T pow_int(const T& x, int e) {
    T r(1);
    for (int i = 0; i < e; ++i) r = r * x;
    return r;
}
}  // namespace detail

/// Left-hand side of the order condition for `m`:
///   sum over i_1 <= ... <= i_k of b_{i_1}..b_{i_k} / sigma * c_{i_1}^{j_1-1} .. c_{i_k}^{j_k-1},
/// where runs of repeated stage indices carry 1/(l_1! l_2! ...).
/// Evaluated stage by stage: table[p] holds the value for the prefix of
/// length p over the stages seen so far, and a stage may absorb any
/// consecutive block of letters (weight b^len / len!).
template <class T>
T condition_lhs(const std::vector<T>& b, const std::vector<T>& c, const MultiIndex& m) {
    if (m.parts.empty()) throw std::invalid_argument("condition_lhs: empty multi-index");
    if (b.size() != c.size()) throw std::invalid_argument("condition_lhs: b and c differ in length");
    const int k = m.k();
    std::vector<T> table(static_cast<std::size_t>(k + 1), T(0));
    table[0] = T(1);
    std::vector<T> letter(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (int l = 0; l < k; ++l) letter[static_cast<std::size_t>(l)] = b[i] * detail::pow_int(c[i], m.parts[static_cast<std::size_t>(l)] - 1);
        for (int p = k; p >= 1; --p) {
            T block(1);
            T acc(0);
            for (int q = p - 1; q >= 0; --q) {
                block = block * letter[static_cast<std::size_t>(q)] / T(p - q);
                acc = acc + table[static_cast<std::size_t>(q)] * block;
            }
            table[static_cast<std::size_t>(p)] = table[static_cast<std::size_t>(p)] + acc;
        }
    }
    return table[static_cast<std::size_t>(k)];
}

/// Exact right-hand side 1 / prod_l (j_1 + ... + j_l).
boost::rational<std::int64_t> condition_rhs(const MultiIndex& m);

template <class T>
T condition_rhs_as(const MultiIndex& m) {
    auto r = condition_rhs(m);
    return T(static_cast<long long>(r.numerator())) / T(static_cast<long long>(r.denominator()));
}

struct ConditionResidual {
    std::string label;  // "(1,2)", "sum a", "sum b", "sum b^3"
    Real residual;
};

struct ConditionReport {
    std::string method_id;
    GeneralizedOrder order;
    std::vector<ConditionResidual> consistency;  // c_{s+1} - 1 and sum b - 1
    std::vector<ConditionResidual> conditions;   // one per multi-index
    std::optional<ConditionResidual> cubic;
    Real tolerance;
    Real max_residual;
    int digits = kDefaultDigits;
    bool certified = false;
};

/// Checks `method` against the conditions of its claimed order (symmetric,
/// cubic iff the method claims it) at `digits` significant digits.
ConditionReport certify(const SplittingMethod& method, const Real& tol, int digits = default_digits());

/// Same, against an arbitrary condition set.
ConditionReport certify_against(const SplittingMethod& method, const ConditionSet& set, const Real& tol,
                                int digits = default_digits());

/// One line per condition: label and residual in 3-digit scientific notation.
std::string format_report(const ConditionReport& report);

}  // namespace symsplit
