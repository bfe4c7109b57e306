#pragma once

#include "symsplit/precision.hpp"

#include <iosfwd>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <string_view>
#include <vector>

namespace symsplit {

enum class MethodKind {
    ABA,   // exact B-flow
    BAB,   // stored as an (s+1)-stage ABA scheme with a_1 = 0
    ABAH,  // B-flow replaced by a symmetric 2nd-order approximation
};

std::string_view to_string(MethodKind kind);
MethodKind parse_method_kind(std::string_view text);

/// Generalized order (r_1, ..., r_m), r_1 >= ... >= r_m.
using GeneralizedOrder = std::vector<int>;

std::string format_order(const GeneralizedOrder& order);  // "10,6,4"
GeneralizedOrder parse_order(std::string_view text);      // accepts "10,6,4" or "(10,6,4)"

/// A published coefficient. The decimal string is the source of truth; the
/// double is its correctly rounded image.
class CoefficientValue {
public:
    CoefficientValue() = default;
    explicit CoefficientValue(std::string decimal);

    const std::string& decimal() const { return decimal_; }
    double working() const { return working_; }
    /// Significant digits carried by the decimal string.
    int significant_digits() const;
    /// Value at the current Real precision.
    Real exact() const { return parse_real(decimal_); }

private:
    std::string decimal_;
    double working_ = 0.0;
};

/// Full palindromic sequence: a.size() == s + 1, b.size() == s.
template <class T>
struct StageSequence {
    std::vector<T> a;
    std::vector<T> b;
    int stages() const { return static_cast<int>(b.size()); }
};

struct MethodError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Kernel sizes for an s-stage symmetric ABA composition.
constexpr int a_kernel_size(int stages) { return (stages + 2) / 2; }
constexpr int b_kernel_size(int stages) { return (stages + 1) / 2; }

/// Expanded position i of the a-sequence (0-based) maps to this kernel slot.
constexpr int a_kernel_slot(int i, int stages) { return i < stages - i ? i : stages - i; }
constexpr int b_kernel_slot(int i, int stages) { return i < stages - 1 - i ? i : stages - 1 - i; }

struct SplittingMethod {
    std::string id;
    MethodKind kind = MethodKind::ABA;
    GeneralizedOrder order;
    int stages = 0;
    std::vector<CoefficientValue> a_kernel;
    std::vector<CoefficientValue> b_kernel;
    bool cubic_condition = false;

    /// Throws MethodError when kernel lengths disagree with `stages`.
    void validate() const;

    bool approximate_b() const { return kind == MethodKind::ABAH; }

    /// Palindromic expansion at type T. Real values use the current precision.
    template <class T>
    StageSequence<T> expand() const;
};

template <class T>
StageSequence<T> SplittingMethod::expand() const {
    validate();
    auto value = [](const CoefficientValue& c) -> T {
        if constexpr (std::is_same_v<T, double>)
            return c.working();
        else if constexpr (std::is_same_v<T, Real>)
            return c.exact();
        else
            return T(c.exact());
    };
    StageSequence<T> seq;
    seq.a.reserve(static_cast<std::size_t>(stages + 1));
    seq.b.reserve(static_cast<std::size_t>(stages));
    for (int i = 0; i <= stages; ++i) seq.a.push_back(value(a_kernel[static_cast<std::size_t>(a_kernel_slot(i, stages))]));
    for (int i = 0; i < stages; ++i) seq.b.push_back(value(b_kernel[static_cast<std::size_t>(b_kernel_slot(i, stages))]));
    return seq;
}

/// Full a/b sequences for `method` in high precision.
StageSequence<Real> expand_palindrome(const SplittingMethod& method);

/// Partial sums c_i = a_1 + ... + a_i for i = 1..s+1.
template <class T>
std::vector<T> nodes(const StageSequence<T>& seq) {
    std::vector<T> c;
    c.reserve(seq.a.size());
    T acc(0);
    for (const auto& a : seq.a) {
        acc += a;
        c.push_back(acc);
    }
    return c;
}

std::vector<Real> nodes(const SplittingMethod& method);

/// Builds a BAB scheme (b_1 a_2 b_2 ... a_2 b_1) as an (s+1)-stage ABA with a_1 = 0.
/// `a_inner` holds a_2.., `b_kernel` holds b_1...
SplittingMethod make_bab(std::string id, GeneralizedOrder order, int bab_stages,
                         const std::vector<std::string>& a_inner, const std::vector<std::string>& b_kernel);

/// Built-in identifiers, in catalog order.
const std::vector<std::string>& registry_ids();

/// Looks up a built-in method; throws MethodError for unknown ids.
const SplittingMethod& registry_lookup(std::string_view id);

const std::vector<SplittingMethod>& registry();

/// Plain-text catalog: one header line per method, one coefficient per line.
void write_catalog(std::ostream& out, const std::vector<SplittingMethod>& methods);

/// Reads the catalog format back. Lines starting with '#' are ignored.
std::vector<SplittingMethod> read_catalog(std::istream& in);

}  // namespace symsplit
