#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <string>
#include <string_view>

namespace symsplit {

/// Variable-precision binary float used for coefficient verification and the
/// solver. Expression templates are off so generic code can use `auto`.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

inline constexpr int kDefaultDigits = 50;

/// Digits used when the caller does not ask for a specific precision.
/// Reads SYMSPLIT_DIGITS from the environment; falls back to kDefaultDigits.
int default_digits();

/// Sets the working precision of newly created Real values for the lifetime
/// of the guard. Not thread-safe: the mpfr default precision is global.
class ScopedDigits {
public:
    explicit ScopedDigits(int digits10);
    ~ScopedDigits();
    ScopedDigits(const ScopedDigits&) = delete;
    ScopedDigits& operator=(const ScopedDigits&) = delete;

private:
    unsigned saved_;
};

/// Parses a plain decimal literal ("-0.0145", "1e-30") at the current precision.
Real parse_real(std::string_view text);

/// Formats x with exactly `significant` significant digits in positional
/// notation, e.g. format_fixed(0.0265.., 3) == "0.0266".
std::string format_fixed(const Real& x, int significant);

/// Scientific notation with `decimals` digits after the point ("1.234e-41").
std::string format_sci(const Real& x, int decimals = 3);

}  // namespace symsplit
