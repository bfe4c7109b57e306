#include "symsplit/precision.hpp"

#include <cstdlib>
#include <stdexcept>

namespace symsplit {

int default_digits() {
    if (const char* env = std::getenv("SYMSPLIT_DIGITS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 16 && v <= 10000) return static_cast<int>(v);
    }
    return kDefaultDigits;
}

ScopedDigits::ScopedDigits(int digits10) : saved_(Real::default_precision()) {
    if (digits10 < 1) throw std::invalid_argument("precision must be positive");
    Real::default_precision(static_cast<unsigned>(digits10));
}

ScopedDigits::~ScopedDigits() { Real::default_precision(saved_); }

Real parse_real(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw std::invalid_argument("empty number");
    try {
        return Real(s);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
}

std::string format_fixed(const Real& x, int significant) {
    if (significant < 1) throw std::invalid_argument("significant digits must be positive");
    // Scientific form with significant-1 decimals carries exactly `significant` digits.
    std::string sci = x.str(significant - 1, std::ios_base::scientific);
    bool negative = !sci.empty() && sci[0] == '-';
    if (negative) sci.erase(0, 1);
    auto epos = sci.find_first_of("eE");
    int exponent = std::stoi(sci.substr(epos + 1));
    std::string mantissa = sci.substr(0, epos);
    std::string digits;
    for (char ch : mantissa)
        if (ch != '.') digits += ch;
    digits.resize(static_cast<std::size_t>(significant), '0');

    std::string out;
    if (exponent < 0) {
        out = "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
    } else if (exponent + 1 >= significant) {
        out = digits + std::string(static_cast<std::size_t>(exponent + 1 - significant), '0');
    } else {
        out = digits.substr(0, static_cast<std::size_t>(exponent + 1)) + "." +
              digits.substr(static_cast<std::size_t>(exponent + 1));
    }
    bool all_zero = digits.find_first_not_of('0') == std::string::npos;
    return (negative && !all_zero) ? "-" + out : out;
}

std::string format_sci(const Real& x, int decimals) {
    return x.str(decimals, std::ios_base::scientific);
}

}  // namespace symsplit
