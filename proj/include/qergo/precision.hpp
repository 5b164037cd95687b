#pragma once

// MPFR-backed reals with unbounded exponent range, for evaluating the theorem
// condition at astronomically large dimensions.

#include "qergo/rational.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>

namespace qergo {

using HighPrecision = boost::multiprecision::mpfr_float;

inline constexpr unsigned default_precision_bits = 256;

inline unsigned bits_to_digits10(unsigned bits)
{
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

/// Sets the default MPFR precision for the lifetime of the scope.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits) : saved_(HighPrecision::default_precision())
    {
        HighPrecision::default_precision(bits_to_digits10(bits));
    }
    ~PrecisionScope() { HighPrecision::default_precision(saved_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

/// Accepts decimal / scientific literals ("1e8", "0.5"), powers ("2^100",
/// "10^22") and rationals ("1/3").
inline HighPrecision parse_high_precision(std::string_view text)
{
    static const std::regex number(R"(^\s*[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?\s*$)");
    static const std::regex power(R"(^\s*([^\^]+)\^([^\^]+)$)");
    static const std::regex ratio(R"(^\s*([^/]+)/([^/]+)$)");
    const std::string s(text);
    std::smatch m;
    if(std::regex_match(s, m, power)) {
        return boost::multiprecision::pow(parse_high_precision(m[1].str()), parse_high_precision(m[2].str()));
    }
    if(std::regex_match(s, m, ratio)) {
        const HighPrecision den = parse_high_precision(m[2].str());
        if(den == 0) {
            throw ParseError("zero denominator in '" + s + "'");
        }
        return parse_high_precision(m[1].str()) / den;
    }
    if(!std::regex_match(s, number)) {
        throw ParseError("malformed number: '" + s + "'");
    }
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    return HighPrecision(s.substr(first, last - first + 1));
}

inline std::string to_sci_string(const HighPrecision& x, int digits = 12)
{
    std::ostringstream os;
    os.precision(digits);
    os << std::scientific << x;
    return os.str();
}

} // namespace qergo
