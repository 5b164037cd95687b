#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qergo {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Raised when an input document or literal cannot be read.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses "<int>" or "<int>/<int>" into an exact rational.
inline Rational parse_rational(std::string_view text)
{
    static const std::regex pattern(R"(^\s*([+-]?[0-9]+)(?:\s*/\s*([0-9]+))?\s*$)");
    const std::string s(text);
    std::smatch m;
    if(!std::regex_match(s, m, pattern)) {
        throw ParseError("malformed rational literal: '" + s + "'");
    }
    const BigInt num(m[1].str().front() == '+' ? m[1].str().substr(1) : m[1].str());
    if(!m[2].matched) {
        return Rational(num);
    }
    const BigInt den(m[2].str());
    if(den == 0) {
        throw ParseError("zero denominator in rational literal: '" + s + "'");
    }
    return Rational(num, den);
}

inline std::string to_string(const Rational& r)
{
    const BigInt& num = boost::multiprecision::numerator(r);
    const BigInt& den = boost::multiprecision::denominator(r);
    if(den == 1) {
        return num.str();
    }
    return num.str() + "/" + den.str();
}

inline double to_double(const Rational& r)
{
    return r.convert_to<double>();
}

inline bool is_integer(const Rational& r)
{
    return boost::multiprecision::denominator(r) == 1;
}

/// Narrows an exact integer to int64, throwing if it does not fit.
inline std::int64_t to_int64(const BigInt& v)
{
    if(v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw std::overflow_error("integer does not fit in 64 bits: " + v.str());
    }
    return v.convert_to<std::int64_t>();
}

/// Nearest rational with the given denominator (ties away from zero).
inline Rational snap_to_denominator(double value, std::int64_t denominator)
{
    if(denominator <= 0) {
        throw std::invalid_argument("snapping denominator must be positive");
    }
    const double scaled = std::round(value * static_cast<double>(denominator));
    if(!std::isfinite(scaled)) {
        throw std::invalid_argument("cannot snap a non-finite value");
    }
    return Rational(BigInt(static_cast<long long>(scaled)), BigInt(denominator));
}

} // namespace qergo
