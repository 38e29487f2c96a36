// SPDX-License-Identifier: Apache-2.0

#include "membench/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace membench {

namespace {

using boost::multiprecision::cpp_int;

cpp_int pow10(unsigned exponent) {
    cpp_int result = 1;
    for (unsigned i = 0; i < exponent; ++i) result *= 10;
    return result;
}

[[noreturn]] void bad(std::string_view text) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
}

Rational parse_decimal(std::string_view text) {
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        negative = text[pos] == '-';
        ++pos;
    }
    cpp_int mantissa = 0;
    long scale = 0;
    bool any_digit = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        mantissa = mantissa * 10 + (text[pos++] - '0');
        any_digit = true;
    }
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            mantissa = mantissa * 10 + (text[pos++] - '0');
            --scale;
            any_digit = true;
        }
    }
    if (!any_digit) bad(text);
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        ++pos;
        bool negative_exp = false;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            negative_exp = text[pos] == '-';
            ++pos;
        }
        long exponent = 0;
        bool exp_digit = false;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            exponent = exponent * 10 + (text[pos++] - '0');
            exp_digit = true;
            if (exponent > 1000) bad(text);
        }
        if (!exp_digit) bad(text);
        scale += negative_exp ? -exponent : exponent;
    }
    if (pos != text.size()) bad(text);
    if (negative) mantissa = -mantissa;
    if (scale >= 0) return Rational(mantissa * pow10(static_cast<unsigned>(scale)));
    return Rational(mantissa, pow10(static_cast<unsigned>(-scale)));
}

}  // namespace

Rational parse_rational(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_decimal(text);
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: '" + std::string(text) + "'");
    return num / den;
}

std::string to_string(const Rational& value) {
    const auto& num = boost::multiprecision::numerator(value);
    const auto& den = boost::multiprecision::denominator(value);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

}  // namespace membench
