// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace membench {

// Exact bandwidth arithmetic. GB/s values in topology files may be decimals;
// they are converted to rationals at parse time and never touch a double.
using Rational = boost::multiprecision::cpp_rational;

// Accepts "450", "112.5", "1e3", "2250/7". Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

// "n" for integers, "n/d" otherwise. Canonical: lowest terms, positive d.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

}  // namespace membench
