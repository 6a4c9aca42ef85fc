// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace imt {

/// Arbitrary-precision signed integer.
using Int = boost::multiprecision::mpz_int;
/// Arbitrary-precision rational, always kept in lowest terms with a positive denominator.
using Rat = boost::multiprecision::mpq_rational;

Int floor_of(const Rat& r);
Int ceil_of(const Rat& r);
bool is_integral(const Rat& r);
/// Fractional part r - floor(r), in [0, 1).
Rat frac_of(const Rat& r);

/// Floor/ceil of a / b for b != 0.
Int floor_div(const Int& a, const Int& b);
Int ceil_div(const Int& a, const Int& b);

Int gcd_of(const Int& a, const Int& b);
Int lcm_of(const Int& a, const Int& b);

std::string to_string(const Int& v);
/// "p" for integers, "p/q" otherwise.
std::string to_string(const Rat& v);

/// Parses an optionally signed decimal integer; throws std::invalid_argument on junk.
Int parse_int(std::string_view text);
/// Parses "p" or "p/q".
Rat parse_rat(std::string_view text);

}  // namespace imt
