// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/numeric.hpp"

#include <cctype>
#include <stdexcept>

namespace imt {

Int floor_div(const Int& a, const Int& b) {
    if (b == 0) {
        throw std::domain_error("floor_div: division by zero");
    }
    Int q;
    mpz_fdiv_q(q.backend().data(), a.backend().data(), b.backend().data());
    return q;
}

Int ceil_div(const Int& a, const Int& b) {
    if (b == 0) {
        throw std::domain_error("ceil_div: division by zero");
    }
    Int q;
    mpz_cdiv_q(q.backend().data(), a.backend().data(), b.backend().data());
    return q;
}

Int floor_of(const Rat& r) { return floor_div(numerator(r), denominator(r)); }

Int ceil_of(const Rat& r) { return ceil_div(numerator(r), denominator(r)); }

bool is_integral(const Rat& r) { return denominator(r) == 1; }

Rat frac_of(const Rat& r) { return r - Rat(floor_of(r)); }

Int gcd_of(const Int& a, const Int& b) {
    Int g;
    mpz_gcd(g.backend().data(), a.backend().data(), b.backend().data());
    return g;
}

Int lcm_of(const Int& a, const Int& b) {
    Int l;
    mpz_lcm(l.backend().data(), a.backend().data(), b.backend().data());
    return l;
}

std::string to_string(const Int& v) { return v.str(); }

std::string to_string(const Rat& v) {
    if (denominator(v) == 1) {
        return numerator(v).str();
    }
    return numerator(v).str() + "/" + denominator(v).str();
}

Int parse_int(std::string_view text) {
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        ++i;
    }
    if (i == text.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
    }
    for (std::size_t j = i; j < text.size(); ++j) {
        if (!std::isdigit(static_cast<unsigned char>(text[j]))) {
            throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
        }
    }
    std::string digits(text.substr(text[0] == '+' ? 1 : 0));
    return Int(digits);
}

Rat parse_rat(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return Rat(parse_int(text));
    }
    const Int num = parse_int(text.substr(0, slash));
    const Int den = parse_int(text.substr(slash + 1));
    if (den == 0) {
        throw std::invalid_argument("zero denominator: '" + std::string(text) + "'");
    }
    return Rat(num, den);
}

}  // namespace imt
