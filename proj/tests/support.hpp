// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reference computations for tests. None of these reuse solver code paths beyond the
// data model: points are enumerated, vertices found by solving square systems, and
// certificates re-added by hand.

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "imt/certificate.hpp"
#include "imt/model.hpp"
#include "imt/native_format.hpp"

namespace imt::test {

inline Bounds box(std::size_t n, const Int& lo, const Int& hi) {
    Bounds b(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        b[VarId{i}] = Interval{lo, hi};
    }
    return b;
}

/// Calls f on every integer point of a finite box, in lexicographic order.
inline void for_each_point(const Bounds& b, const std::function<void(const Assignment&)>& f) {
    const std::size_t n = b.size();
    std::vector<Int> p(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (*b[VarId{i}].lo > *b[VarId{i}].hi) {
            return;
        }
        p[i] = *b[VarId{i}].lo;
    }
    while (true) {
        f(Assignment(p));
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (p[i] < *b[VarId{static_cast<std::uint32_t>(i)}].hi) {
                ++p[i];
                break;
            }
            p[i] = *b[VarId{static_cast<std::uint32_t>(i)}].lo;
            if (i == 0) {
                return;
            }
        }
        if (n == 0) {
            return;
        }
    }
}

inline Rat eval_rat(const LinExpr& e, const std::vector<Rat>& x) {
    Rat s = 0;
    for (const auto& [v, c] : e.terms()) {
        s += Rat(c) * x[v.index];
    }
    return s;
}

inline bool satisfies_rat(const LinConstraint& c, const std::vector<Rat>& x) {
    const Rat l = eval_rat(c.lhs, x);
    const Rat r(c.rhs);
    switch (c.rel) {
        case Relation::Lt: return l < r;
        case Relation::Le: return l <= r;
        case Relation::Eq: return l == r;
        case Relation::Ge: return l >= r;
        case Relation::Gt: return l > r;
    }
    return false;
}

/// Unique solution of a square rational system, if any.
inline std::optional<std::vector<Rat>> solve_square(std::vector<std::vector<Rat>> a, std::vector<Rat> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && a[piv][col] == 0) {
            ++piv;
        }
        if (piv == n) {
            return std::nullopt;
        }
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r != col && a[r][col] != 0) {
                const Rat f = a[r][col] / a[col][col];
                for (std::size_t k = col; k < n; ++k) {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    std::vector<Rat> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = b[i] / a[i][i];
    }
    return x;
}

/// min objective over {x : cs hold, x in the finite box} by vertex enumeration. nullopt
/// when the polytope is empty. Constraints must be normalized (Le / Ge / Eq).
inline std::optional<Rat> vertex_min(const std::vector<LinConstraint>& cs, const Bounds& b, const LinExpr& obj) {
    const std::size_t n = b.size();
    std::vector<std::pair<std::vector<Rat>, Rat>> planes;
    for (const auto& c : cs) {
        std::vector<Rat> row(n, 0);
        for (const auto& [v, k] : c.lhs.terms()) {
            row[v.index] = Rat(k);
        }
        planes.emplace_back(std::move(row), Rat(c.rhs));
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        std::vector<Rat> row(n, 0);
        row[i] = 1;
        planes.emplace_back(row, Rat(*b[VarId{i}].lo));
        planes.emplace_back(row, Rat(*b[VarId{i}].hi));
    }
    std::optional<Rat> best;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t start) {
        if (depth == n) {
            std::vector<std::vector<Rat>> a;
            std::vector<Rat> rhs;
            for (std::size_t i : pick) {
                a.push_back(planes[i].first);
                rhs.push_back(planes[i].second);
            }
            auto x = solve_square(a, rhs);
            if (!x) {
                return;
            }
            for (std::uint32_t i = 0; i < n; ++i) {
                if ((*x)[i] < Rat(*b[VarId{i}].lo) || (*x)[i] > Rat(*b[VarId{i}].hi)) {
                    return;
                }
            }
            for (const auto& c : cs) {
                if (!satisfies_rat(c, *x)) {
                    return;
                }
            }
            const Rat v = eval_rat(obj, *x);
            if (!best || v < *best) {
                best = v;
            }
            return;
        }
        for (std::size_t i = start; i < planes.size(); ++i) {
            pick[depth] = i;
            rec(depth + 1, i + 1);
        }
    };
    rec(0, 0);
    return best;
}

/// Weighted sum of ">=" readings of rows of `sub` and instance bounds.
struct Aggregate {
    std::map<VarId, Rat> coeffs;  // zero entries removed
    Rat rhs = 0;
    bool ok = true;  // false when a multiplier is negative, cites a missing row or a bad sense
};

inline Aggregate aggregate_rows(const Subproblem& sub, const Bounds& bounds, const std::vector<Multiplier>& terms) {
    Aggregate out;
    for (const auto& m : terms) {
        if (m.weight < 0) {
            out.ok = false;
            continue;
        }
        LinExpr lhs;
        Int rhs;
        Relation rel = Relation::Eq;
        switch (m.row.kind) {
            case RowRef::Kind::Constraint: {
                if (m.row.index >= sub.constraints().size()) {
                    out.ok = false;
                    continue;
                }
                const LinConstraint c = normalize(sub.constraints()[m.row.index]);
                lhs = c.lhs;
                rhs = c.rhs;
                rel = c.rel;
                break;
            }
            case RowRef::Kind::Equality: {
                if (m.row.index >= sub.equalities().size()) {
                    out.ok = false;
                    continue;
                }
                const LinConstraint c = sub.equalities()[m.row.index].to_constraint();
                lhs = c.lhs;
                rhs = c.rhs;
                break;
            }
            case RowRef::Kind::Lower:
            case RowRef::Kind::Upper: {
                const VarId v{m.row.index};
                if (v.index >= bounds.size()) {
                    out.ok = false;
                    continue;
                }
                const bool lower = m.row.kind == RowRef::Kind::Lower;
                const auto& side = lower ? bounds[v].lo : bounds[v].hi;
                if (!side) {
                    out.ok = false;
                    continue;
                }
                lhs = LinExpr::of(v);
                rhs = *side;
                rel = lower ? Relation::Ge : Relation::Le;
                break;
            }
            case RowRef::Kind::Line:
                out.ok = false;
                continue;
        }
        if ((rel == Relation::Ge && m.sense != Sense::Ge) || (rel == Relation::Le && m.sense != Sense::Le)) {
            out.ok = false;
            continue;
        }
        const Rat sign = m.sense == Sense::Ge ? 1 : -1;
        for (const auto& [v, k] : lhs.terms()) {
            out.coeffs[v] += sign * m.weight * Rat(k);
        }
        out.rhs += sign * m.weight * Rat(rhs);
    }
    for (auto it = out.coeffs.begin(); it != out.coeffs.end();) {
        it = it->second == 0 ? out.coeffs.erase(it) : std::next(it);
    }
    return out;
}

/// A Farkas certificate is valid when its aggregate reads 0 >= positive.
inline bool farkas_valid(const Subproblem& sub, const Bounds& bounds, const Farkas& f) {
    const Aggregate a = aggregate_rows(sub, bounds, f.terms);
    return a.ok && a.coeffs.empty() && a.rhs > 0;
}

/// The dual's aggregate is exactly the objective and its rhs rounds up to the bound.
inline bool dual_valid(const Subproblem& sub, const Bounds& bounds, const LinExpr& obj, const LbDual& d) {
    const Aggregate a = aggregate_rows(sub, bounds, d.terms);
    if (!a.ok || !d.bound.is_finite()) {
        return false;
    }
    std::map<VarId, Rat> want;
    for (const auto& [v, k] : obj.terms()) {
        want[v] = Rat(k);
    }
    return a.coeffs == want && d.bound.value() <= ceil_of(a.rhs);
}

}  // namespace imt::test
