// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/oracle.hpp"

#include <cstdint>
#include <limits>

#include "imt/euf.hpp"

namespace imt {
namespace {

using i64 = std::int64_t;

// Every partial sum stays below this in magnitude, so i64 arithmetic cannot overflow.
const Int kSafe = Int(1) << 60;

/// lo <= sum(coeffs * x) <= hi, with infinite sides as nullopt.
struct Row {
    std::vector<std::pair<std::size_t, i64>> terms;  // by variable order
    std::optional<i64> lo;
    std::optional<i64> hi;
    // rem_min[d] / rem_max[d]: extremes of the terms on variables >= d.
    std::vector<i64> rem_min;
    std::vector<i64> rem_max;
};

i64 narrow(const Int& v) {
    if (abs(v) >= kSafe) {
        throw BoxTooLarge("values exceed the enumerator's integer range");
    }
    return v.convert_to<i64>();
}

class Enumerator {
public:
    Enumerator(const ImtInstance& inst, std::vector<i64> lo, std::vector<i64> hi)
        : inst_(inst), lo_(std::move(lo)), hi_(std::move(hi)), n_(lo_.size()), point_(n_), sums_() {
        for (const auto& c : inst.constraints()) {
            const LinConstraint nc = normalize(c);
            Row r;
            for (const auto& [v, k] : nc.lhs.terms()) {
                r.terms.emplace_back(v.index, narrow(k));
            }
            const i64 rhs = narrow(nc.rhs);
            if (nc.rel != Relation::Le) {
                r.lo = rhs;
            }
            if (nc.rel != Relation::Ge) {
                r.hi = rhs;
            }
            rows_.push_back(std::move(r));
        }
        Row obj;
        for (const auto& [v, k] : inst.objective().terms()) {
            obj.terms.emplace_back(v.index, narrow(k));
        }
        rows_.push_back(std::move(obj));
        for (auto& r : rows_) {
            r.rem_min.assign(n_ + 1, 0);
            r.rem_max.assign(n_ + 1, 0);
            std::vector<i64> coeff(n_, 0);
            for (const auto& [v, k] : r.terms) {
                coeff[v] = k;
            }
            for (std::size_t d = n_; d-- > 0;) {
                const i64 a = coeff[d] * lo_[d];
                const i64 b = coeff[d] * hi_[d];
                r.rem_min[d] = r.rem_min[d + 1] + std::min(a, b);
                r.rem_max[d] = r.rem_max[d + 1] + std::max(a, b);
            }
            if (r.rem_min[0] <= -narrow(kSafe / 2) || r.rem_max[0] >= narrow(kSafe / 2)) {
                throw BoxTooLarge("values exceed the enumerator's integer range");
            }
        }
        sums_.assign(rows_.size(), 0);
        // by_var_[v]: (row, coeff) pairs touching v
        by_var_.resize(n_);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (const auto& [v, k] : rows_[r].terms) {
                by_var_[v].emplace_back(r, k);
            }
        }
    }

    void run() { dfs(0); }

    const std::optional<std::vector<i64>>& best() const { return best_; }
    i64 best_value() const { return best_value_; }

private:
    bool viable(std::size_t depth) const {
        for (std::size_t r = 0; r + 1 < rows_.size(); ++r) {
            const Row& row = rows_[r];
            if (row.hi && sums_[r] + row.rem_min[depth] > *row.hi) {
                return false;
            }
            if (row.lo && sums_[r] + row.rem_max[depth] < *row.lo) {
                return false;
            }
        }
        // Later points are lexicographically larger, so only strict improvements count.
        const std::size_t o = rows_.size() - 1;
        return !best_ || sums_[o] + rows_[o].rem_min[depth] < best_value_;
    }

    void dfs(std::size_t depth) {
        if (!viable(depth)) {
            return;
        }
        if (depth == n_) {
            leaf();
            return;
        }
        for (i64 x = lo_[depth]; x <= hi_[depth]; ++x) {
            point_[depth] = x;
            for (const auto& [r, k] : by_var_[depth]) {
                sums_[r] += k * x;
            }
            dfs(depth + 1);
            for (const auto& [r, k] : by_var_[depth]) {
                sums_[r] -= k * x;
            }
        }
    }

    void leaf() {
        if (!inst_.atoms().empty()) {
            std::vector<Int> vals(point_.begin(), point_.end());
            if (functional_consistency(inst_, Assignment(std::move(vals)))) {
                return;
            }
        }
        best_ = point_;
        best_value_ = sums_.back();
    }

    const ImtInstance& inst_;
    std::vector<i64> lo_;
    std::vector<i64> hi_;
    std::size_t n_;
    std::vector<i64> point_;
    std::vector<Row> rows_;  // constraints, then the objective
    std::vector<i64> sums_;
    std::vector<std::vector<std::pair<std::size_t, i64>>> by_var_;
    std::optional<std::vector<i64>> best_;
    i64 best_value_ = 0;
};

}  // namespace

Int box_volume(const Bounds& box) {
    Int vol = 1;
    for (std::uint32_t i = 0; i < box.size(); ++i) {
        const Interval& iv = box[VarId{i}];
        if (!iv.finite()) {
            throw BoxTooLarge("box is unbounded on variable " + std::to_string(i));
        }
        if (*iv.hi < *iv.lo) {
            return 0;
        }
        vol *= *iv.hi - *iv.lo + 1;
    }
    return vol;
}

SolveResult brute_force_solve(const ImtInstance& inst, const Bounds& box, const OracleOptions& options) {
    if (box.size() != inst.num_vars()) {
        throw std::invalid_argument("box has " + std::to_string(box.size()) + " intervals for " +
                                    std::to_string(inst.num_vars()) + " variables");
    }
    Bounds eff = box;
    for (std::uint32_t i = 0; i < box.size(); ++i) {
        const VarId v{i};
        const Interval& own = inst.bounds()[v];
        Interval& iv = eff[v];
        if (own.lo && (!iv.lo || *own.lo > *iv.lo)) {
            iv.lo = own.lo;
        }
        if (own.hi && (!iv.hi || *own.hi < *iv.hi)) {
            iv.hi = own.hi;
        }
    }
    const Int vol = box_volume(eff);
    if (vol > options.volume_cap) {
        throw BoxTooLarge("box volume " + to_string(vol) + " exceeds the cap " + to_string(options.volume_cap));
    }
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    if (vol == 0) {
        return out;
    }
    std::vector<i64> lo, hi;
    for (std::uint32_t i = 0; i < eff.size(); ++i) {
        lo.push_back(narrow(*eff[VarId{i}].lo));
        hi.push_back(narrow(*eff[VarId{i}].hi));
    }
    Enumerator e(inst, std::move(lo), std::move(hi));
    e.run();
    if (!e.best()) {
        return out;
    }
    std::vector<Int> vals(e.best()->begin(), e.best()->end());
    Assignment a(std::move(vals));
    out.status = SolveStatus::Optimal;
    out.value = Int(e.best_value());
    out.model = a;
    out.best = Incumbent::feasible(std::move(a));
    return out;
}

SolveResult brute_force_solve(const ImtInstance& inst, const OracleOptions& options) {
    return brute_force_solve(inst, inst.bounds(), options);
}

}  // namespace imt
