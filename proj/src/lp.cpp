// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/lp.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "imt/kernel.hpp"

namespace imt {

namespace {

constexpr std::size_t kPivotLimit = 1'000'000;

/// Merges repeated (row, sense) pairs and drops zero weights.
std::vector<Multiplier> compact(std::vector<Multiplier> terms) {
    std::map<std::pair<RowRef, int>, Rat> sum;
    std::vector<std::pair<RowRef, int>> order;
    for (auto& m : terms) {
        const auto key = std::pair{m.row, static_cast<int>(m.sense)};
        auto [it, fresh] = sum.try_emplace(key, 0);
        if (fresh) {
            order.push_back(key);
        }
        it->second += m.weight;
    }
    std::vector<Multiplier> out;
    for (const auto& key : order) {
        const Rat& w = sum.at(key);
        if (w != 0) {
            out.push_back(Multiplier{key.first, static_cast<Sense>(key.second), w});
        }
    }
    return out;
}

Int denominator_lcm(const std::vector<Rat>& v) {
    Int l = 1;
    for (const auto& q : v) {
        l = lcm_of(l, denominator(q));
    }
    return l;
}

}  // namespace

// ---------------------------------------------------------------- Tableau

Tableau::Tableau(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds)
    : num_vars_(bounds.size()), objective_(objective), cols_(bounds.size()) {
    for (std::uint32_t v = 0; v < num_vars_; ++v) {
        const auto& iv = bounds[VarId{v}];
        if (iv.lo) {
            add_bound(v, Sense::Ge, Rat(*iv.lo), Multiplier{RowRef{RowRef::Kind::Lower, v}, Sense::Ge, 1});
        }
        if (iv.hi) {
            add_bound(v, Sense::Le, Rat(*iv.hi), Multiplier{RowRef{RowRef::Kind::Upper, v}, Sense::Le, 1});
        }
    }
    const auto add_row = [&](const LinConstraint& raw, RowRef ref) {
        const LinConstraint c = normalize(raw);
        const bool ge = c.rel == Relation::Ge || c.rel == Relation::Eq;
        const bool le = c.rel == Relation::Le || c.rel == Relation::Eq;
        if (c.lhs.empty()) {
            if (ge && c.rhs > 0) {
                early_conflict_ = Farkas{{Multiplier{ref, Sense::Ge, 1}}};
            } else if (le && c.rhs < 0) {
                early_conflict_ = Farkas{{Multiplier{ref, Sense::Le, 1}}};
            }
            return;
        }
        // lhs = kappa * p with p primitive and its first coefficient positive.
        Int kappa = c.lhs.content();
        if (c.lhs.terms().front().second < 0) {
            kappa = -kappa;
        }
        std::vector<LinExpr::Term> pt;
        for (const auto& [v, a] : c.lhs.terms()) {
            pt.emplace_back(v, Int(a / kappa));
        }
        const LinExpr p = LinExpr::from_terms(std::move(pt));
        const std::size_t col = p.size() == 1 ? p.terms().front().first.index : slack_for(p);
        const Rat inv = Rat(1) / Rat(abs(kappa));
        const Rat bound = Rat(c.rhs) / Rat(kappa);
        if (ge) {
            add_bound(col, kappa > 0 ? Sense::Ge : Sense::Le, bound, Multiplier{ref, Sense::Ge, inv});
        }
        if (le) {
            add_bound(col, kappa > 0 ? Sense::Le : Sense::Ge, bound, Multiplier{ref, Sense::Le, inv});
        }
    };
    for (std::uint32_t i = 0; i < sub.constraints().size(); ++i) {
        add_row(sub.constraints()[i], RowRef{RowRef::Kind::Constraint, i});
    }
    for (std::uint32_t i = 0; i < sub.equalities().size(); ++i) {
        add_row(sub.equalities()[i].to_constraint(), RowRef{RowRef::Kind::Equality, i});
    }
    for (std::size_t j = 0; j < cols_.size() && !early_conflict_; ++j) {
        if (cols_[j].lo && cols_[j].hi && *cols_[j].lo > *cols_[j].hi) {
            std::vector<Multiplier> terms;
            push_reason(terms, j, Sense::Ge, 1);
            push_reason(terms, j, Sense::Le, 1);
            early_conflict_ = Farkas{compact(std::move(terms))};
        }
    }

    const std::size_t ncols = cols_.size();
    row_of_.assign(ncols, -1);
    value_.assign(ncols, 0);
    for (std::size_t j = 0; j < num_vars_; ++j) {
        if (cols_[j].lo) {
            value_[j] = *cols_[j].lo;
        } else if (cols_[j].hi) {
            value_[j] = *cols_[j].hi;
        }
    }
    for (std::size_t k = 0; k < slack_forms_.size(); ++k) {
        std::vector<Rat> row(ncols, 0);
        Rat val = 0;
        for (const auto& [v, a] : slack_forms_[k].terms()) {
            row[v.index] = Rat(a);
            val += Rat(a) * value_[v.index];
        }
        const std::size_t col = num_vars_ + k;
        row_of_[col] = static_cast<std::ptrdiff_t>(rows_.size());
        basic_.push_back(col);
        rows_.push_back(std::move(row));
        value_[col] = val;
    }
}

std::size_t Tableau::slack_for(const LinExpr& primitive) {
    for (std::size_t k = 0; k < slack_forms_.size(); ++k) {
        if (slack_forms_[k] == primitive) {
            return num_vars_ + k;
        }
    }
    slack_forms_.push_back(primitive);
    cols_.emplace_back();
    return cols_.size() - 1;
}

void Tableau::add_bound(std::size_t col, Sense side, const Rat& value, Multiplier reason) {
    auto& c = cols_[col];
    if (side == Sense::Ge) {
        if (!c.lo || value > *c.lo) {
            c.lo = value;
            c.lo_reason = Reason{std::move(reason)};
        }
    } else if (!c.hi || value < *c.hi) {
        c.hi = value;
        c.hi_reason = Reason{std::move(reason)};
    }
}

void Tableau::push_reason(std::vector<Multiplier>& out, std::size_t col, Sense side, const Rat& factor) const {
    const auto& r = side == Sense::Ge ? cols_[col].lo_reason : cols_[col].hi_reason;
    out.push_back(Multiplier{r->row.row, r->row.sense, factor * r->row.weight});
}

void Tableau::pivot(std::size_t r, std::size_t e) {
    if (++pivots_ > kPivotLimit) {
        throw std::logic_error("simplex pivot limit exceeded");
    }
    const std::size_t b = basic_[r];
    std::vector<Rat>& row = rows_[r];
    const Rat a = row[e];
    // e = (b - sum_{k != e} row[k] k) / a
    std::vector<std::size_t> nz;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k != e && row[k] != 0) {
            row[k] = -row[k] / a;
            nz.push_back(k);
        }
    }
    row[e] = 0;
    row[b] = Rat(1) / a;
    nz.push_back(b);
    const auto substitute = [&](std::vector<Rat>& other) {
        const Rat c = other[e];
        if (c == 0) {
            return;
        }
        other[e] = 0;
        for (auto k : nz) {
            other[k] += c * row[k];
        }
    };
    for (std::size_t r2 = 0; r2 < rows_.size(); ++r2) {
        if (r2 != r) {
            substitute(rows_[r2]);
        }
    }
    if (!obj_row_.empty()) {
        substitute(obj_row_);
    }
    basic_[r] = e;
    row_of_[e] = static_cast<std::ptrdiff_t>(r);
    row_of_[b] = -1;
}

void Tableau::update_nonbasic(std::size_t col, const Rat& v) {
    const Rat theta = v - value_[col];
    value_[col] = v;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r][col] != 0) {
            value_[basic_[r]] += rows_[r][col] * theta;
        }
    }
}

void Tableau::pivot_and_update(std::size_t r, std::size_t e, const Rat& v) {
    const std::size_t b = basic_[r];
    const Rat theta = (v - value_[b]) / rows_[r][e];
    value_[b] = v;
    value_[e] += theta;
    for (std::size_t r2 = 0; r2 < rows_.size(); ++r2) {
        if (r2 != r && rows_[r2][e] != 0) {
            value_[basic_[r2]] += rows_[r2][e] * theta;
        }
    }
    pivot(r, e);
}

Farkas Tableau::row_conflict(std::size_t r, bool below) const {
    // basic = sum a_j x_j with every x_j pinned at the bound that blocks repair.
    std::vector<Multiplier> terms;
    const auto& row = rows_[r];
    push_reason(terms, basic_[r], below ? Sense::Ge : Sense::Le, 1);
    for (std::size_t j = 0; j < row.size(); ++j) {
        const Rat& a = row[j];
        if (a == 0) {
            continue;
        }
        if ((a > 0) == below) {
            push_reason(terms, j, Sense::Le, abs(a));
        } else {
            push_reason(terms, j, Sense::Ge, abs(a));
        }
    }
    return Farkas{compact(std::move(terms))};
}

std::optional<Farkas> Tableau::feasibility() {
    while (true) {
        std::optional<std::size_t> pick;
        bool below = false;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const std::size_t b = basic_[r];
            const auto& c = cols_[b];
            const bool lo_bad = c.lo && value_[b] < *c.lo;
            const bool hi_bad = c.hi && value_[b] > *c.hi;
            if ((lo_bad || hi_bad) && (!pick || b < basic_[*pick])) {
                pick = r;
                below = lo_bad;
            }
        }
        if (!pick) {
            return std::nullopt;
        }
        const std::size_t r = *pick;
        const auto& row = rows_[r];
        std::optional<std::size_t> enter;
        for (std::size_t j = 0; j < row.size() && !enter; ++j) {
            const Rat& a = row[j];
            if (a == 0) {
                continue;
            }
            const bool can_up = !cols_[j].hi || value_[j] < *cols_[j].hi;
            const bool can_down = !cols_[j].lo || value_[j] > *cols_[j].lo;
            const bool raise_basic = (a > 0 && can_up) || (a < 0 && can_down);
            const bool lower_basic = (a < 0 && can_up) || (a > 0 && can_down);
            if ((below && raise_basic) || (!below && lower_basic)) {
                enter = j;
            }
        }
        if (!enter) {
            return row_conflict(r, below);
        }
        const auto& c = cols_[basic_[r]];
        pivot_and_update(r, *enter, below ? *c.lo : *c.hi);
    }
}

void Tableau::build_objective_row() {
    obj_row_.assign(cols_.size(), 0);
    for (const auto& [v, c] : objective_.terms()) {
        obj_row_[v.index] = Rat(c);
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const std::size_t b = basic_[r];
        const Rat c = obj_row_[b];
        if (c == 0) {
            continue;
        }
        obj_row_[b] = 0;
        for (std::size_t j = 0; j < rows_[r].size(); ++j) {
            if (rows_[r][j] != 0) {
                obj_row_[j] += c * rows_[r][j];
            }
        }
    }
}

std::vector<Rat> Tableau::original_point() const { return {value_.begin(), value_.begin() + num_vars_}; }

LpOutcome Tableau::solve() {
    optimal_ = false;
    if (early_conflict_) {
        return LpInfeasible{*early_conflict_};
    }
    if (auto f = feasibility()) {
        return LpInfeasible{std::move(*f)};
    }
    build_objective_row();
    while (true) {
        std::optional<std::size_t> enter;
        int dir = 0;
        for (std::size_t j = 0; j < cols_.size() && !enter; ++j) {
            const Rat& d = obj_row_[j];
            if (row_of_[j] >= 0 || d == 0) {
                continue;
            }
            if (d < 0 && (!cols_[j].hi || value_[j] < *cols_[j].hi)) {
                enter = j;
                dir = 1;
            } else if (d > 0 && (!cols_[j].lo || value_[j] > *cols_[j].lo)) {
                enter = j;
                dir = -1;
            }
        }
        if (!enter) {
            break;
        }
        const std::size_t e = *enter;
        // Ratio test; ties go to the smallest column index (Bland).
        std::optional<Rat> best;
        std::size_t best_col = 0;
        std::optional<std::size_t> best_row;  // nullopt: bound flip of e
        Rat best_target;
        const auto offer = [&](const Rat& t, std::size_t col, std::optional<std::size_t> row, const Rat& target) {
            if (!best || t < *best || (t == *best && col < best_col)) {
                best = t;
                best_col = col;
                best_row = row;
                best_target = target;
            }
        };
        if (dir > 0 && cols_[e].hi) {
            offer(*cols_[e].hi - value_[e], e, std::nullopt, *cols_[e].hi);
        } else if (dir < 0 && cols_[e].lo) {
            offer(value_[e] - *cols_[e].lo, e, std::nullopt, *cols_[e].lo);
        }
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const Rat& a = rows_[r][e];
            if (a == 0) {
                continue;
            }
            const Rat rate = dir > 0 ? a : Rat(-a);
            const std::size_t b = basic_[r];
            if (rate > 0 && cols_[b].hi) {
                offer((*cols_[b].hi - value_[b]) / rate, b, r, *cols_[b].hi);
            } else if (rate < 0 && cols_[b].lo) {
                offer((value_[b] - *cols_[b].lo) / -rate, b, r, *cols_[b].lo);
            }
        }
        if (!best) {
            std::vector<Rat> ray(num_vars_, 0);
            for (std::size_t j = 0; j < num_vars_; ++j) {
                if (j == e) {
                    ray[j] = dir;
                } else if (row_of_[j] >= 0) {
                    ray[j] = rows_[static_cast<std::size_t>(row_of_[j])][e] * dir;
                }
            }
            const Int scale = denominator_lcm(ray);
            std::vector<Int> iray(num_vars_);
            for (std::size_t j = 0; j < num_vars_; ++j) {
                iray[j] = numerator(ray[j] * Rat(scale));
            }
            return LpUnbounded{original_point(), std::move(iray)};
        }
        if (!best_row) {
            update_nonbasic(e, best_target);
        } else {
            pivot_and_update(*best_row, e, best_target);
        }
    }

    optimal_ = true;
    LpOptimal out;
    out.point = original_point();
    out.value = 0;
    for (const auto& [v, c] : objective_.terms()) {
        out.value += Rat(c) * value_[v.index];
    }
    std::vector<Multiplier> terms;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
        const Rat& d = obj_row_[j];
        if (row_of_[j] >= 0 || d == 0) {
            continue;
        }
        if (d > 0) {
            push_reason(terms, j, Sense::Ge, d);
        } else {
            push_reason(terms, j, Sense::Le, Rat(-d));
        }
    }
    out.dual = LbDual{ObjValue::finite(ceil_of(out.value)), compact(std::move(terms))};
    return out;
}

bool Tableau::fractional() const {
    if (!optimal_) {
        return false;
    }
    for (std::size_t j = 0; j < num_vars_; ++j) {
        if (!is_integral(value_[j])) {
            return true;
        }
    }
    return false;
}

std::vector<GomoryCut> Tableau::gomory_cuts(std::size_t cap) const {
    if (!optimal_) {
        throw std::logic_error("gomory_cuts needs an optimal tableau");
    }
    if (!fractional()) {
        throw NoFractionalRow("LP optimum is integral");
    }
    struct Scored {
        GomoryCut cut;
        Rat score;
    };
    std::vector<Scored> found;
    // Every column is integer-valued (slacks are primitive forms), so a nonbasic column
    // resting on a fractional bound gives a cut by rounding that bound's row.
    for (std::size_t j = 0; j < cols_.size(); ++j) {
        if (row_of_[j] >= 0 || is_integral(value_[j])) {
            continue;
        }
        const bool at_lo = cols_[j].lo && value_[j] == *cols_[j].lo;
        if (!at_lo && !(cols_[j].hi && value_[j] == *cols_[j].hi)) {
            continue;
        }
        const LinExpr form = j < num_vars_ ? LinExpr::of(VarId{static_cast<std::uint32_t>(j)}) : slack_forms_[j - num_vars_];
        std::vector<Multiplier> terms;
        push_reason(terms, j, at_lo ? Sense::Ge : Sense::Le, 1);
        const Rat rhs = at_lo ? value_[j] : Rat(-value_[j]);
        const Int k = ceil_of(rhs);
        Rat norm = 0;
        for (const auto& [v, c] : form.terms()) {
            norm += Rat(c) * Rat(c);
        }
        const Rat violation = Rat(k) - rhs;
        GomoryCut cut{LinConstraint{at_lo ? form : form.negated(), Relation::Ge, k},
                      CgCut{{CgDerivation{{CgLine{compact(std::move(terms))}}}}}, violation};
        found.push_back(Scored{std::move(cut), violation * violation / norm});
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const std::size_t b = basic_[r];
        if (b >= num_vars_ || is_integral(value_[b])) {
            continue;
        }
        // b = sum a_j x_j; with y_j = sigma_j (x_j - bound_j) >= 0 the row reads
        // b = value_b + sum mu_j y_j, mu_j = sigma_j a_j.
        std::vector<std::tuple<std::size_t, int, Rat>> entries;
        bool usable = true;
        for (std::size_t j = 0; j < rows_[r].size() && usable; ++j) {
            const Rat& a = rows_[r][j];
            if (a == 0) {
                continue;
            }
            if (cols_[j].lo && value_[j] == *cols_[j].lo) {
                entries.emplace_back(j, 1, a);
            } else if (cols_[j].hi && value_[j] == *cols_[j].hi) {
                entries.emplace_back(j, -1, Rat(-a));
            } else {
                usable = false;
            }
        }
        if (!usable) {
            continue;
        }
        std::optional<Scored> best;
        for (int form = 0; form < 2; ++form) {
            std::vector<Multiplier> terms;
            std::map<VarId, Rat> lhs;
            Rat rhs = 0;
            for (const auto& [j, sigma, mu] : entries) {
                const Rat w = form == 0 ? frac_of(mu) : Rat(ceil_of(mu)) - mu;
                if (w == 0) {
                    continue;
                }
                push_reason(terms, j, sigma > 0 ? Sense::Ge : Sense::Le, w);
                const Rat ws = sigma > 0 ? w : Rat(-w);
                if (j < num_vars_) {
                    lhs[VarId{static_cast<std::uint32_t>(j)}] += ws;
                } else {
                    for (const auto& [v, k] : slack_forms_[j - num_vars_].terms()) {
                        lhs[v] += ws * Rat(k);
                    }
                }
                rhs += ws * value_[j];
            }
            LinExpr e;
            bool integral = true;
            for (const auto& [v, q] : lhs) {
                if (q == 0) {
                    continue;
                }
                if (!is_integral(q)) {
                    integral = false;
                    break;
                }
                e.add(v, numerator(q));
            }
            if (!integral || e.empty()) {
                continue;
            }
            const Int g = e.content();
            const Rat scaled_rhs = rhs / Rat(g);
            const Int k = ceil_of(scaled_rhs);
            const Rat violation = Rat(k) - scaled_rhs;
            if (violation == 0) {
                continue;
            }
            LinExpr primitive;
            Rat norm = 0;
            for (const auto& [v, c] : e.terms()) {
                primitive.add(v, Int(c / g));
                norm += Rat(c / g) * Rat(c / g);
            }
            for (auto& m : terms) {
                m.weight /= Rat(g);
            }
            GomoryCut cut{LinConstraint{std::move(primitive), Relation::Ge, k},
                          CgCut{{CgDerivation{{CgLine{compact(std::move(terms))}}}}}, violation};
            Rat score = violation * violation / norm;
            if (!best || score > best->score) {
                best = Scored{std::move(cut), std::move(score)};
            }
        }
        if (best && std::none_of(found.begin(), found.end(),
                                 [&](const Scored& s) { return s.cut.cut == best->cut.cut; })) {
            found.push_back(std::move(*best));
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
    std::vector<GomoryCut> out;
    for (std::size_t i = 0; i < found.size() && i < cap; ++i) {
        out.push_back(std::move(found[i].cut));
    }
    return out;
}

LpOutcome lp_solve(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds) {
    Tableau t(sub, objective, bounds);
    return t.solve();
}

std::pair<ObjValue, LbDual> lower_bound(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds) {
    LpOutcome o = lp_solve(sub, objective, bounds);
    if (auto* opt = std::get_if<LpOptimal>(&o)) {
        return {opt->dual.bound, std::move(opt->dual)};
    }
    if (std::holds_alternative<LpUnbounded>(o)) {
        return {ObjValue::neg_inf(), LbDual{}};
    }
    return {ObjValue::pos_inf(), LbDual{}};
}

std::vector<GomoryCut> derive_gomory_cuts(const Tableau& t, std::size_t cap) { return t.gomory_cuts(cap); }

// ---------------------------------------------------------------- propagation

namespace {

/// Evidence for a bound: a row (weight 1) whose ">=" form is the bound, or a line of
/// the shared pool.
struct Evidence {
    RowRef row;
    Sense sense;
};

class Propagator {
public:
    Propagator(const Subproblem& sub, const Bounds& bounds) : sub_(sub), n_(bounds.size()) {
        lo_.resize(n_);
        hi_.resize(n_);
        for (std::uint32_t v = 0; v < n_; ++v) {
            const auto& iv = bounds[VarId{v}];
            if (iv.lo) {
                lo_[v] = {*iv.lo, Evidence{RowRef{RowRef::Kind::Lower, v}, Sense::Ge}};
            }
            if (iv.hi) {
                hi_[v] = {*iv.hi, Evidence{RowRef{RowRef::Kind::Upper, v}, Sense::Le}};
            }
        }
        for (std::uint32_t i = 0; i < sub.constraints().size(); ++i) {
            add_halves(sub.constraints()[i], RowRef{RowRef::Kind::Constraint, i});
        }
        for (std::uint32_t i = 0; i < sub.equalities().size(); ++i) {
            add_halves(sub.equalities()[i].to_constraint(), RowRef{RowRef::Kind::Equality, i});
        }
    }

    Propagation run(const Bounds& original, std::size_t max_passes) {
        Propagation out;
        for (std::size_t pass = 0; pass < max_passes; ++pass) {
            bool changed = false;
            for (const auto& h : halves_) {
                if (h.form.lhs.empty()) {
                    if (h.form.rhs > 0) {
                        out.infeasible = CgDerivation{{CgLine{{Multiplier{h.ev.row, h.ev.sense, 1}}}}};
                        return out;
                    }
                    continue;
                }
                for (const auto& [v, a] : h.form.lhs.terms()) {
                    if (tighten(h, v, a, changed)) {
                        out.infeasible = empty_interval(v.index);
                        return out;
                    }
                }
            }
            if (!changed) {
                break;
            }
        }
        out.bounds = original;
        for (std::uint32_t v = 0; v < n_; ++v) {
            if (lo_[v]) {
                out.bounds[VarId{v}].lo = lo_[v]->first;
            }
            if (hi_[v]) {
                out.bounds[VarId{v}].hi = hi_[v]->first;
            }
            const auto& iv = original[VarId{v}];
            if (!lo_[v] || !hi_[v] || lo_[v]->first != hi_[v]->first || (iv.lo && iv.hi && *iv.lo == *iv.hi)) {
                continue;
            }
            const auto d = SimpleEquality::fix(VarId{v}, lo_[v]->first);
            if (!sub_.contains(d)) {
                out.equalities.emplace_back(d, BoundFix{{derivation(lo_[v]->second), derivation(hi_[v]->second)}});
            }
        }
        if (forms(out)) {
            out.equalities.clear();
        }
        return out;
    }

private:
    struct Half {
        GeForm form;
        Evidence ev;
    };

    void add_halves(const LinConstraint& c, RowRef ref) {
        const LinConstraint n = normalize(c);
        if (n.rel == Relation::Ge || n.rel == Relation::Eq) {
            halves_.push_back(Half{GeForm{n.lhs, n.rhs}, Evidence{ref, Sense::Ge}});
        }
        if (n.rel == Relation::Le || n.rel == Relation::Eq) {
            halves_.push_back(Half{GeForm{n.lhs.negated(), -n.rhs}, Evidence{ref, Sense::Le}});
        }
    }

    Evidence add_line(std::vector<Multiplier> terms) {
        pool_.push_back(CgLine{std::move(terms)});
        return Evidence{RowRef{RowRef::Kind::Line, static_cast<std::uint32_t>(pool_.size() - 1)}, Sense::Ge};
    }

    /// Returns true when v's interval became empty.
    bool tighten(const Half& h, VarId v, const Int& a, bool& changed) {
        Int slack = h.form.rhs;  // b - max over the other terms
        std::vector<Multiplier> terms;
        const Int mag = abs(a);
        terms.push_back(Multiplier{h.ev.row, h.ev.sense, Rat(1) / Rat(mag)});
        for (const auto& [u, b] : h.form.lhs.terms()) {
            if (u == v) {
                continue;
            }
            const auto& bound = b > 0 ? hi_[u.index] : lo_[u.index];
            if (!bound) {
                return false;
            }
            slack -= b * bound->first;
            terms.push_back(Multiplier{bound->second.row, bound->second.sense, Rat(abs(b)) / Rat(mag)});
        }
        const Int t = ceil_div(slack, mag);  // a > 0: v >= t;  a < 0: -v >= t
        const bool direct = mag == 1 && h.form.lhs.size() == 1;
        if (a > 0) {
            if (lo_[v.index] && lo_[v.index]->first >= t) {
                return false;
            }
            lo_[v.index] = {t, direct ? h.ev : add_line(std::move(terms))};
        } else {
            if (hi_[v.index] && hi_[v.index]->first <= -t) {
                return false;
            }
            hi_[v.index] = {Int(-t), direct ? h.ev : add_line(std::move(terms))};
        }
        changed = true;
        return lo_[v.index] && hi_[v.index] && lo_[v.index]->first > hi_[v.index]->first;
    }

    CgDerivation empty_interval(std::size_t v) {
        const Evidence e = add_line({Multiplier{lo_[v]->second.row, lo_[v]->second.sense, 1},
                                     Multiplier{hi_[v]->second.row, hi_[v]->second.sense, 1}});
        return derivation(e);
    }

    /// Self-contained derivation whose last line is `ev`.
    CgDerivation derivation(const Evidence& ev) const {
        if (ev.row.kind != RowRef::Kind::Line) {
            return CgDerivation{{CgLine{{Multiplier{ev.row, ev.sense, 1}}}}};
        }
        std::vector<std::uint32_t> needed;
        std::vector<std::uint32_t> stack{ev.row.index};
        std::vector<bool> seen(pool_.size(), false);
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            if (seen[i]) {
                continue;
            }
            seen[i] = true;
            needed.push_back(i);
            for (const auto& m : pool_[i].terms) {
                if (m.row.kind == RowRef::Kind::Line) {
                    stack.push_back(m.row.index);
                }
            }
        }
        std::sort(needed.begin(), needed.end());
        std::map<std::uint32_t, std::uint32_t> local;
        CgDerivation out;
        for (auto i : needed) {
            CgLine line = pool_[i];
            for (auto& m : line.terms) {
                if (m.row.kind == RowRef::Kind::Line) {
                    m.row.index = local.at(m.row.index);
                }
            }
            local[i] = static_cast<std::uint32_t>(out.lines.size());
            out.lines.push_back(std::move(line));
        }
        return out;
    }

    /// Rows sharing a primitive form p (lhs = g * p): tightest p >= l and p <= u with
    /// rhs rounded by g. Empty ranges are infeasible; x - y pinned is a Diff.
    bool forms(Propagation& out) {
        using Side = std::optional<std::pair<Int, Evidence>>;
        std::map<LinExpr, std::pair<Side, Side>> by_form;
        for (const auto& h : halves_) {
            if (h.form.lhs.size() < 2) {
                continue;
            }
            Int g = h.form.lhs.content();
            const bool positive = h.form.lhs.terms().front().second > 0;
            std::vector<LinExpr::Term> pt;
            for (const auto& [v, a] : h.form.lhs.terms()) {
                pt.emplace_back(v, positive ? Int(a / g) : Int(-a / g));
            }
            const Int t = ceil_div(h.form.rhs, g);
            const auto ev = [&] { return g == 1 ? h.ev : add_line({Multiplier{h.ev.row, h.ev.sense, Rat(1) / Rat(g)}}); };
            auto& slot = by_form[LinExpr::from_terms(std::move(pt))];
            if (positive) {
                if (!slot.first || slot.first->first < t) {
                    slot.first = {t, ev()};
                }
            } else if (!slot.second || slot.second->first > -t) {
                slot.second = {Int(-t), ev()};  // evidence reads -p >= t
            }
        }
        for (const auto& [p, sides] : by_form) {
            const auto& [lo, hi] = sides;
            if (!lo || !hi) {
                continue;
            }
            if (lo->first > hi->first) {
                out.infeasible = derivation(add_line({Multiplier{lo->second.row, lo->second.sense, 1},
                                                      Multiplier{hi->second.row, hi->second.sense, 1}}));
                return true;
            }
            if (lo->first != hi->first || p.size() != 2 || p.terms()[0].second != 1 || p.terms()[1].second != -1) {
                continue;
            }
            const VarId x = p.terms()[0].first;
            const VarId y = p.terms()[1].first;
            if (fixed(x) && fixed(y)) {
                continue;
            }
            const auto d = SimpleEquality::diff(x, y, lo->first);
            if (!sub_.contains(d)) {
                out.equalities.emplace_back(d, BoundFix{{derivation(lo->second), derivation(hi->second)}});
            }
        }
        return false;
    }

    bool fixed(VarId v) const { return lo_[v.index] && hi_[v.index] && lo_[v.index]->first == hi_[v.index]->first; }

    const Subproblem& sub_;
    std::size_t n_;
    std::vector<std::optional<std::pair<Int, Evidence>>> lo_;
    std::vector<std::optional<std::pair<Int, Evidence>>> hi_;  // evidence reads -v >= -hi
    std::vector<Half> halves_;
    std::vector<CgLine> pool_;
};

}  // namespace

Propagation propagate_bounds(const Subproblem& sub, const Bounds& bounds, std::size_t max_passes) {
    return Propagator(sub, bounds).run(bounds, max_passes);
}

}  // namespace imt
