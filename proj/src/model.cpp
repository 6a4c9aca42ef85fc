// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/model.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace imt {

namespace {

std::size_t hash_int(const Int& v) {
    const auto* z = v.backend().data();
    std::size_t h = static_cast<std::size_t>(z->_mp_size) * 0x9e3779b97f4a7c15ULL;
    if (z->_mp_size != 0) {
        h ^= static_cast<std::size_t>(mpz_getlimbn(z, 0)) + 0x7f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

void hash_mix(std::size_t& seed, std::size_t v) { seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2); }

}  // namespace

// ---------------------------------------------------------------- LinExpr

LinExpr LinExpr::of(VarId v, const Int& coeff) {
    LinExpr e;
    e.add(v, coeff);
    return e;
}

LinExpr LinExpr::from_terms(std::vector<Term> terms) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    LinExpr e;
    for (auto& [v, c] : terms) {
        if (!e.terms_.empty() && e.terms_.back().first == v) {
            e.terms_.back().second += c;
            if (e.terms_.back().second == 0) {
                e.terms_.pop_back();
            }
        } else if (c != 0) {
            e.terms_.emplace_back(v, std::move(c));
        }
    }
    return e;
}

void LinExpr::add(VarId v, const Int& coeff) {
    if (coeff == 0) {
        return;
    }
    auto it = std::lower_bound(terms_.begin(), terms_.end(), v,
                               [](const Term& t, VarId key) { return t.first < key; });
    if (it != terms_.end() && it->first == v) {
        it->second += coeff;
        if (it->second == 0) {
            terms_.erase(it);
        }
    } else {
        terms_.emplace(it, v, coeff);
    }
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
    for (const auto& [v, c] : other.terms_) {
        add(v, c);
    }
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
    for (const auto& [v, c] : other.terms_) {
        add(v, -c);
    }
    return *this;
}

LinExpr LinExpr::scaled(const Int& factor) const {
    LinExpr e;
    if (factor == 0) {
        return e;
    }
    e.terms_.reserve(terms_.size());
    for (const auto& [v, c] : terms_) {
        e.terms_.emplace_back(v, c * factor);
    }
    return e;
}

Int LinExpr::coeff(VarId v) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), v,
                               [](const Term& t, VarId key) { return t.first < key; });
    if (it != terms_.end() && it->first == v) {
        return it->second;
    }
    return 0;
}

Int LinExpr::content() const {
    Int g = 0;
    for (const auto& [v, c] : terms_) {
        g = gcd_of(g, c);
    }
    return g;
}

bool operator<(const LinExpr& a, const LinExpr& b) {
    return std::lexicographical_compare(a.terms_.begin(), a.terms_.end(), b.terms_.begin(), b.terms_.end(),
                                        [](const LinExpr::Term& x, const LinExpr::Term& y) {
                                            if (x.first != y.first) {
                                                return x.first < y.first;
                                            }
                                            return x.second < y.second;
                                        });
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }

// ---------------------------------------------------------------- Relation / LinConstraint

std::string_view to_string(Relation rel) {
    switch (rel) {
    case Relation::Lt: return "<";
    case Relation::Le: return "<=";
    case Relation::Eq: return "=";
    case Relation::Gt: return ">";
    case Relation::Ge: return ">=";
    }
    return "?";
}

std::optional<Relation> parse_relation(std::string_view text) {
    if (text == "<") return Relation::Lt;
    if (text == "<=") return Relation::Le;
    if (text == "=" || text == "==") return Relation::Eq;
    if (text == ">") return Relation::Gt;
    if (text == ">=") return Relation::Ge;
    return std::nullopt;
}

LinConstraint LinConstraint::contradiction() { return LinConstraint{LinExpr{}, Relation::Lt, 0}; }

bool operator<(const LinConstraint& a, const LinConstraint& b) {
    if (a.lhs != b.lhs) {
        return a.lhs < b.lhs;
    }
    if (a.rel != b.rel) {
        return a.rel < b.rel;
    }
    return a.rhs < b.rhs;
}

std::size_t hash_value(const LinConstraint& c) {
    std::size_t h = static_cast<std::size_t>(c.rel);
    for (const auto& [v, k] : c.lhs.terms()) {
        hash_mix(h, v.index);
        hash_mix(h, hash_int(k));
    }
    hash_mix(h, hash_int(c.rhs));
    return h;
}

LinConstraint normalize(const LinConstraint& c) {
    switch (c.rel) {
    case Relation::Lt: return LinConstraint{c.lhs, Relation::Le, c.rhs - 1};
    case Relation::Gt: return LinConstraint{c.lhs, Relation::Ge, c.rhs + 1};
    default: return c;
    }
}

bool is_normal(const LinConstraint& c) { return c.rel != Relation::Lt && c.rel != Relation::Gt; }

// ---------------------------------------------------------------- SimpleEquality

SimpleEquality SimpleEquality::fix(VarId v, const Int& c) { return SimpleEquality(v, std::nullopt, c); }

SimpleEquality SimpleEquality::diff(VarId vi, VarId vj, const Int& c) {
    if (vi == vj) {
        throw ModelError("difference equality needs two distinct variables");
    }
    if (vj < vi) {
        return SimpleEquality(vj, vi, -c);
    }
    return SimpleEquality(vi, vj, c);
}

LinConstraint SimpleEquality::to_constraint() const {
    LinExpr lhs = LinExpr::of(first_);
    if (second_) {
        lhs.add(*second_, -1);
    }
    return LinConstraint{std::move(lhs), Relation::Eq, constant_};
}

bool operator<(const SimpleEquality& a, const SimpleEquality& b) {
    if (a.first_ != b.first_) {
        return a.first_ < b.first_;
    }
    if (a.second_ != b.second_) {
        return a.second_ < b.second_;
    }
    return a.constant_ < b.constant_;
}

// ---------------------------------------------------------------- Bounds

bool Bounds::all_finite() const {
    return std::all_of(intervals_.begin(), intervals_.end(), [](const Interval& i) { return i.finite(); });
}

void Bounds::check() const {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        const auto& iv = intervals_[i];
        if (iv.lo && iv.hi && *iv.lo > *iv.hi) {
            throw ModelError("empty bounds for variable #" + std::to_string(i));
        }
    }
}

// ---------------------------------------------------------------- Subproblem

Subproblem::Subproblem(SubproblemId id, std::vector<LinConstraint> constraints,
                       std::vector<SimpleEquality> equalities)
    : id_(id) {
    for (auto& c : constraints) {
        add(c);
    }
    for (auto& d : equalities) {
        add(d);
    }
}

bool Subproblem::contains(const LinConstraint& c) const {
    return std::find(constraints_.begin(), constraints_.end(), c) != constraints_.end();
}

bool Subproblem::contains(const SimpleEquality& d) const {
    return std::find(equalities_.begin(), equalities_.end(), d) != equalities_.end();
}

bool Subproblem::add(const LinConstraint& c) {
    if (contains(c)) {
        return false;
    }
    constraints_.push_back(c);
    return true;
}

bool Subproblem::add(const SimpleEquality& d) {
    if (contains(d)) {
        return false;
    }
    equalities_.push_back(d);
    return true;
}

bool Subproblem::remove(const LinConstraint& c) {
    auto it = std::find(constraints_.begin(), constraints_.end(), c);
    if (it == constraints_.end()) {
        return false;
    }
    constraints_.erase(it);
    return true;
}

bool Subproblem::same_content(const Subproblem& other) const {
    if (constraints_.size() != other.constraints_.size() || equalities_.size() != other.equalities_.size()) {
        return false;
    }
    std::set<LinConstraint> a(constraints_.begin(), constraints_.end());
    std::set<LinConstraint> b(other.constraints_.begin(), other.constraints_.end());
    std::set<SimpleEquality> da(equalities_.begin(), equalities_.end());
    std::set<SimpleEquality> db(other.equalities_.begin(), other.equalities_.end());
    return a == b && da == db;
}

std::size_t Subproblem::content_hash() const {
    std::size_t h = 0;
    for (const auto& c : constraints_) {
        h += hash_value(c) * 0x100000001b3ULL;
    }
    for (const auto& d : equalities_) {
        h += hash_value(d.to_constraint()) ^ 0x5bd1e995ULL;
    }
    return h;
}

// ---------------------------------------------------------------- Assignment / Incumbent / ObjValue

const Int& Assignment::operator[](VarId v) const {
    if (v.index >= values_.size()) {
        throw MissingVariable("assignment has no value for variable #" + std::to_string(v.index));
    }
    return values_[v.index];
}

void Assignment::set(VarId v, Int value) {
    if (v.index >= values_.size()) {
        values_.resize(v.index + 1);
    }
    values_[v.index] = std::move(value);
}

const Assignment& Incumbent::assignment() const {
    if (kind_ == Kind::None) {
        throw ModelError("incumbent has no assignment");
    }
    return assignment_;
}

const Int& ObjValue::value() const {
    if (kind_ != Kind::Finite) {
        throw ModelError("objective value is infinite");
    }
    return value_;
}

bool operator==(const ObjValue& a, const ObjValue& b) {
    return a.kind_ == b.kind_ && (a.kind_ != ObjValue::Kind::Finite || a.value_ == b.value_);
}

std::strong_ordering operator<=>(const ObjValue& a, const ObjValue& b) {
    if (a.kind_ != b.kind_) {
        return a.kind_ <=> b.kind_;
    }
    if (a.kind_ != ObjValue::Kind::Finite || a.value_ == b.value_) {
        return std::strong_ordering::equal;
    }
    return a.value_ < b.value_ ? std::strong_ordering::less : std::strong_ordering::greater;
}

std::string to_string(const ObjValue& v) {
    switch (v.kind()) {
    case ObjValue::Kind::NegInf: return "-inf";
    case ObjValue::Kind::PosInf: return "+inf";
    case ObjValue::Kind::Finite: return to_string(v.value());
    }
    return "?";
}

// ---------------------------------------------------------------- ImtInstance

VarId ImtInstance::add_var(std::string name, std::optional<Int> lo, std::optional<Int> hi, bool auxiliary) {
    if (by_name_.count(name) != 0) {
        throw ModelError("duplicate variable '" + name + "'");
    }
    const VarId id{static_cast<std::uint32_t>(vars_.size())};
    by_name_.emplace(name, id);
    names_.push_back(name);
    vars_.push_back(VarInfo{std::move(name), auxiliary});
    bounds_.resize(vars_.size());
    bounds_[id] = Interval{std::move(lo), std::move(hi)};
    return id;
}

std::optional<VarId> ImtInstance::find_var(std::string_view name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        return std::nullopt;
    }
    return it->second;
}

VarId ImtInstance::var(std::string_view name) const {
    if (auto v = find_var(name)) {
        return *v;
    }
    throw ModelError("unknown variable '" + std::string(name) + "'");
}

void ImtInstance::declare_fun(const std::string& name, std::size_t arity) {
    if (arity == 0) {
        throw ModelError("function '" + name + "' must have positive arity");
    }
    auto [it, inserted] = funs_.emplace(name, arity);
    if (!inserted && it->second != arity) {
        throw ModelError("function '" + name + "' redeclared with a different arity");
    }
}

std::optional<std::size_t> ImtInstance::arity(const std::string& fun) const {
    auto it = funs_.find(fun);
    if (it == funs_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<VarId> ImtInstance::theory_vars() const {
    std::set<VarId> out;
    for (const auto& a : atoms_) {
        if (const auto* f = std::get_if<FunDef>(&a.atom)) {
            out.insert(f->result);
            out.insert(f->args.begin(), f->args.end());
        } else {
            const auto& e = std::get<EqAtom>(a.atom);
            out.insert(e.x);
            out.insert(e.y);
        }
        if (a.annotation) {
            out.insert(*a.annotation);
        }
    }
    return {out.begin(), out.end()};
}

std::vector<VarId> ImtInstance::annotation_vars() const {
    std::set<VarId> out;
    for (const auto& a : atoms_) {
        if (a.annotation) {
            out.insert(*a.annotation);
        }
    }
    return {out.begin(), out.end()};
}

void ImtInstance::validate() const {
    const auto known = [&](VarId v) { return v.index < vars_.size(); };
    const auto require = [&](VarId v, const char* where) {
        if (!known(v)) {
            throw ModelError(std::string("unknown variable #") + std::to_string(v.index) + " in " + where);
        }
    };
    bounds_.check();
    for (const auto& c : constraints_) {
        for (const auto& [v, k] : c.lhs.terms()) {
            require(v, "constraint");
        }
    }
    for (const auto& [v, k] : objective_.terms()) {
        require(v, "objective");
    }
    for (const auto& a : atoms_) {
        if (const auto* f = std::get_if<FunDef>(&a.atom)) {
            require(f->result, "atom");
            for (VarId v : f->args) {
                require(v, "atom");
            }
            auto ar = arity(f->fun);
            if (!ar) {
                throw ModelError("undeclared function '" + f->fun + "'");
            }
            if (*ar != f->args.size()) {
                throw ModelError("arity mismatch for '" + f->fun + "'");
            }
        } else {
            const auto& e = std::get<EqAtom>(a.atom);
            require(e.x, "atom");
            require(e.y, "atom");
        }
        if (a.annotation) {
            require(*a.annotation, "annotation");
            const auto& iv = bounds_[*a.annotation];
            if (!iv.lo || !iv.hi || *iv.lo < 0 || *iv.hi > 1) {
                throw ModelError("annotation variable '" + names_[a.annotation->index] + "' must be bounded within 0..1");
            }
        }
    }
}

// ---------------------------------------------------------------- evaluation

Int eval_expr(const LinExpr& e, const Assignment& a) {
    Int sum = 0;
    for (const auto& [v, c] : e.terms()) {
        sum += c * a[v];
    }
    return sum;
}

bool compare(const Int& lhs, Relation rel, const Int& rhs) {
    switch (rel) {
    case Relation::Lt: return lhs < rhs;
    case Relation::Le: return lhs <= rhs;
    case Relation::Eq: return lhs == rhs;
    case Relation::Gt: return lhs > rhs;
    case Relation::Ge: return lhs >= rhs;
    }
    return false;
}

bool satisfies(const LinConstraint& c, const Assignment& a) { return compare(eval_expr(c.lhs, a), c.rel, c.rhs); }

bool satisfies(std::span<const LinConstraint> cs, const Assignment& a) {
    return std::all_of(cs.begin(), cs.end(), [&](const LinConstraint& c) { return satisfies(c, a); });
}

bool satisfies(const SimpleEquality& d, const Assignment& a) { return satisfies(d.to_constraint(), a); }

bool satisfies(const Bounds& b, const Assignment& a) {
    for (std::uint32_t i = 0; i < b.size(); ++i) {
        if (!b[VarId{i}].contains(a[VarId{i}])) {
            return false;
        }
    }
    return true;
}

bool satisfies(const Subproblem& sub, const Assignment& a) {
    if (!satisfies(std::span<const LinConstraint>(sub.constraints()), a)) {
        return false;
    }
    return std::all_of(sub.equalities().begin(), sub.equalities().end(),
                       [&](const SimpleEquality& d) { return satisfies(d, a); });
}

ObjValue obj_value(const LinExpr& objective, const Incumbent& inc) {
    switch (inc.kind()) {
    case Incumbent::Kind::None: return ObjValue::pos_inf();
    case Incumbent::Kind::Unbounded: return ObjValue::neg_inf();
    case Incumbent::Kind::Feasible: return ObjValue::finite(eval_expr(objective, inc.assignment()));
    }
    return ObjValue::pos_inf();
}

// ---------------------------------------------------------------- printing

std::string format_expr(const LinExpr& e, const VarNames& names) {
    if (e.empty()) {
        return "0";
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& [v, c] : e.terms()) {
        const std::string& name = v.index < names.size() ? names[v.index] : "#" + std::to_string(v.index);
        const Int mag = c < 0 ? Int(-c) : c;
        if (first) {
            if (c < 0) {
                out << "-";
            }
        } else {
            out << (c < 0 ? " - " : " + ");
        }
        if (mag != 1) {
            out << mag << "*";
        }
        out << name;
        first = false;
    }
    return out.str();
}

std::string format_constraint(const LinConstraint& c, const VarNames& names) {
    return format_expr(c.lhs, names) + " " + std::string(to_string(c.rel)) + " " + to_string(c.rhs);
}

std::string format_equality(const SimpleEquality& d, const VarNames& names) {
    return format_constraint(d.to_constraint(), names);
}

}  // namespace imt
