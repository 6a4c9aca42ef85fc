// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact data model of ILP Modulo Theories instances: linear expressions and
// constraints over integer variables, simple equalities, subproblems,
// assignments, incumbents, interface atoms and instances.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "imt/numeric.hpp"

namespace imt {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingVariable : public ModelError {
public:
    using ModelError::ModelError;
};

/// Index of a variable in its instance's variable table. Ordered by declaration.
struct VarId {
    std::uint32_t index = 0;

    friend auto operator<=>(const VarId&, const VarId&) = default;
};

using VarNames = std::vector<std::string>;

/// Sparse linear form sum(c_i * v_i), terms sorted by VarId, no zero coefficient stored.
class LinExpr {
public:
    using Term = std::pair<VarId, Int>;

    LinExpr() = default;
    static LinExpr of(VarId v, const Int& coeff = 1);
    /// Builds from arbitrary (possibly repeated, possibly zero) terms.
    static LinExpr from_terms(std::vector<Term> terms);

    void add(VarId v, const Int& coeff);
    LinExpr& operator+=(const LinExpr& other);
    LinExpr& operator-=(const LinExpr& other);
    LinExpr scaled(const Int& factor) const;
    LinExpr negated() const { return scaled(-1); }

    Int coeff(VarId v) const;
    /// gcd of all coefficients (0 for the empty expression).
    Int content() const;

    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    friend bool operator==(const LinExpr& a, const LinExpr& b) { return a.terms_ == b.terms_; }
    friend bool operator<(const LinExpr& a, const LinExpr& b);

private:
    std::vector<Term> terms_;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);

enum class Relation { Lt, Le, Eq, Gt, Ge };

std::string_view to_string(Relation rel);
std::optional<Relation> parse_relation(std::string_view text);

struct LinConstraint {
    LinExpr lhs;
    Relation rel = Relation::Le;
    Int rhs;

    /// The learned trivial contradiction 0 < 0.
    static LinConstraint contradiction();

    friend bool operator==(const LinConstraint& a, const LinConstraint& b) {
        return a.rel == b.rel && a.rhs == b.rhs && a.lhs == b.lhs;
    }
    friend bool operator<(const LinConstraint& a, const LinConstraint& b);
};

std::size_t hash_value(const LinConstraint& c);

/// Integer-equivalent constraint using only Le, Ge and Eq.
LinConstraint normalize(const LinConstraint& c);
bool is_normal(const LinConstraint& c);

/// v = c, or vi - vj = c with vi < vj.
class SimpleEquality {
public:
    static SimpleEquality fix(VarId v, const Int& c);
    /// vi - vj = c, stored with the smaller VarId first.
    static SimpleEquality diff(VarId vi, VarId vj, const Int& c);

    bool is_fix() const { return !second_.has_value(); }
    VarId first() const { return first_; }
    std::optional<VarId> second() const { return second_; }
    const Int& constant() const { return constant_; }

    LinConstraint to_constraint() const;

    friend bool operator==(const SimpleEquality&, const SimpleEquality&) = default;
    friend bool operator<(const SimpleEquality& a, const SimpleEquality& b);

private:
    SimpleEquality(VarId a, std::optional<VarId> b, Int c)
        : first_(a), second_(b), constant_(std::move(c)) {}

    VarId first_;
    std::optional<VarId> second_;
    Int constant_;
};

struct Interval {
    std::optional<Int> lo;
    std::optional<Int> hi;

    bool finite() const { return lo.has_value() && hi.has_value(); }
    bool contains(const Int& v) const { return (!lo || *lo <= v) && (!hi || v <= *hi); }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-variable closed interval, indexed by VarId.
class Bounds {
public:
    Bounds() = default;
    explicit Bounds(std::size_t num_vars) : intervals_(num_vars) {}

    std::size_t size() const { return intervals_.size(); }
    const Interval& operator[](VarId v) const { return intervals_.at(v.index); }
    Interval& operator[](VarId v) { return intervals_.at(v.index); }
    void resize(std::size_t n) { intervals_.resize(n); }
    bool all_finite() const;
    /// Throws ModelError when some interval has lo > hi.
    void check() const;

    friend bool operator==(const Bounds&, const Bounds&) = default;

private:
    std::vector<Interval> intervals_;
};

using SubproblemId = std::uint64_t;

/// <C, D>: constraints plus simple equalities. Both sequences are duplicate-free;
/// their order is stable so certificates can refer to rows by position.
class Subproblem {
public:
    Subproblem() = default;
    Subproblem(SubproblemId id, std::vector<LinConstraint> constraints,
               std::vector<SimpleEquality> equalities = {});

    SubproblemId id() const { return id_; }
    void set_id(SubproblemId id) { id_ = id; }

    const std::vector<LinConstraint>& constraints() const { return constraints_; }
    const std::vector<SimpleEquality>& equalities() const { return equalities_; }

    bool contains(const LinConstraint& c) const;
    bool contains(const SimpleEquality& d) const;
    /// Appends unless already present; returns whether it was added.
    bool add(const LinConstraint& c);
    bool add(const SimpleEquality& d);
    /// Removes an existing constraint; returns false when absent.
    bool remove(const LinConstraint& c);

    /// Syntactic equality of <C, D> as sets (ids ignored).
    bool same_content(const Subproblem& other) const;
    /// Order-independent hash of <C, D>.
    std::size_t content_hash() const;

private:
    SubproblemId id_ = 0;
    std::vector<LinConstraint> constraints_;
    std::vector<SimpleEquality> equalities_;
};

/// Total map VarId -> Int over an instance's variables.
class Assignment {
public:
    Assignment() = default;
    explicit Assignment(std::vector<Int> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    /// Throws MissingVariable when v is outside the assignment's domain.
    const Int& operator[](VarId v) const;
    void set(VarId v, Int value);
    const std::vector<Int>& values() const { return values_; }

    friend bool operator==(const Assignment&, const Assignment&) = default;
    friend bool operator<(const Assignment& a, const Assignment& b) { return a.values_ < b.values_; }

private:
    std::vector<Int> values_;
};

class Incumbent {
public:
    enum class Kind { None, Feasible, Unbounded };

    static Incumbent none() { return Incumbent(Kind::None, {}); }
    static Incumbent feasible(Assignment a) { return Incumbent(Kind::Feasible, std::move(a)); }
    static Incumbent unbounded(Assignment witness) { return Incumbent(Kind::Unbounded, std::move(witness)); }

    Kind kind() const { return kind_; }
    bool is_none() const { return kind_ == Kind::None; }
    /// Precondition: kind() != None.
    const Assignment& assignment() const;

    friend bool operator==(const Incumbent&, const Incumbent&) = default;

private:
    Incumbent(Kind k, Assignment a) : kind_(k), assignment_(std::move(a)) {}

    Kind kind_;
    Assignment assignment_;
};

/// NegInf < Finite(x) < PosInf.
class ObjValue {
public:
    enum class Kind { NegInf, Finite, PosInf };

    static ObjValue neg_inf() { return ObjValue(Kind::NegInf, 0); }
    static ObjValue pos_inf() { return ObjValue(Kind::PosInf, 0); }
    static ObjValue finite(Int v) { return ObjValue(Kind::Finite, std::move(v)); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::Finite; }
    const Int& value() const;

    friend bool operator==(const ObjValue& a, const ObjValue& b);
    friend std::strong_ordering operator<=>(const ObjValue& a, const ObjValue& b);

private:
    ObjValue(Kind k, Int v) : kind_(k), value_(std::move(v)) {}

    Kind kind_;
    Int value_;
};

std::string to_string(const ObjValue& v);

struct FunDef {
    VarId result;
    std::string fun;
    std::vector<VarId> args;
    friend bool operator==(const FunDef&, const FunDef&) = default;
};

struct EqAtom {
    VarId x;
    VarId y;
    friend bool operator==(const EqAtom&, const EqAtom&) = default;
};

/// Theory atom, optionally annotated: the atom holds iff the annotation is > 0.
struct InterfaceAtom {
    std::variant<FunDef, EqAtom> atom;
    std::optional<VarId> annotation;

    friend bool operator==(const InterfaceAtom&, const InterfaceAtom&) = default;
};

struct VarInfo {
    std::string name;
    /// Introduced by encoding rather than declared by the user.
    bool auxiliary = false;
};

/// <C, I, O> together with the variable table, bounds and function arities.
/// The objective is always minimized.
class ImtInstance {
public:
    VarId add_var(std::string name, std::optional<Int> lo = std::nullopt,
                  std::optional<Int> hi = std::nullopt, bool auxiliary = false);
    std::optional<VarId> find_var(std::string_view name) const;
    /// Throws ModelError for an unknown name.
    VarId var(std::string_view name) const;

    void declare_fun(const std::string& name, std::size_t arity);
    std::optional<std::size_t> arity(const std::string& fun) const;
    const std::map<std::string, std::size_t>& funs() const { return funs_; }

    void add_constraint(LinConstraint c) { constraints_.push_back(std::move(c)); }
    void add_atom(InterfaceAtom a) { atoms_.push_back(std::move(a)); }
    void set_objective(LinExpr o) { objective_ = std::move(o); }

    std::size_t num_vars() const { return vars_.size(); }
    const std::vector<VarInfo>& vars() const { return vars_; }
    const VarNames& names() const { return names_; }
    const std::string& name(VarId v) const { return names_.at(v.index); }
    const Bounds& bounds() const { return bounds_; }
    Bounds& bounds() { return bounds_; }
    const std::vector<LinConstraint>& constraints() const { return constraints_; }
    std::vector<LinConstraint>& constraints() { return constraints_; }
    const std::vector<InterfaceAtom>& atoms() const { return atoms_; }
    const LinExpr& objective() const { return objective_; }

    /// Variables occurring in some interface atom (arguments, results, equated
    /// variables and annotations).
    std::vector<VarId> theory_vars() const;
    std::vector<VarId> annotation_vars() const;

    /// Checks the instance invariants; throws ModelError on violation.
    void validate() const;

private:
    std::vector<VarInfo> vars_;
    VarNames names_;
    std::map<std::string, VarId, std::less<>> by_name_;
    std::map<std::string, std::size_t> funs_;
    Bounds bounds_;
    std::vector<LinConstraint> constraints_;
    std::vector<InterfaceAtom> atoms_;
    LinExpr objective_;
};

Int eval_expr(const LinExpr& e, const Assignment& a);
bool satisfies(const LinConstraint& c, const Assignment& a);
bool satisfies(std::span<const LinConstraint> cs, const Assignment& a);
bool satisfies(const SimpleEquality& d, const Assignment& a);
bool satisfies(const Bounds& b, const Assignment& a);
bool satisfies(const Subproblem& sub, const Assignment& a);
bool compare(const Int& lhs, Relation rel, const Int& rhs);
ObjValue obj_value(const LinExpr& objective, const Incumbent& inc);

std::string format_expr(const LinExpr& e, const VarNames& names);
std::string format_constraint(const LinConstraint& c, const VarNames& names);
std::string format_equality(const SimpleEquality& d, const VarNames& names);

}  // namespace imt
