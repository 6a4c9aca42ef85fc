// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "imt/model.hpp"

namespace imt {

/// Literal over interface variables, in the alphabet shared by the core and theory solvers.
struct TheoryLiteral {
    enum class Kind { VarEq, VarDiseq, AtomTrue, AtomFalse };

    Kind kind = Kind::VarEq;
    VarId x;
    VarId y;      // VarEq / VarDiseq only
    Int offset;   // x = y + offset (VarEq) or x != y + offset (VarDiseq)

    static TheoryLiteral eq(VarId x, VarId y, Int offset = 0) { return {Kind::VarEq, x, y, std::move(offset)}; }
    static TheoryLiteral diseq(VarId x, VarId y, Int offset = 0) { return {Kind::VarDiseq, x, y, std::move(offset)}; }
    static TheoryLiteral atom_true(VarId v) { return {Kind::AtomTrue, v, v, 0}; }
    static TheoryLiteral atom_false(VarId v) { return {Kind::AtomFalse, v, v, 0}; }

    bool is_atom() const { return kind == Kind::AtomTrue || kind == Kind::AtomFalse; }

    friend bool operator==(const TheoryLiteral& a, const TheoryLiteral& b) {
        if (a.kind != b.kind || a.x != b.x) {
            return false;
        }
        return a.is_atom() || (a.y == b.y && a.offset == b.offset);
    }
};

std::string format_literal(const TheoryLiteral& l, const VarNames& names);

/// Which inequality of a row a multiplier applies to. Le rows only admit Le, Ge rows only
/// Ge, equalities admit both. Every (row, sense) pair is read in ">=" form: Ge means
/// lhs >= rhs, Le means -lhs >= -rhs.
enum class Sense { Ge, Le };

struct RowRef {
    enum class Kind {
        Constraint,  // index into the subproblem's C
        Equality,    // index into the subproblem's D
        Lower,       // instance lower bound of variable `index`
        Upper,       // instance upper bound of variable `index`
        Line,        // earlier line of the same derivation
    };

    Kind kind = Kind::Constraint;
    std::uint32_t index = 0;

    friend bool operator==(const RowRef&, const RowRef&) = default;
    friend auto operator<=>(const RowRef&, const RowRef&) = default;
};

struct Multiplier {
    RowRef row;
    Sense sense = Sense::Ge;
    Rat weight;

    friend bool operator==(const Multiplier&, const Multiplier&) = default;
};

/// One Chvatal-Gomory step: sum of weighted rows with integral coefficients, right-hand
/// side rounded up. Reads as `aggregate >= ceil(sum of weighted rhs)`.
struct CgLine {
    std::vector<Multiplier> terms;
};

/// Sequence of CG lines; later lines may use earlier ones. The last line is the result.
struct CgDerivation {
    std::vector<CgLine> lines;
};

/// Record issued by a theory solver endorsing a claim (a T-model or a T-lemma).
struct TheoryToken {
    std::string theory;
    std::string digest;

    friend bool operator==(const TheoryToken&, const TheoryToken&) = default;
};

struct BranchDichotomy {
    VarId var;
    Int split;  // children add var <= split and var >= split + 1
};

struct BranchTrichotomy {
    VarId x;
    VarId y;
    Int offset;  // children add x - y <= c - 1, x - y = c, x - y >= c + 1
};

struct BranchConflictSplit {
    std::vector<TheoryLiteral> core;
};

/// Learn / Forget evidence: one derivation per ">=" half of the constraint
/// (two for an equality).
struct CgCut {
    std::vector<CgDerivation> derivations;
};

struct Farkas {
    std::vector<Multiplier> terms;
};

/// Propagate evidence: derivations of both halves of the simple equality.
struct BoundFix {
    std::vector<CgDerivation> derivations;
};

/// Multipliers whose weighted sum is exactly the objective; the bound is the rounded-up
/// weighted right-hand side.
struct LbDual {
    ObjValue bound = ObjValue::neg_inf();
    std::vector<Multiplier> terms;
};

struct RetireEvidence {
    Assignment model;
    LbDual lb_match;
    TheoryToken token;
};

struct UnboundedEvidence {
    Assignment model;
    std::vector<std::pair<VarId, Int>> ray;
    TheoryToken token;
};

/// Theory lemma: `asserted` hold in the subproblem (present rows or derivations) and,
/// together with the interface atoms, T-entail the lemma.
struct TLemma {
    std::vector<TheoryLiteral> asserted;
    std::vector<CgDerivation> derivations;
    TheoryToken token;
};

struct SubsumeSyntactic {};

using Certificate = std::variant<BranchDichotomy, BranchTrichotomy, BranchConflictSplit, CgCut, Farkas, BoundFix,
                                 LbDual, RetireEvidence, UnboundedEvidence, TLemma, SubsumeSyntactic>;

enum class Rule { Branch, Learn, Forget, Propagate, Drop, Prune, Retire, Unbounded, TLearn, Subsume };

std::string_view to_string(Rule r);
std::optional<Rule> parse_rule(std::string_view text);

/// One rule application. Targets: the rewritten subproblem (Subsume: kept, then dropped).
struct Step {
    Rule rule = Rule::Drop;
    std::vector<SubproblemId> targets;
    /// Branch: constraints each child adds to the parent's C.
    std::vector<std::vector<LinConstraint>> children;
    /// Learn / Forget / TLearn.
    std::optional<LinConstraint> constraint;
    /// Propagate.
    std::optional<SimpleEquality> equality;
    Certificate certificate = SubsumeSyntactic{};
};

struct Trace {
    std::string instance_digest;
    std::vector<Step> steps;
};

}  // namespace imt
