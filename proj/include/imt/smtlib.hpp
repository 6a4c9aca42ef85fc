// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// A QF_UFLIA subset of SMT-LIB 2 with a `minimize` / `maximize` extension, and its
// translation into an ImtInstance: alien terms are flattened into fresh variables,
// equalities between theory terms become annotated EqAtoms, Boolean structure becomes
// clauses over 0..1 variables and linear atoms under Boolean structure are linked to
// indicator variables with big-M constraints.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imt/model.hpp"
#include "imt/native_format.hpp"

namespace imt {

class UnsupportedCommand : public ParseError {
public:
    UnsupportedCommand(std::size_t line, std::size_t col, const std::string& msg)
        : ParseError("unsupported command", line, col, msg) {}
};

class UnboundedForEncoding : public ModelError {
public:
    explicit UnboundedForEncoding(const std::string& variable)
        : ModelError("variable '" + variable + "' needs finite bounds for a big-M encoding"), variable_(variable) {}

    const std::string& variable() const { return variable_; }

private:
    std::string variable_;
};

enum class SmtSort { Int, Bool };

struct SmtTerm {
    enum class Kind {
        Numeral,      // value
        BoolLiteral,  // value is 0 or 1
        Constant,     // declared 0-ary symbol `name`
        Builtin,      // + - * <= < >= > = not and or => ite
        Function,     // uninterpreted application of `name`
    };

    Kind kind = Kind::Numeral;
    SmtSort sort = SmtSort::Int;
    Int value;
    std::string name;
    std::vector<SmtTerm> args;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct SmtFunction {
    std::string name;
    std::size_t arity = 0;
    SmtSort result = SmtSort::Int;
};

/// Parsed, sort-checked script. Chained comparisons, distinct and xor are desugared into
/// and / not / =; 0-ary define-fun bodies are substituted in place.
struct SmtProblem {
    std::optional<std::string> logic;
    std::vector<std::pair<std::string, SmtSort>> constants;
    std::vector<SmtFunction> functions;
    std::vector<SmtTerm> assertions;
    std::optional<SmtTerm> objective;
    bool maximize = false;
    bool check_sat = false;
    bool get_model = false;
};

SmtProblem parse_smtlib(std::string_view text);

struct EncodedProblem {
    ImtInstance instance;
    bool has_objective = false;
    bool maximize = false;
    /// Constant part of the objective term.
    Int objective_offset = 0;
    /// Declared constants in declaration order, for printing models.
    std::vector<std::pair<std::string, SmtSort>> outputs;

    /// Value of the source objective given the instance's optimal value.
    Int report(const Int& instance_value) const {
        return maximize ? Int(objective_offset - instance_value) : Int(objective_offset + instance_value);
    }
};

/// Top-level single-variable atoms become bounds; declared integers without bounds get
/// [-n, n] when `default_bound` is n.
EncodedProblem encode_problem(const SmtProblem& p, const std::optional<Int>& default_bound);
ImtInstance abstract_variables(const SmtProblem& p, const std::optional<Int>& default_bound);

/// Links v to t = (lhs <= rhs after normalisation; any non-equality relation accepted):
///   lhs + (k - r) v <= k   and   lhs - (m - r) v >= r + 1
/// with k the box maximum of lhs and m its box minimum minus one. Over the box, with v
/// in {0, 1}, v = 1 iff t holds.
std::vector<LinConstraint> encode_atom_indicator(const LinConstraint& t, VarId v, const Bounds& bounds,
                                                 const VarNames& names = {});

/// Box extremes of e; throws UnboundedForEncoding naming the first variable without the
/// needed bound.
Int box_max(const LinExpr& e, const Bounds& bounds, const VarNames& names = {});
Int box_min(const LinExpr& e, const Bounds& bounds, const VarNames& names = {});

}  // namespace imt
