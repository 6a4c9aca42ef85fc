// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact bounded-variable simplex over the relaxation of a subproblem, with Farkas,
// dual and ray certificates, Chvatal-Gomory cut derivation and interval propagation.
//
// Columns are the instance variables plus one slack per distinct primitive row form
// (lhs divided by its content, sign-normalised). Every bound on a column remembers the
// row it came from so that certificates can cite C, D and instance-bound rows.

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "imt/certificate.hpp"
#include "imt/model.hpp"

namespace imt {

struct LpOptimal {
    std::vector<Rat> point;  // indexed by VarId
    Rat value;
    LbDual dual;  // bound = ceil(value)
};

struct LpInfeasible {
    Farkas farkas;
};

struct LpUnbounded {
    std::vector<Rat> point;
    std::vector<Int> ray;  // integral, objective strictly decreasing
};

using LpOutcome = std::variant<LpOptimal, LpInfeasible, LpUnbounded>;

class NoFractionalRow : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct GomoryCut {
    LinConstraint cut;  // lhs >= rhs, primitive lhs
    CgCut certificate;
    Rat violation;  // at the LP optimum, before normalisation by the coefficient norm
};

class Tableau {
public:
    /// `bounds` must be the instance bounds: certificates cite them as RowRef::Lower/Upper.
    Tableau(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds);

    LpOutcome solve();

    /// Valid after solve() returned LpOptimal.
    bool fractional() const;
    std::vector<GomoryCut> gomory_cuts(std::size_t cap) const;

    std::size_t pivots() const { return pivots_; }

private:
    struct Reason {
        Multiplier row;  // the bound's ">=" form is row.weight times the row's ">=" form
    };
    struct Column {
        std::optional<Rat> lo;
        std::optional<Rat> hi;
        std::optional<Reason> lo_reason;
        std::optional<Reason> hi_reason;
    };

    void add_bound(std::size_t col, Sense side, const Rat& value, Multiplier reason);
    std::size_t slack_for(const LinExpr& primitive);
    void pivot(std::size_t row, std::size_t col);
    void update_nonbasic(std::size_t col, const Rat& value);
    void pivot_and_update(std::size_t row, std::size_t col, const Rat& value);
    std::optional<Farkas> feasibility();
    Farkas row_conflict(std::size_t row, bool below) const;
    void build_objective_row();
    std::vector<Rat> original_point() const;
    void push_reason(std::vector<Multiplier>& out, std::size_t col, Sense side, const Rat& factor) const;

    std::size_t num_vars_;
    LinExpr objective_;
    std::vector<Column> cols_;
    std::vector<LinExpr> slack_forms_;  // slack k is column num_vars_ + k
    std::vector<std::vector<Rat>> rows_;  // rows_[r][c]: basic(r) = sum rows_[r][c] * col c
    std::vector<std::size_t> basic_;  // column basic in row r
    std::vector<std::ptrdiff_t> row_of_;  // row of a basic column, -1 if nonbasic
    std::vector<Rat> value_;
    std::vector<Rat> obj_row_;  // reduced costs over columns
    std::optional<Farkas> early_conflict_;
    bool optimal_ = false;
    std::size_t pivots_ = 0;
};

LpOutcome lp_solve(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds);

/// ceil of the LP optimum with its dual; NegInf when unbounded, PosInf when infeasible.
std::pair<ObjValue, LbDual> lower_bound(const Subproblem& sub, const LinExpr& objective, const Bounds& bounds);

/// Throws NoFractionalRow when the tableau's optimum is integral.
std::vector<GomoryCut> derive_gomory_cuts(const Tableau& t, std::size_t cap = 4);

struct Propagation {
    Bounds bounds;
    /// New simple equalities (not already in D) with their certificates.
    std::vector<std::pair<SimpleEquality, BoundFix>> equalities;
    /// Set when an interval empties: a derivation of 0 >= k with k > 0.
    std::optional<CgDerivation> infeasible;
};

/// Integer interval propagation over the >= halves of C and D, to a fixed point or
/// `max_passes` sweeps.
Propagation propagate_bounds(const Subproblem& sub, const Bounds& bounds, std::size_t max_passes = 100);

}  // namespace imt
