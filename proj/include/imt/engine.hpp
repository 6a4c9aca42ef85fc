// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Branch-and-cut modulo EUF. Every action goes through the kernel, so a run that
// returns has produced an admissible trace.

#include <chrono>
#include <functional>
#include <optional>

#include "imt/certificate.hpp"
#include "imt/euf.hpp"
#include "imt/kernel.hpp"
#include "imt/model.hpp"

namespace imt {

class UnboundedVarsWithTheory : public ModelError {
public:
    using ModelError::ModelError;
};

class NoFractional : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class EmptyCore : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class BranchRule { MostFractional, LowestIndex };
enum class NodeOrder { BestBound, DepthFirst };

struct Config {
    /// Subproblems processed before giving up; nullopt disables the budget.
    std::optional<std::uint64_t> node_budget;
    std::size_t cut_cap_per_node = 4;
    std::size_t cuts_rounds_max = 2;
    BranchRule branch_rule = BranchRule::MostFractional;
    NodeOrder node_order = NodeOrder::BestBound;
    std::optional<Int> default_bound;
    std::optional<std::chrono::milliseconds> time_budget;
    bool emit_trace = true;
    bool propagate = true;
    /// Called for every cut before it is learned, with the subproblem it is learned into.
    std::function<void(const Subproblem&, const LinConstraint&)> on_cut;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, BudgetExceeded };

std::string_view to_string(SolveStatus s);

struct SolveStats {
    std::uint64_t nodes = 0;
    std::uint64_t cuts = 0;
    std::uint64_t theory_conflicts = 0;
    std::uint64_t branches = 0;
    std::uint64_t propagations = 0;
    std::uint64_t lp_solves = 0;
    std::uint64_t pivots = 0;
    std::size_t max_cut_rounds = 0;  // largest number of cut rounds spent at one node
};

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    /// Optimal model, or the unbounded witness.
    std::optional<Assignment> model;
    std::optional<Int> value;
    Incumbent best = Incumbent::none();
    SolveStats stats;
    KernelCounters counters;
    std::optional<Trace> trace;
};

/// Copy of `inst` with [-n, n] filling every missing bound.
ImtInstance apply_default_bound(const ImtInstance& inst, const std::optional<Int>& n);

/// Kernel budgets the engine runs under: cut rounds cap every Learn-only run.
KernelBudgets engine_budgets(const Config& cfg);

/// Solves `inst` after apply_default_bound. The trace (when emitted) is recorded against
/// that bounded instance.
SolveResult solve(const ImtInstance& inst, const Config& cfg = {});

/// Branch on a conflict core, then TLearn 0 < 0 and Drop in every child that asserts the
/// whole core. Children get ids next_id, next_id + 1, ...
std::vector<Step> conflict_split(const ImtInstance& inst, const Subproblem& sub, const ConflictCore& core,
                                 SubproblemId next_id);

/// Dichotomy on a fractional coordinate of `point`.
Step select_branch(const Subproblem& sub, const std::vector<Rat>& point, const Config& cfg);

/// Theory literals read off an integral point: D's differences between theory
/// variables, annotation signs, then the arrangement of the remaining theory variables
/// (equalities before disequalities).
std::vector<TheoryLiteral> point_literals(const ImtInstance& inst, const Subproblem& sub, const Assignment& point);

}  // namespace imt
