// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The trusted core. A KernelState is <P, A>; Kernel::apply admits a Step only after
// checking its certificate against the rule's side condition, and throws RuleViolation
// otherwise. Instance bounds are treated as part of every subproblem's C: they can be
// cited by certificates (RowRef::Lower / RowRef::Upper) but never forgotten.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "imt/certificate.hpp"
#include "imt/model.hpp"

namespace imt {

/// The background theory as seen by the kernel: it endorses T-models and T-lemmas
/// recorded in certificates through TheoryTokens it issued.
class Theory {
public:
    virtual ~Theory() = default;

    virtual std::string name() const = 0;
    /// True iff `model` is T-consistent with the instance's interface atoms and the token
    /// is the one this theory issues for it.
    virtual bool endorse_model(const ImtInstance& inst, const Assignment& model, const TheoryToken& token) const = 0;
    /// True iff asserted /\ I T-entails `lemma` and the token matches.
    virtual bool endorse_lemma(const ImtInstance& inst, std::span<const TheoryLiteral> asserted,
                               const LinConstraint& lemma, const TheoryToken& token) const = 0;
};

class RuleViolation : public std::runtime_error {
public:
    RuleViolation(Rule rule, std::string reason);

    Rule rule() const { return rule_; }
    const std::string& reason() const { return reason_; }

private:
    Rule rule_;
    std::string reason_;
};

class DigestMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Termination discipline: caps on Branch (+ Subsume) steps and on runs of consecutive
/// Learn / Forget / TLearn steps.
struct KernelBudgets {
    std::optional<std::uint64_t> max_branch_steps;
    std::optional<std::uint64_t> max_learn_run;
};

struct KernelCounters {
    std::uint64_t steps = 0;
    std::uint64_t branch_steps = 0;
    std::uint64_t subsume_steps = 0;
    std::uint64_t learn_run = 0;
    std::uint64_t longest_learn_run = 0;
};

class KernelState {
public:
    const std::map<SubproblemId, Subproblem>& open() const { return open_; }
    const Subproblem& subproblem(SubproblemId id) const;
    bool has(SubproblemId id) const { return open_.count(id) != 0; }
    const Incumbent& incumbent() const { return incumbent_; }
    SubproblemId next_id() const { return next_id_; }
    const KernelCounters& counters() const { return counters_; }
    bool is_final() const { return open_.empty(); }

private:
    friend class Kernel;

    std::map<SubproblemId, Subproblem> open_;
    std::unordered_multimap<std::size_t, SubproblemId> by_hash_;
    Incumbent incumbent_ = Incumbent::none();
    SubproblemId next_id_ = 0;
    KernelCounters counters_;
};

/// ">=" reading of a row or derived line: lhs >= rhs.
struct GeForm {
    LinExpr lhs;
    Int rhs;

    friend bool operator==(const GeForm&, const GeForm&) = default;
};

class Kernel {
public:
    Kernel(const ImtInstance& inst, const Theory& theory, KernelBudgets budgets = {});

    /// <{<C, {}>}, none> with C the normalized instance constraints.
    KernelState start() const;
    /// Applies `step` in place; throws RuleViolation (state unchanged) on failure.
    void apply(KernelState& state, const Step& step) const;

    const ImtInstance& instance() const { return inst_; }
    const Theory& theory() const { return theory_; }
    const KernelBudgets& budgets() const { return budgets_; }

    /// Result of a CG derivation over `sub`.
    GeForm derive(const Subproblem& sub, const CgDerivation& derivation, Rule rule) const;
    /// Sum of weighted rows: coefficients and right-hand side, unrounded.
    std::pair<std::map<VarId, Rat>, Rat> aggregate(const Subproblem& sub, std::span<const Multiplier> terms,
                                                   std::span<const GeForm> lines, Rule rule) const;

private:
    GeForm resolve(const Subproblem& sub, const Multiplier& m, std::span<const GeForm> lines, Rule rule) const;
    bool holds(const Subproblem& sub, const GeForm& half, std::span<const GeForm> derived) const;
    std::vector<GeForm> derive_all(const Subproblem& sub, std::span<const CgDerivation> ds, Rule rule) const;
    Int verify_lb(const Subproblem& sub, const LbDual& dual, Rule rule) const;
    void check_model(const Subproblem& sub, const Assignment& model, const TheoryToken& token, Rule rule) const;

    void insert(KernelState& state, Subproblem sub, Rule rule) const;
    void erase(KernelState& state, SubproblemId id) const;
    void replace(KernelState& state, SubproblemId id, Subproblem sub, Rule rule) const;

    void apply_branch(KernelState& state, const Step& step) const;
    void apply_learn(KernelState& state, const Step& step) const;
    void apply_forget(KernelState& state, const Step& step) const;
    void apply_propagate(KernelState& state, const Step& step) const;
    void apply_drop(KernelState& state, const Step& step) const;
    void apply_prune(KernelState& state, const Step& step) const;
    void apply_retire(KernelState& state, const Step& step) const;
    void apply_unbounded(KernelState& state, const Step& step) const;
    void apply_tlearn(KernelState& state, const Step& step) const;
    void apply_subsume(KernelState& state, const Step& step) const;

    const ImtInstance& inst_;
    const Theory& theory_;
    KernelBudgets budgets_;
};

/// Functional form of Kernel::apply.
KernelState apply_step(const Kernel& kernel, KernelState state, const Step& step);

/// ">=" halves of a normalized constraint (two for an equality).
std::vector<GeForm> ge_halves(const LinConstraint& c);

/// Children that a branch certificate prescribes, in canonical order.
std::vector<std::vector<LinConstraint>> branch_children(const Certificate& cert);

/// Linear arms of a theory literal: the literal holds iff one of `positive` holds, and
/// fails iff one of `negative` holds. Arms are conjunctions of normalized constraints.
struct LiteralArms {
    std::vector<std::vector<LinConstraint>> positive;
    std::vector<std::vector<LinConstraint>> negative;
};
LiteralArms literal_arms(const TheoryLiteral& lit);

struct ReplayOptions {
    KernelBudgets budgets;
    bool require_final = true;
    /// Called before each step is applied.
    std::function<void(std::size_t index, const Step& step, const KernelState& before)> observer;
};

struct Verdict {
    bool accepted = false;
    std::optional<std::size_t> failed_step;
    std::string reason;
    KernelState state;
};

/// Replays `trace` from the starting state. Throws DigestMismatch when the trace was
/// recorded for a different instance.
Verdict replay_trace(const ImtInstance& inst, const Trace& trace, const Theory& theory,
                     const ReplayOptions& options = {});

}  // namespace imt
