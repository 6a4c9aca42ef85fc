// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/kernel.hpp"

#include <algorithm>
#include <set>

#include "imt/native_format.hpp"

namespace imt {

namespace {

[[noreturn]] void violate(Rule rule, std::string reason) { throw RuleViolation(rule, std::move(reason)); }

template <class T>
const T& cert_as(const Step& step) {
    if (const auto* c = std::get_if<T>(&step.certificate)) {
        return *c;
    }
    violate(step.rule, "certificate kind does not match the rule");
}

GeForm oriented(const LinExpr& lhs, Relation rel, const Int& rhs, Sense sense, Rule rule) {
    const bool ge_ok = rel == Relation::Ge || rel == Relation::Eq;
    const bool le_ok = rel == Relation::Le || rel == Relation::Eq;
    if (sense == Sense::Ge && ge_ok) {
        return GeForm{lhs, rhs};
    }
    if (sense == Sense::Le && le_ok) {
        return GeForm{lhs.negated(), -rhs};
    }
    violate(rule, "multiplier sense does not match the row's relation");
}

LinConstraint make(LinExpr lhs, Relation rel, Int rhs) { return LinConstraint{std::move(lhs), rel, std::move(rhs)}; }

}  // namespace

RuleViolation::RuleViolation(Rule rule, std::string reason)
    : std::runtime_error(std::string(to_string(rule)) + ": " + reason), rule_(rule), reason_(std::move(reason)) {}

const Subproblem& KernelState::subproblem(SubproblemId id) const {
    auto it = open_.find(id);
    if (it == open_.end()) {
        throw std::out_of_range("no open subproblem with id " + std::to_string(id));
    }
    return it->second;
}

std::vector<GeForm> ge_halves(const LinConstraint& raw) {
    const LinConstraint c = normalize(raw);
    switch (c.rel) {
    case Relation::Ge: return {GeForm{c.lhs, c.rhs}};
    case Relation::Le: return {GeForm{c.lhs.negated(), -c.rhs}};
    case Relation::Eq: return {GeForm{c.lhs, c.rhs}, GeForm{c.lhs.negated(), -c.rhs}};
    default: break;
    }
    return {};
}

LiteralArms literal_arms(const TheoryLiteral& lit) {
    LiteralArms arms;
    switch (lit.kind) {
    case TheoryLiteral::Kind::VarEq:
    case TheoryLiteral::Kind::VarDiseq: {
        if (lit.x == lit.y) {
            throw ModelError("theory literal relates a variable to itself");
        }
        LinExpr e = LinExpr::of(lit.x);
        e.add(lit.y, -1);
        std::vector<LinConstraint> eq{make(e, Relation::Eq, lit.offset)};
        std::vector<LinConstraint> below{make(e, Relation::Le, lit.offset - 1)};
        std::vector<LinConstraint> above{make(e, Relation::Ge, lit.offset + 1)};
        if (lit.kind == TheoryLiteral::Kind::VarEq) {
            arms.positive = {eq};
            arms.negative = {below, above};
        } else {
            arms.positive = {below, above};
            arms.negative = {eq};
        }
        break;
    }
    case TheoryLiteral::Kind::AtomTrue:
        arms.positive = {{make(LinExpr::of(lit.x), Relation::Ge, 1)}};
        arms.negative = {{make(LinExpr::of(lit.x), Relation::Le, 0)}};
        break;
    case TheoryLiteral::Kind::AtomFalse:
        arms.positive = {{make(LinExpr::of(lit.x), Relation::Le, 0)}};
        arms.negative = {{make(LinExpr::of(lit.x), Relation::Ge, 1)}};
        break;
    }
    return arms;
}

std::vector<std::vector<LinConstraint>> branch_children(const Certificate& cert) {
    if (const auto* d = std::get_if<BranchDichotomy>(&cert)) {
        return {{make(LinExpr::of(d->var), Relation::Le, d->split)},
                {make(LinExpr::of(d->var), Relation::Ge, d->split + 1)}};
    }
    if (const auto* t = std::get_if<BranchTrichotomy>(&cert)) {
        if (t->x == t->y) {
            throw ModelError("trichotomy needs two distinct variables");
        }
        LinExpr e = LinExpr::of(t->x);
        e.add(t->y, -1);
        return {{make(e, Relation::Le, t->offset - 1)}, {make(e, Relation::Eq, t->offset)},
                {make(e, Relation::Ge, t->offset + 1)}};
    }
    if (const auto* s = std::get_if<BranchConflictSplit>(&cert)) {
        if (s->core.empty()) {
            throw ModelError("conflict split needs a non-empty core");
        }
        // child_i: l_1 .. l_{i-1} hold, l_i fails; last children: every literal holds.
        std::vector<std::vector<LinConstraint>> out;
        std::vector<std::vector<LinConstraint>> prefixes{{}};
        for (const auto& lit : s->core) {
            const LiteralArms arms = literal_arms(lit);
            std::vector<std::vector<LinConstraint>> next;
            for (const auto& prefix : prefixes) {
                for (const auto& neg : arms.negative) {
                    auto child = prefix;
                    child.insert(child.end(), neg.begin(), neg.end());
                    out.push_back(std::move(child));
                }
                for (const auto& pos : arms.positive) {
                    auto extended = prefix;
                    extended.insert(extended.end(), pos.begin(), pos.end());
                    next.push_back(std::move(extended));
                }
            }
            prefixes = std::move(next);
        }
        out.insert(out.end(), prefixes.begin(), prefixes.end());
        return out;
    }
    throw ModelError("certificate is not a branch certificate");
}

// ---------------------------------------------------------------- Kernel

Kernel::Kernel(const ImtInstance& inst, const Theory& theory, KernelBudgets budgets)
    : inst_(inst), theory_(theory), budgets_(budgets) {}

KernelState Kernel::start() const {
    KernelState s;
    std::vector<LinConstraint> cs;
    cs.reserve(inst_.constraints().size());
    for (const auto& c : inst_.constraints()) {
        cs.push_back(normalize(c));
    }
    Subproblem root(0, std::move(cs));
    s.by_hash_.emplace(root.content_hash(), 0);
    s.open_.emplace(0, std::move(root));
    s.next_id_ = 1;
    return s;
}

GeForm Kernel::resolve(const Subproblem& sub, const Multiplier& m, std::span<const GeForm> lines, Rule rule) const {
    const auto idx = m.row.index;
    switch (m.row.kind) {
    case RowRef::Kind::Constraint: {
        if (idx >= sub.constraints().size()) {
            violate(rule, "multiplier cites C[" + std::to_string(idx) + "], which does not exist");
        }
        const auto& c = sub.constraints()[idx];
        return oriented(c.lhs, c.rel, c.rhs, m.sense, rule);
    }
    case RowRef::Kind::Equality: {
        if (idx >= sub.equalities().size()) {
            violate(rule, "multiplier cites D[" + std::to_string(idx) + "], which does not exist");
        }
        const auto c = sub.equalities()[idx].to_constraint();
        return oriented(c.lhs, c.rel, c.rhs, m.sense, rule);
    }
    case RowRef::Kind::Lower: {
        if (idx >= inst_.num_vars() || !inst_.bounds()[VarId{idx}].lo || m.sense != Sense::Ge) {
            violate(rule, "multiplier cites a missing lower bound");
        }
        return GeForm{LinExpr::of(VarId{idx}), *inst_.bounds()[VarId{idx}].lo};
    }
    case RowRef::Kind::Upper: {
        if (idx >= inst_.num_vars() || !inst_.bounds()[VarId{idx}].hi || m.sense != Sense::Le) {
            violate(rule, "multiplier cites a missing upper bound");
        }
        return GeForm{LinExpr::of(VarId{idx}, -1), -*inst_.bounds()[VarId{idx}].hi};
    }
    case RowRef::Kind::Line: {
        if (idx >= lines.size() || m.sense != Sense::Ge) {
            violate(rule, "multiplier cites a derivation line that is not available");
        }
        return lines[idx];
    }
    }
    violate(rule, "unknown row kind");
}

std::pair<std::map<VarId, Rat>, Rat> Kernel::aggregate(const Subproblem& sub, std::span<const Multiplier> terms,
                                                       std::span<const GeForm> lines, Rule rule) const {
    std::map<VarId, Rat> coeffs;
    Rat rhs = 0;
    for (const auto& m : terms) {
        if (m.weight < 0) {
            violate(rule, "negative multiplier");
        }
        if (m.weight == 0) {
            continue;
        }
        const GeForm g = resolve(sub, m, lines, rule);
        for (const auto& [v, c] : g.lhs.terms()) {
            coeffs[v] += m.weight * Rat(c);
        }
        rhs += m.weight * Rat(g.rhs);
    }
    std::erase_if(coeffs, [](const auto& kv) { return kv.second == 0; });
    return {std::move(coeffs), std::move(rhs)};
}

GeForm Kernel::derive(const Subproblem& sub, const CgDerivation& derivation, Rule rule) const {
    if (derivation.lines.empty()) {
        violate(rule, "empty cutting-plane derivation");
    }
    std::vector<GeForm> lines;
    lines.reserve(derivation.lines.size());
    for (const auto& line : derivation.lines) {
        auto [coeffs, rhs] = aggregate(sub, line.terms, lines, rule);
        LinExpr lhs;
        for (const auto& [v, q] : coeffs) {
            if (!is_integral(q)) {
                violate(rule, "cutting-plane aggregate has a non-integral coefficient");
            }
            lhs.add(v, numerator(q));
        }
        lines.push_back(GeForm{std::move(lhs), ceil_of(rhs)});
    }
    return lines.back();
}

std::vector<GeForm> Kernel::derive_all(const Subproblem& sub, std::span<const CgDerivation> ds, Rule rule) const {
    std::vector<GeForm> out;
    out.reserve(ds.size());
    for (const auto& d : ds) {
        out.push_back(derive(sub, d, rule));
    }
    return out;
}

bool Kernel::holds(const Subproblem& sub, const GeForm& half, std::span<const GeForm> derived) const {
    const auto implies = [&](const GeForm& g) { return g.lhs == half.lhs && g.rhs >= half.rhs; };
    if (half.lhs.empty() && half.rhs <= 0) {
        return true;
    }
    if (std::any_of(derived.begin(), derived.end(), implies)) {
        return true;
    }
    for (const auto& c : sub.constraints()) {
        for (const auto& g : ge_halves(c)) {
            if (implies(g)) {
                return true;
            }
        }
    }
    for (const auto& d : sub.equalities()) {
        for (const auto& g : ge_halves(d.to_constraint())) {
            if (implies(g)) {
                return true;
            }
        }
    }
    if (half.lhs.size() == 1) {
        const auto& [v, c] = half.lhs.terms().front();
        if (v.index < inst_.num_vars()) {
            const auto& iv = inst_.bounds()[v];
            if (c == 1 && iv.lo && *iv.lo >= half.rhs) {
                return true;
            }
            if (c == -1 && iv.hi && -*iv.hi >= half.rhs) {
                return true;
            }
        }
    }
    return false;
}

Int Kernel::verify_lb(const Subproblem& sub, const LbDual& dual, Rule rule) const {
    auto [coeffs, rhs] = aggregate(sub, dual.terms, {}, rule);
    const auto& obj = inst_.objective();
    if (coeffs.size() != obj.size()) {
        violate(rule, "dual multipliers do not reproduce the objective");
    }
    for (const auto& [v, c] : obj.terms()) {
        auto it = coeffs.find(v);
        if (it == coeffs.end() || it->second != Rat(c)) {
            violate(rule, "dual multipliers do not reproduce the objective");
        }
    }
    const Int computed = ceil_of(rhs);
    if (!dual.bound.is_finite() || dual.bound.value() > computed) {
        violate(rule, "claimed lower bound exceeds what the dual certificate proves");
    }
    return dual.bound.value();
}

void Kernel::check_model(const Subproblem& sub, const Assignment& model, const TheoryToken& token, Rule rule) const {
    if (model.size() != inst_.num_vars()) {
        violate(rule, "model is not total over the instance variables");
    }
    if (!satisfies(inst_.bounds(), model)) {
        violate(rule, "model violates the instance bounds");
    }
    if (!satisfies(sub, model)) {
        violate(rule, "model does not satisfy C and D");
    }
    if (!theory_.endorse_model(inst_, model, token)) {
        violate(rule, "theory does not endorse the model as a T-model");
    }
}

namespace {

bool duplicates(const KernelState& s, const std::unordered_multimap<std::size_t, SubproblemId>& by_hash,
                const Subproblem& sub, std::optional<SubproblemId> ignore) {
    auto [lo, hi] = by_hash.equal_range(sub.content_hash());
    for (auto it = lo; it != hi; ++it) {
        if (ignore && it->second == *ignore) {
            continue;
        }
        if (s.subproblem(it->second).same_content(sub)) {
            return true;
        }
    }
    return false;
}

}  // namespace

void Kernel::insert(KernelState& state, Subproblem sub, Rule rule) const {
    if (duplicates(state, state.by_hash_, sub, std::nullopt)) {
        violate(rule, "resulting subproblem duplicates an open subproblem");
    }
    state.by_hash_.emplace(sub.content_hash(), sub.id());
    const auto id = sub.id();
    state.open_.insert_or_assign(id, std::move(sub));
}

void Kernel::erase(KernelState& state, SubproblemId id) const {
    auto it = state.open_.find(id);
    if (it == state.open_.end()) {
        return;
    }
    auto [lo, hi] = state.by_hash_.equal_range(it->second.content_hash());
    for (auto h = lo; h != hi; ++h) {
        if (h->second == id) {
            state.by_hash_.erase(h);
            break;
        }
    }
    state.open_.erase(it);
}

void Kernel::replace(KernelState& state, SubproblemId id, Subproblem sub, Rule rule) const {
    if (duplicates(state, state.by_hash_, sub, id)) {
        violate(rule, "resulting subproblem duplicates an open subproblem");
    }
    erase(state, id);
    sub.set_id(id);
    state.by_hash_.emplace(sub.content_hash(), id);
    state.open_.emplace(id, std::move(sub));
}

namespace {

const Subproblem& single_target(const KernelState& s, const Step& step) {
    if (step.targets.size() != 1) {
        violate(step.rule, "expected exactly one target subproblem");
    }
    if (!s.has(step.targets.front())) {
        violate(step.rule, "target subproblem " + std::to_string(step.targets.front()) + " is not open");
    }
    return s.subproblem(step.targets.front());
}

const LinConstraint& step_constraint(const Step& step) {
    if (!step.constraint) {
        violate(step.rule, "step carries no constraint");
    }
    if (!is_normal(*step.constraint)) {
        violate(step.rule, "constraint is not in normal form");
    }
    return *step.constraint;
}

}  // namespace

void Kernel::apply(KernelState& state, const Step& step) const {
    const bool learnish = step.rule == Rule::Learn || step.rule == Rule::Forget || step.rule == Rule::TLearn;
    if (learnish && budgets_.max_learn_run && state.counters_.learn_run + 1 > *budgets_.max_learn_run) {
        violate(step.rule, "run of consecutive Learn/Forget/TLearn steps exceeds its budget");
    }
    try {
        switch (step.rule) {
        case Rule::Branch: apply_branch(state, step); break;
        case Rule::Learn: apply_learn(state, step); break;
        case Rule::Forget: apply_forget(state, step); break;
        case Rule::Propagate: apply_propagate(state, step); break;
        case Rule::Drop: apply_drop(state, step); break;
        case Rule::Prune: apply_prune(state, step); break;
        case Rule::Retire: apply_retire(state, step); break;
        case Rule::Unbounded: apply_unbounded(state, step); break;
        case Rule::TLearn: apply_tlearn(state, step); break;
        case Rule::Subsume: apply_subsume(state, step); break;
        }
    } catch (const ModelError& e) {
        violate(step.rule, e.what());
    }
    auto& k = state.counters_;
    ++k.steps;
    if (learnish) {
        ++k.learn_run;
        k.longest_learn_run = std::max(k.longest_learn_run, k.learn_run);
    } else {
        k.learn_run = 0;
    }
}

void Kernel::apply_branch(KernelState& state, const Step& step) const {
    const Subproblem& parent = single_target(state, step);
    if (step.children.size() < 2) {
        violate(step.rule, "a branch needs at least two children");
    }
    if (!std::holds_alternative<BranchDichotomy>(step.certificate) &&
        !std::holds_alternative<BranchTrichotomy>(step.certificate) &&
        !std::holds_alternative<BranchConflictSplit>(step.certificate)) {
        violate(step.rule, "certificate kind does not match the rule");
    }
    if (const auto* d = std::get_if<BranchDichotomy>(&step.certificate); d && d->var.index >= inst_.num_vars()) {
        violate(step.rule, "branch variable is not an instance variable");
    }
    if (step.children != branch_children(step.certificate)) {
        violate(step.rule, "children do not match the certified exhaustive split");
    }
    const auto& k = state.counters_;
    if (budgets_.max_branch_steps && k.branch_steps + k.subsume_steps + 1 > *budgets_.max_branch_steps) {
        violate(step.rule, "branch step budget exceeded");
    }
    std::vector<Subproblem> kids;
    kids.reserve(step.children.size());
    for (std::size_t i = 0; i < step.children.size(); ++i) {
        Subproblem child = parent;
        child.set_id(state.next_id_ + i);
        for (const auto& c : step.children[i]) {
            child.add(c);
        }
        for (const auto& other : kids) {
            if (other.same_content(child)) {
                violate(step.rule, "children are not syntactically distinct");
            }
        }
        if (duplicates(state, state.by_hash_, child, parent.id())) {
            violate(step.rule, "a child duplicates an open subproblem");
        }
        kids.push_back(std::move(child));
    }
    erase(state, parent.id());
    for (auto& child : kids) {
        state.by_hash_.emplace(child.content_hash(), child.id());
        const auto id = child.id();
        state.open_.emplace(id, std::move(child));
    }
    state.next_id_ += step.children.size();
    ++state.counters_.branch_steps;
}

void Kernel::apply_learn(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const LinConstraint& c = step_constraint(step);
    if (sub.contains(c)) {
        violate(step.rule, "constraint is already in C");
    }
    const auto& cut = cert_as<CgCut>(step);
    const auto derived = derive_all(sub, cut.derivations, step.rule);
    for (const auto& half : ge_halves(c)) {
        if (!holds(sub, half, derived)) {
            violate(step.rule, "learned constraint is not entailed by the cutting-plane derivation");
        }
    }
    Subproblem next = sub;
    next.add(c);
    replace(state, sub.id(), std::move(next), step.rule);
}

void Kernel::apply_forget(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const LinConstraint& c = step_constraint(step);
    Subproblem reduced = sub;
    if (!reduced.remove(c)) {
        violate(step.rule, "constraint to forget is not in C");
    }
    const auto& cut = cert_as<CgCut>(step);
    const auto derived = derive_all(reduced, cut.derivations, step.rule);
    for (const auto& half : ge_halves(c)) {
        if (!holds(reduced, half, derived)) {
            violate(step.rule, "forgotten constraint is not entailed by the remaining rows");
        }
    }
    replace(state, sub.id(), std::move(reduced), step.rule);
}

void Kernel::apply_propagate(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    if (!step.equality) {
        violate(step.rule, "step carries no simple equality");
    }
    const SimpleEquality& d = *step.equality;
    if (d.first().index >= inst_.num_vars() || (d.second() && d.second()->index >= inst_.num_vars())) {
        violate(step.rule, "simple equality mentions an unknown variable");
    }
    if (sub.contains(d)) {
        violate(step.rule, "simple equality is already in D");
    }
    const auto& fix = cert_as<BoundFix>(step);
    const auto derived = derive_all(sub, fix.derivations, step.rule);
    for (const auto& half : ge_halves(d.to_constraint())) {
        if (!holds(sub, half, derived)) {
            violate(step.rule, "simple equality is not entailed by C and D");
        }
    }
    Subproblem next = sub;
    next.add(d);
    replace(state, sub.id(), std::move(next), step.rule);
}

void Kernel::apply_drop(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const auto& farkas = cert_as<Farkas>(step);
    auto [coeffs, rhs] = aggregate(sub, farkas.terms, {}, step.rule);
    if (!coeffs.empty() || rhs <= 0) {
        violate(step.rule, "Farkas aggregate is not of the form 0 >= positive");
    }
    erase(state, sub.id());
}

void Kernel::apply_prune(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    if (state.incumbent_.is_none()) {
        violate(step.rule, "no incumbent to prune against");
    }
    const Int lb = verify_lb(sub, cert_as<LbDual>(step), step.rule);
    if (ObjValue::finite(lb) < obj_value(inst_.objective(), state.incumbent_)) {
        violate(step.rule, "lower bound is below the incumbent's objective");
    }
    erase(state, sub.id());
}

void Kernel::apply_retire(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const auto& ev = cert_as<RetireEvidence>(step);
    check_model(sub, ev.model, ev.token, step.rule);
    const Int value = eval_expr(inst_.objective(), ev.model);
    if (!(ObjValue::finite(value) < obj_value(inst_.objective(), state.incumbent_))) {
        violate(step.rule, "model does not improve on the incumbent");
    }
    const Int lb = verify_lb(sub, ev.lb_match, step.rule);
    if (lb < value) {
        violate(step.rule, "lower bound does not establish optimality within the subproblem");
    }
    erase(state, sub.id());
    state.incumbent_ = Incumbent::feasible(ev.model);
}

void Kernel::apply_unbounded(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const auto& ev = cert_as<UnboundedEvidence>(step);
    check_model(sub, ev.model, ev.token, step.rule);
    const Int value = eval_expr(inst_.objective(), ev.model);
    if (ObjValue::finite(value) > obj_value(inst_.objective(), state.incumbent_)) {
        violate(step.rule, "witness is worse than the incumbent");
    }
    std::vector<LinExpr::Term> terms;
    for (const auto& [v, c] : ev.ray) {
        if (v.index >= inst_.num_vars()) {
            violate(step.rule, "ray mentions an unknown variable");
        }
        terms.emplace_back(v, c);
    }
    const LinExpr ray = LinExpr::from_terms(std::move(terms));
    if (ray.empty()) {
        violate(step.rule, "ray is zero");
    }
    const auto theory_vars = inst_.theory_vars();
    for (const auto& [v, c] : ray.terms()) {
        if (std::binary_search(theory_vars.begin(), theory_vars.end(), v)) {
            violate(step.rule, "ray moves a theory variable");
        }
    }
    std::vector<Int> dir(inst_.num_vars(), 0);
    for (const auto& [v, c] : ray.terms()) {
        dir[v.index] = c;
    }
    const Assignment direction(dir);
    const auto recedes = [&](const LinConstraint& c) {
        const Int slope = eval_expr(c.lhs, direction);
        switch (c.rel) {
        case Relation::Ge:
        case Relation::Gt: return slope >= 0;
        case Relation::Le:
        case Relation::Lt: return slope <= 0;
        case Relation::Eq: return slope == 0;
        }
        return false;
    };
    for (const auto& c : sub.constraints()) {
        if (!recedes(c)) {
            violate(step.rule, "ray leaves the feasible region of C");
        }
    }
    for (const auto& d : sub.equalities()) {
        if (!recedes(d.to_constraint())) {
            violate(step.rule, "ray leaves the feasible region of D");
        }
    }
    for (std::uint32_t i = 0; i < inst_.num_vars(); ++i) {
        const auto& iv = inst_.bounds()[VarId{i}];
        if ((iv.lo && dir[i] < 0) || (iv.hi && dir[i] > 0)) {
            violate(step.rule, "ray leaves the instance bounds");
        }
    }
    if (eval_expr(inst_.objective(), direction) >= 0) {
        violate(step.rule, "objective does not decrease along the ray");
    }
    state.open_.clear();
    state.by_hash_.clear();
    state.incumbent_ = Incumbent::unbounded(ev.model);
}

void Kernel::apply_tlearn(KernelState& state, const Step& step) const {
    const Subproblem& sub = single_target(state, step);
    const LinConstraint& c = step_constraint(step);
    if (sub.contains(c)) {
        violate(step.rule, "lemma is already in C");
    }
    const auto& lemma = cert_as<TLemma>(step);
    const auto derived = derive_all(sub, lemma.derivations, step.rule);
    const auto annotations = inst_.annotation_vars();
    for (const auto& lit : lemma.asserted) {
        if (lit.x.index >= inst_.num_vars() || lit.y.index >= inst_.num_vars()) {
            violate(step.rule, "asserted literal mentions an unknown variable");
        }
        if (lit.is_atom() && !std::binary_search(annotations.begin(), annotations.end(), lit.x)) {
            violate(step.rule, "atom literal does not reference an annotation variable");
        }
        const LiteralArms arms = literal_arms(lit);
        const bool entailed = std::any_of(arms.positive.begin(), arms.positive.end(), [&](const auto& arm) {
            return std::all_of(arm.begin(), arm.end(), [&](const LinConstraint& part) {
                const auto halves = ge_halves(part);
                return std::all_of(halves.begin(), halves.end(),
                                   [&](const GeForm& h) { return holds(sub, h, derived); });
            });
        });
        if (!entailed) {
            violate(step.rule, "asserted literal " + format_literal(lit, inst_.names()) +
                                   " is not entailed by C and D");
        }
    }
    if (!theory_.endorse_lemma(inst_, lemma.asserted, c, lemma.token)) {
        violate(step.rule, "theory does not endorse the lemma");
    }
    Subproblem next = sub;
    next.add(c);
    replace(state, sub.id(), std::move(next), step.rule);
}

void Kernel::apply_subsume(KernelState& state, const Step& step) const {
    if (step.targets.size() != 2 || step.targets[0] == step.targets[1]) {
        violate(step.rule, "expected two distinct targets: the general and the subsumed subproblem");
    }
    if (!state.has(step.targets[0]) || !state.has(step.targets[1])) {
        violate(step.rule, "target subproblem is not open");
    }
    cert_as<SubsumeSyntactic>(step);
    const auto& kept = state.subproblem(step.targets[0]);
    const auto& dropped = state.subproblem(step.targets[1]);
    for (const auto& c : kept.constraints()) {
        if (!dropped.contains(c)) {
            violate(step.rule, "general subproblem's C is not included in the subsumed one");
        }
    }
    for (const auto& d : kept.equalities()) {
        if (!dropped.contains(d)) {
            violate(step.rule, "general subproblem's D is not included in the subsumed one");
        }
    }
    const auto& k = state.counters_;
    if (budgets_.max_branch_steps && k.branch_steps + k.subsume_steps + 1 > *budgets_.max_branch_steps) {
        violate(step.rule, "branch step budget exceeded");
    }
    erase(state, step.targets[1]);
    ++state.counters_.subsume_steps;
}

KernelState apply_step(const Kernel& kernel, KernelState state, const Step& step) {
    kernel.apply(state, step);
    return state;
}

Verdict replay_trace(const ImtInstance& inst, const Trace& trace, const Theory& theory, const ReplayOptions& options) {
    if (trace.instance_digest != instance_digest(inst)) {
        throw DigestMismatch("trace digest " + trace.instance_digest + " does not match instance digest " +
                             instance_digest(inst));
    }
    const Kernel kernel(inst, theory, options.budgets);
    Verdict verdict;
    verdict.state = kernel.start();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        if (options.observer) {
            options.observer(i, trace.steps[i], verdict.state);
        }
        try {
            kernel.apply(verdict.state, trace.steps[i]);
        } catch (const RuleViolation& e) {
            verdict.failed_step = i;
            verdict.reason = e.what();
            return verdict;
        }
    }
    if (options.require_final && !verdict.state.is_final()) {
        verdict.reason = "trace ends in a non-final state";
        return verdict;
    }
    verdict.accepted = true;
    return verdict;
}

}  // namespace imt
