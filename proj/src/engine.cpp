// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/engine.hpp"

#include <algorithm>
#include <map>

#include "imt/lp.hpp"
#include "imt/native_format.hpp"

namespace imt {

std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::BudgetExceeded: return "unknown";
    }
    return "?";
}

ImtInstance apply_default_bound(const ImtInstance& inst, const std::optional<Int>& n) {
    ImtInstance out = inst;
    if (!n) {
        return out;
    }
    for (std::uint32_t v = 0; v < out.num_vars(); ++v) {
        auto& iv = out.bounds()[VarId{v}];
        if (!iv.lo) {
            iv.lo = iv.hi ? std::min(Int(-*n), *iv.hi) : Int(-*n);
        }
        if (!iv.hi) {
            iv.hi = std::max(*n, *iv.lo);
        }
    }
    return out;
}

KernelBudgets engine_budgets(const Config& cfg) {
    // A node's Learn-only run: its cut rounds, plus one sentinel Learn or TLearn.
    return KernelBudgets{std::nullopt, cfg.cuts_rounds_max * cfg.cut_cap_per_node + 1};
}

namespace {

Step make_step(Rule rule, std::vector<SubproblemId> targets, Certificate cert) {
    Step s;
    s.rule = rule;
    s.targets = std::move(targets);
    s.certificate = std::move(cert);
    return s;
}

LinConstraint sentinel() { return normalize(LinConstraint::contradiction()); }

std::uint32_t index_of(const Subproblem& sub, const LinConstraint& c) {
    const auto& cs = sub.constraints();
    return static_cast<std::uint32_t>(std::find(cs.begin(), cs.end(), c) - cs.begin());
}

Assignment to_assignment(const std::vector<Rat>& point) {
    std::vector<Int> v;
    v.reserve(point.size());
    for (const auto& q : point) {
        v.push_back(numerator(q));
    }
    return Assignment(std::move(v));
}

bool integral(const std::vector<Rat>& point) {
    return std::all_of(point.begin(), point.end(), [](const Rat& q) { return is_integral(q); });
}

}  // namespace

Step select_branch(const Subproblem& sub, const std::vector<Rat>& point, const Config& cfg) {
    std::optional<std::size_t> pick;
    Rat best_dist = -1;
    for (std::size_t j = 0; j < point.size(); ++j) {
        if (is_integral(point[j])) {
            continue;
        }
        if (cfg.branch_rule == BranchRule::LowestIndex) {
            pick = j;
            break;
        }
        const Rat f = frac_of(point[j]);
        const Rat dist = std::min(f, Rat(1 - f));
        if (dist > best_dist) {
            best_dist = dist;
            pick = j;
        }
    }
    if (!pick) {
        throw NoFractional("select_branch on an integral point");
    }
    const VarId v{static_cast<std::uint32_t>(*pick)};
    Step s = make_step(Rule::Branch, {sub.id()}, BranchDichotomy{v, floor_of(point[*pick])});
    s.children = branch_children(s.certificate);
    return s;
}

std::vector<Step> conflict_split(const ImtInstance& inst, const Subproblem& sub, const ConflictCore& core,
                                 SubproblemId next_id) {
    if (core.empty()) {
        throw EmptyCore("conflict_split needs a non-empty core");
    }
    std::vector<Step> out;
    Step branch = make_step(Rule::Branch, {sub.id()}, BranchConflictSplit{core});
    branch.children = branch_children(branch.certificate);
    std::size_t finals = 1;
    for (const auto& lit : core) {
        finals *= literal_arms(lit).positive.size();
    }
    const std::size_t n = branch.children.size();
    const auto children = branch.children;
    out.push_back(std::move(branch));
    const LinConstraint bottom = sentinel();
    const TheoryToken token = EufTheory::lemma_token(core, bottom);
    (void)inst;
    for (std::size_t i = n - finals; i < n; ++i) {
        const SubproblemId id = next_id + i;
        Subproblem child = sub;
        for (const auto& c : children[i]) {
            child.add(c);
        }
        Step learn = make_step(Rule::TLearn, {id}, TLemma{core, {}, token});
        learn.constraint = bottom;
        out.push_back(std::move(learn));
        const auto row = static_cast<std::uint32_t>(child.constraints().size());
        out.push_back(make_step(Rule::Drop, {id},
                                Farkas{{Multiplier{RowRef{RowRef::Kind::Constraint, row}, Sense::Le, 1}}}));
    }
    return out;
}

std::vector<TheoryLiteral> point_literals(const ImtInstance& inst, const Subproblem& sub, const Assignment& point) {
    const auto annotations = inst.annotation_vars();
    // Variables used as terms; an annotation can be one too.
    std::vector<VarId> plain;
    for (const auto& a : inst.atoms()) {
        if (const auto* f = std::get_if<FunDef>(&a.atom)) {
            plain.push_back(f->result);
            plain.insert(plain.end(), f->args.begin(), f->args.end());
        } else {
            const auto& e = std::get<EqAtom>(a.atom);
            plain.push_back(e.x);
            plain.push_back(e.y);
        }
    }
    std::sort(plain.begin(), plain.end());
    plain.erase(std::unique(plain.begin(), plain.end()), plain.end());
    const auto is_plain = [&](VarId v) { return std::binary_search(plain.begin(), plain.end(), v); };
    std::vector<TheoryLiteral> out;
    for (const auto& d : sub.equalities()) {
        if (!d.is_fix() && is_plain(d.first()) && is_plain(*d.second())) {
            out.push_back(TheoryLiteral::eq(d.first(), *d.second(), d.constant()));
        }
    }
    for (VarId a : annotations) {
        out.push_back(point[a] > 0 ? TheoryLiteral::atom_true(a) : TheoryLiteral::atom_false(a));
    }
    // Equality chains inside each value class, then one disequality per pair of classes.
    std::map<Int, std::vector<VarId>> classes;
    for (VarId v : plain) {
        classes[point[v]].push_back(v);
    }
    std::vector<VarId> reps;
    for (const auto& [value, members] : classes) {
        reps.push_back(members.front());
        for (std::size_t i = 1; i < members.size(); ++i) {
            out.push_back(TheoryLiteral::eq(members[i - 1], members[i]));
        }
    }
    for (std::size_t i = 0; i < reps.size(); ++i) {
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            out.push_back(TheoryLiteral::diseq(reps[i], reps[j]));
        }
    }
    return out;
}

namespace {

struct Node {
    ObjValue bound = ObjValue::neg_inf();
    std::optional<LbDual> dual;  // valid for this node: cites only inherited rows
    std::size_t depth = 0;
};

class Engine {
public:
    Engine(const ImtInstance& work, const Config& cfg)
        : work_(work), cfg_(cfg), kernel_(work_, theory_, engine_budgets(cfg)), state_(kernel_.start()),
          start_(std::chrono::steady_clock::now()) {
        trace_.instance_digest = instance_digest(work_);
        nodes_.emplace(0, Node{});
    }

    SolveResult run() {
        bool exhausted = false;
        while (!state_.is_final()) {
            if (out_of_budget()) {
                exhausted = true;
                break;
            }
            process(pick());
        }
        SolveResult r;
        r.stats = stats_;
        r.counters = state_.counters();
        r.best = state_.incumbent();
        if (exhausted) {
            r.status = SolveStatus::BudgetExceeded;
        } else {
            switch (state_.incumbent().kind()) {
            case Incumbent::Kind::None: r.status = SolveStatus::Infeasible; break;
            case Incumbent::Kind::Feasible:
                r.status = SolveStatus::Optimal;
                r.model = state_.incumbent().assignment();
                r.value = eval_expr(work_.objective(), *r.model);
                break;
            case Incumbent::Kind::Unbounded:
                r.status = SolveStatus::Unbounded;
                r.model = state_.incumbent().assignment();
                break;
            }
        }
        if (r.best.kind() == Incumbent::Kind::Feasible) {
            const auto& a = r.best.assignment();
            if (!satisfies(work_.constraints(), a) || !satisfies(work_.bounds(), a) ||
                functional_consistency(work_, a)) {
                throw std::logic_error("engine incumbent is not a T-model");
            }
        }
        if (cfg_.emit_trace) {
            ReplayOptions opts;
            opts.budgets = engine_budgets(cfg_);
            opts.require_final = !exhausted;
            const Verdict v = replay_trace(work_, trace_, theory_, opts);
            if (!v.accepted) {
                throw std::logic_error("engine trace rejected on replay: " + v.reason);
            }
            r.trace = std::move(trace_);
        }
        return r;
    }

private:
    bool out_of_budget() const {
        if (cfg_.node_budget && stats_.nodes >= *cfg_.node_budget) {
            return true;
        }
        return cfg_.time_budget && std::chrono::steady_clock::now() - start_ > *cfg_.time_budget;
    }

    SubproblemId pick() const {
        const auto better = [&](const auto& a, const auto& b) {
            if (cfg_.node_order == NodeOrder::DepthFirst) {
                return std::tie(a.second.depth, a.first) > std::tie(b.second.depth, b.first);
            }
            if (a.second.bound != b.second.bound) {
                return a.second.bound < b.second.bound;
            }
            return std::tie(a.second.depth, a.first) > std::tie(b.second.depth, b.first);
        };
        auto it = std::min_element(nodes_.begin(), nodes_.end(), better);
        return it->first;
    }

    void apply(Step step) {
        try {
            kernel_.apply(state_, step);
        } catch (const RuleViolation& e) {
            throw std::logic_error(std::string("engine produced an inadmissible step: ") + e.what());
        }
        if (cfg_.emit_trace) {
            trace_.steps.push_back(std::move(step));
        }
    }

    void close(SubproblemId id) { nodes_.erase(id); }

    const Subproblem& sub(SubproblemId id) const { return state_.subproblem(id); }

    ObjValue incumbent_value() const { return obj_value(work_.objective(), state_.incumbent()); }

    void prune(SubproblemId id, const LbDual& dual) {
        apply(make_step(Rule::Prune, {id}, dual));
        close(id);
    }

    void drop_by_derivation(SubproblemId id, CgDerivation derivation) {
        Step learn = make_step(Rule::Learn, {id}, CgCut{{std::move(derivation)}});
        learn.constraint = sentinel();
        apply(std::move(learn));
        const auto row = index_of(sub(id), sentinel());
        apply(make_step(Rule::Drop, {id}, Farkas{{Multiplier{RowRef{RowRef::Kind::Constraint, row}, Sense::Le, 1}}}));
        close(id);
    }

    void process(SubproblemId id) {
        ++stats_.nodes;
        Node node = nodes_.at(id);
        if (node.dual && node.bound >= incumbent_value()) {
            prune(id, *node.dual);
            return;
        }
        if (cfg_.propagate) {
            Propagation p = propagate_bounds(sub(id), work_.bounds());
            if (p.infeasible) {
                drop_by_derivation(id, std::move(*p.infeasible));
                return;
            }
            for (auto& [d, fix] : p.equalities) {
                if (sub(id).contains(d)) {
                    continue;
                }
                Step s = make_step(Rule::Propagate, {id}, std::move(fix));
                s.equality = d;
                apply(std::move(s));
                ++stats_.propagations;
            }
        }
        std::size_t rounds = 0;
        while (true) {
            Tableau t(sub(id), work_.objective(), work_.bounds());
            LpOutcome outcome = t.solve();
            ++stats_.lp_solves;
            stats_.pivots += t.pivots();
            if (auto* inf = std::get_if<LpInfeasible>(&outcome)) {
                apply(make_step(Rule::Drop, {id}, std::move(inf->farkas)));
                close(id);
                return;
            }
            if (auto* unb = std::get_if<LpUnbounded>(&outcome)) {
                unbounded(id, node, *unb);
                return;
            }
            auto& opt = std::get<LpOptimal>(outcome);
            if (!state_.incumbent().is_none() && opt.dual.bound >= incumbent_value()) {
                prune(id, opt.dual);
                return;
            }
            if (integral(opt.point)) {
                integral_point(id, to_assignment(opt.point), opt.dual);
                return;
            }
            if (rounds < cfg_.cuts_rounds_max && learn_cuts(id, t)) {
                ++rounds;
                stats_.max_cut_rounds = std::max(stats_.max_cut_rounds, rounds);
                continue;
            }
            branch(select_branch(sub(id), opt.point, cfg_), node, opt.dual);
            return;
        }
    }

    bool learn_cuts(SubproblemId id, const Tableau& t) {
        bool any = false;
        for (auto& g : derive_gomory_cuts(t, cfg_.cut_cap_per_node)) {
            if (sub(id).contains(g.cut)) {
                continue;
            }
            if (cfg_.on_cut) {
                cfg_.on_cut(sub(id), g.cut);
            }
            Step s = make_step(Rule::Learn, {id}, std::move(g.certificate));
            s.constraint = g.cut;
            apply(std::move(s));
            ++stats_.cuts;
            any = true;
        }
        return any;
    }

    void branch(Step step, const Node& parent, const LbDual& dual) {
        const SubproblemId first = state_.next_id();
        const std::size_t n = step.children.size();
        const SubproblemId id = step.targets.front();
        apply(std::move(step));
        ++stats_.branches;
        close(id);
        for (std::size_t i = 0; i < n; ++i) {
            nodes_.emplace(first + i, Node{dual.bound, dual, parent.depth + 1});
        }
    }

    void integral_point(SubproblemId id, const Assignment& point, const LbDual& dual) {
        if (!work_.atoms().empty()) {
            EufSession session(work_);
            TheoryCheck check;
            for (const auto& lit : point_literals(work_, sub(id), point)) {
                check = session.assert_literal(lit);
                if (!check.sat) {
                    break;
                }
            }
            if (!check.sat) {
                ++stats_.theory_conflicts;
                const SubproblemId first = state_.next_id();
                const Node parent = nodes_.at(id);
                auto steps = conflict_split(work_, sub(id), check.core, first);
                const std::size_t n = steps.front().children.size();
                const std::size_t finals = (steps.size() - 1) / 2;
                for (auto& s : steps) {
                    apply(std::move(s));
                }
                ++stats_.branches;
                close(id);
                for (std::size_t i = 0; i + finals < n; ++i) {
                    nodes_.emplace(first + i, Node{dual.bound, dual, parent.depth + 1});
                }
                return;
            }
        }
        const auto token = theory_.certify_model(work_, point);
        if (!token) {
            throw std::logic_error("theory session and model check disagree");
        }
        apply(make_step(Rule::Retire, {id}, RetireEvidence{point, dual, *token}));
        close(id);
    }

    void unbounded(SubproblemId id, const Node& node, const LpUnbounded& u) {
        if (!integral(u.point)) {
            // Branching shrinks the search toward an integral point on the recession cone.
            Step s = select_branch(sub(id), u.point, cfg_);
            const SubproblemId first = state_.next_id();
            const std::size_t n = s.children.size();
            apply(std::move(s));
            ++stats_.branches;
            close(id);
            for (std::size_t i = 0; i < n; ++i) {
                nodes_.emplace(first + i, Node{ObjValue::neg_inf(), std::nullopt, node.depth + 1});
            }
            return;
        }
        Assignment witness = to_assignment(u.point);
        const Int slope = [&] {
            Int s = 0;
            for (const auto& [v, c] : work_.objective().terms()) {
                s += c * u.ray[v.index];
            }
            return s;
        }();
        const ObjValue best = incumbent_value();
        if (best.is_finite()) {
            const Int here = eval_expr(work_.objective(), witness);
            if (here > best.value()) {
                // Walk along the ray until the witness is no worse than the incumbent.
                const Int steps = ceil_div(here - best.value(), -slope);
                std::vector<Int> moved = witness.values();
                for (std::size_t j = 0; j < moved.size(); ++j) {
                    moved[j] += steps * u.ray[j];
                }
                witness = Assignment(std::move(moved));
            }
        }
        std::vector<std::pair<VarId, Int>> ray;
        for (std::uint32_t j = 0; j < u.ray.size(); ++j) {
            if (u.ray[j] != 0) {
                ray.emplace_back(VarId{j}, u.ray[j]);
            }
        }
        const auto token = theory_.certify_model(work_, witness);
        if (!token) {
            throw std::logic_error("unbounded witness is not a T-model");
        }
        apply(make_step(Rule::Unbounded, {id}, UnboundedEvidence{std::move(witness), std::move(ray), *token}));
        nodes_.clear();
    }

    const ImtInstance& work_;
    const Config& cfg_;
    EufTheory theory_;
    Kernel kernel_;
    KernelState state_;
    Trace trace_;
    std::map<SubproblemId, Node> nodes_;
    SolveStats stats_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

SolveResult solve(const ImtInstance& inst, const Config& cfg) {
    const ImtInstance work = apply_default_bound(inst, cfg.default_bound);
    work.validate();
    if (!work.atoms().empty() && !work.bounds().all_finite()) {
        for (std::uint32_t v = 0; v < work.num_vars(); ++v) {
            if (!work.bounds()[VarId{v}].finite()) {
                throw UnboundedVarsWithTheory("variable '" + work.name(VarId{v}) +
                                              "' is unbounded but the instance has theory atoms");
            }
        }
    }
    if (cfg.node_budget && *cfg.node_budget == 0) {
        throw std::invalid_argument("node budget must be at least 1");
    }
    return Engine(work, cfg).run();
}

}  // namespace imt
