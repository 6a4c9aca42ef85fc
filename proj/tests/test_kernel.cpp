// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "imt/euf.hpp"
#include "imt/kernel.hpp"
#include "imt/lp.hpp"
#include "imt/native_format.hpp"
#include "support.hpp"

namespace imt {
namespace {

Multiplier mul(RowRef::Kind k, std::uint32_t i, Sense s, Rat w = 1) { return Multiplier{RowRef{k, i}, s, std::move(w)}; }
Multiplier c_row(std::uint32_t i, Sense s, Rat w = 1) { return mul(RowRef::Kind::Constraint, i, s, std::move(w)); }

LinConstraint le(VarId v, int k) { return LinConstraint{LinExpr::of(v), Relation::Le, k}; }
LinConstraint ge(VarId v, int k) { return LinConstraint{LinExpr::of(v), Relation::Ge, k}; }

class KernelTest : public ::testing::Test {
protected:
    EufTheory theory;
};

TEST_F(KernelTest, DropWithFarkasReachesFinalState) {
    const ImtInstance inst = parse_native("[vars]\nx int\n[constraints]\nx >= 1\nx <= 0\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    ASSERT_EQ(s.open().size(), 1u);
    EXPECT_TRUE(s.incumbent().is_none());
    Step drop{Rule::Drop, {0}, {}, std::nullopt, std::nullopt, Farkas{{c_row(0, Sense::Ge), c_row(1, Sense::Le)}}};
    k.apply(s, drop);
    EXPECT_TRUE(s.is_final());
    EXPECT_TRUE(s.incumbent().is_none());

    const Trace t{instance_digest(inst), {drop}};
    EXPECT_TRUE(replay_trace(inst, t, theory).accepted);
}

TEST_F(KernelTest, DropRejectsBadFarkas) {
    const ImtInstance inst = parse_native("[vars]\nx int\n[constraints]\nx >= 1\nx <= 0\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    // wrong sense on a Le row
    Step bad{Rule::Drop, {0}, {}, std::nullopt, std::nullopt, Farkas{{c_row(0, Sense::Ge), c_row(1, Sense::Ge)}}};
    EXPECT_THROW(k.apply(s, bad), RuleViolation);
    // does not cancel
    bad.certificate = Farkas{{c_row(0, Sense::Ge, 2), c_row(1, Sense::Le)}};
    EXPECT_THROW(k.apply(s, bad), RuleViolation);
    // negative weight
    bad.certificate = Farkas{{c_row(0, Sense::Ge, -1), c_row(1, Sense::Le, -1)}};
    EXPECT_THROW(k.apply(s, bad), RuleViolation);
    // the failed attempts left the state alone
    EXPECT_EQ(s.open().size(), 1u);
    EXPECT_EQ(s.counters().steps, 0u);
}

TEST_F(KernelTest, BranchDichotomyProducesTwoChildren) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\ny int 0 10\n[constraints]\n2*x + 3*y >= 12\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId y{1};
    const BranchDichotomy cert{y, 3};
    Step b{Rule::Branch, {0}, branch_children(cert), std::nullopt, std::nullopt, cert};
    k.apply(s, b);
    ASSERT_EQ(s.open().size(), 2u);
    EXPECT_TRUE(s.subproblem(1).contains(le(y, 3)));
    EXPECT_TRUE(s.subproblem(2).contains(ge(y, 4)));
    EXPECT_EQ(s.counters().branch_steps, 1u);
}

TEST_F(KernelTest, BranchRejectsChildrenThatDoNotMatch) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId x{0};
    Step b{Rule::Branch, {0}, {{le(x, 3)}, {ge(x, 5)}}, std::nullopt, std::nullopt, BranchDichotomy{x, 3}};
    EXPECT_THROW(k.apply(s, b), RuleViolation);
    b.children = {{le(x, 3)}};
    EXPECT_THROW(k.apply(s, b), RuleViolation);
    b.certificate = Farkas{};
    b.children = {{le(x, 3)}, {ge(x, 4)}};
    EXPECT_THROW(k.apply(s, b), RuleViolation);
    // unknown target
    b.certificate = BranchDichotomy{x, 3};
    b.targets = {9};
    EXPECT_THROW(k.apply(s, b), RuleViolation);
}

TEST_F(KernelTest, BranchRejectsDuplicateChildren) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\n[constraints]\nx <= 3\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId x{0};
    // the first child equals the parent's content; the parent is replaced, so that is fine
    k.apply(s, Step{Rule::Branch, {0}, branch_children(BranchDichotomy{x, 3}), std::nullopt, std::nullopt,
                    BranchDichotomy{x, 3}});
    ASSERT_EQ(s.open().size(), 2u);
    // on {x <= 3, x >= 4} the same split yields two identical children
    Step again{Rule::Branch, {2}, branch_children(BranchDichotomy{x, 3}), std::nullopt, std::nullopt,
               BranchDichotomy{x, 3}};
    EXPECT_THROW(k.apply(s, again), RuleViolation);
    // {x <= 3} at split 5 gives {x <= 3, x <= 5}, new content
    EXPECT_NO_THROW(k.apply(s, Step{Rule::Branch, {1}, branch_children(BranchDichotomy{x, 5}), std::nullopt,
                                    std::nullopt, BranchDichotomy{x, 5}}));
}

TEST_F(KernelTest, RetireOptimalIntegralPoint) {
    const ImtInstance inst =
        parse_native("[vars]\nx int 0 10\ny int 0 10\n[objective]\nmin x + y\n[constraints]\n2*x + 3*y >= 12\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const auto opt = std::get<LpOptimal>(lp_solve(s.subproblem(0), inst.objective(), inst.bounds()));
    const Assignment a({0, 4});
    Step r{Rule::Retire, {0}, {}, std::nullopt, std::nullopt,
           RetireEvidence{a, opt.dual, EufTheory::model_token(a)}};
    k.apply(s, r);
    EXPECT_TRUE(s.is_final());
    ASSERT_EQ(s.incumbent().kind(), Incumbent::Kind::Feasible);
    EXPECT_EQ(obj_value(inst.objective(), s.incumbent()), ObjValue::finite(4));
}

TEST_F(KernelTest, RetireRejectsSuboptimalOrInfeasibleModels) {
    const ImtInstance inst =
        parse_native("[vars]\nx int 0 10\ny int 0 10\n[objective]\nmin x + y\n[constraints]\n2*x + 3*y >= 12\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const auto opt = std::get<LpOptimal>(lp_solve(s.subproblem(0), inst.objective(), inst.bounds()));
    const Assignment worse({6, 0});  // feasible, value 6 > 4
    Step r{Rule::Retire, {0}, {}, std::nullopt, std::nullopt,
           RetireEvidence{worse, opt.dual, EufTheory::model_token(worse)}};
    EXPECT_THROW(k.apply(s, r), RuleViolation);
    const Assignment infeasible({0, 0});
    r.certificate = RetireEvidence{infeasible, opt.dual, EufTheory::model_token(infeasible)};
    EXPECT_THROW(k.apply(s, r), RuleViolation);
    const Assignment good({0, 4});
    r.certificate = RetireEvidence{good, opt.dual, TheoryToken{"euf", "0000000000000000"}};
    EXPECT_THROW(k.apply(s, r), RuleViolation);
}

TEST_F(KernelTest, PruneNeedsIncumbentAndBound) {
    const ImtInstance inst =
        parse_native("[vars]\nx int 0 10\ny int 0 10\n[objective]\nmin x + y\n[constraints]\n2*x + 3*y >= 12\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId y{1};
    k.apply(s, Step{Rule::Branch, {0}, branch_children(BranchDichotomy{y, 3}), std::nullopt, std::nullopt,
                    BranchDichotomy{y, 3}});
    // y >= 4: optimum (0, 4)
    const auto hi = std::get<LpOptimal>(lp_solve(s.subproblem(2), inst.objective(), inst.bounds()));
    Step prune_early{Rule::Prune, {1}, {}, std::nullopt, std::nullopt, hi.dual};
    EXPECT_THROW(k.apply(s, prune_early), RuleViolation);  // no incumbent yet
    const Assignment a({0, 4});
    k.apply(s, Step{Rule::Retire, {2}, {}, std::nullopt, std::nullopt,
                    RetireEvidence{a, hi.dual, EufTheory::model_token(a)}});
    // y <= 3: LP optimum 9/2, rounded up to 5 >= 4
    const auto [lb, dual] = lower_bound(s.subproblem(1), inst.objective(), inst.bounds());
    EXPECT_EQ(lb, ObjValue::finite(5));
    k.apply(s, Step{Rule::Prune, {1}, {}, std::nullopt, std::nullopt, dual});
    EXPECT_TRUE(s.is_final());
}

TEST_F(KernelTest, LearnChvatalGomoryCut) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 5\ny int 0 5\n[constraints]\n2*x + 2*y <= 5\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const LinConstraint cut{LinExpr::from_terms({{VarId{0}, 1}, {VarId{1}, 1}}), Relation::Le, 2};
    const CgCut cert{{CgDerivation{{CgLine{{c_row(0, Sense::Le, Rat(1, 2))}}}}}};
    Step learn{Rule::Learn, {0}, {}, cut, std::nullopt, cert};
    Step too_strong = learn;
    too_strong.constraint = LinConstraint{cut.lhs, Relation::Le, 1};
    EXPECT_THROW(k.apply(s, too_strong), RuleViolation);
    k.apply(s, learn);
    EXPECT_TRUE(s.subproblem(0).contains(cut));
    EXPECT_THROW(k.apply(s, learn), RuleViolation);  // already present
    EXPECT_EQ(s.counters().learn_run, 1u);
}

TEST_F(KernelTest, LearnSingleRowCeilRounding) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\n[constraints]\n2*x >= 1\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const CgCut cert{{CgDerivation{{CgLine{{c_row(0, Sense::Ge, Rat(1, 2))}}}}}};
    k.apply(s, Step{Rule::Learn, {0}, {}, ge(VarId{0}, 1), std::nullopt, cert});
    EXPECT_TRUE(s.subproblem(0).contains(ge(VarId{0}, 1)));
}

TEST_F(KernelTest, LearnRunBudget) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\n[constraints]\n2*x >= 1\n");
    const Kernel k(inst, theory, KernelBudgets{std::nullopt, 1});
    KernelState s = k.start();
    const CgCut cert{{CgDerivation{{CgLine{{c_row(0, Sense::Ge, Rat(1, 2))}}}}}};
    k.apply(s, Step{Rule::Learn, {0}, {}, ge(VarId{0}, 1), std::nullopt, cert});
    const CgCut weaker{{CgDerivation{{CgLine{{c_row(0, Sense::Ge, Rat(1, 2))}}}}}};
    EXPECT_THROW(k.apply(s, Step{Rule::Learn, {0}, {}, ge(VarId{0}, 0), std::nullopt, weaker}), RuleViolation);
}

TEST_F(KernelTest, ForgetNeedsEntailmentByTheRest) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\n[constraints]\nx >= 3\nx >= 1\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    // x >= 3 entails x >= 1, not the other way round
    Step forget_strong{Rule::Forget, {0}, {}, ge(VarId{0}, 3), std::nullopt,
                       CgCut{{CgDerivation{{CgLine{{c_row(0, Sense::Ge)}}}}}}};
    EXPECT_THROW(k.apply(s, forget_strong), RuleViolation);
    Step forget{Rule::Forget, {0}, {}, ge(VarId{0}, 1), std::nullopt, CgCut{{CgDerivation{{CgLine{{c_row(0, Sense::Ge)}}}}}}};
    k.apply(s, forget);
    EXPECT_EQ(s.subproblem(0).constraints().size(), 1u);
}

TEST_F(KernelTest, PropagateFix) {
    const ImtInstance inst = parse_native("[vars]\nx int\n[constraints]\nx >= 3\nx <= 3\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const BoundFix fix{{CgDerivation{{CgLine{{c_row(0, Sense::Ge)}}}}, CgDerivation{{CgLine{{c_row(1, Sense::Le)}}}}}};
    Step wrong{Rule::Propagate, {0}, {}, std::nullopt, SimpleEquality::fix(VarId{0}, 4), fix};
    EXPECT_THROW(k.apply(s, wrong), RuleViolation);
    Step p{Rule::Propagate, {0}, {}, std::nullopt, SimpleEquality::fix(VarId{0}, 3), fix};
    k.apply(s, p);
    EXPECT_TRUE(s.subproblem(0).contains(SimpleEquality::fix(VarId{0}, 3)));
}

TEST_F(KernelTest, PropagateDiffFromInstanceBoundsAndRows) {
    const ImtInstance inst = parse_native("[vars]\nx int\ny int\n[constraints]\nx - y >= 2\nx - y <= 2\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const BoundFix fix{{CgDerivation{{CgLine{{c_row(0, Sense::Ge)}}}}, CgDerivation{{CgLine{{c_row(1, Sense::Le)}}}}}};
    k.apply(s, Step{Rule::Propagate, {0}, {}, std::nullopt, SimpleEquality::diff(VarId{0}, VarId{1}, 2), fix});
    EXPECT_EQ(s.subproblem(0).equalities().size(), 1u);
}

TEST_F(KernelTest, TLearnOnTheoryConflict) {
    // v3 = f(v1), v4 = f(v2); D forces v1 = v2 while (v3 = v4) @ e is false
    const ImtInstance inst = parse_native(
        "[vars]\nv1 int 0 3\nv2 int 0 3\nv3 int 0 3\nv4 int 0 3\ne int 0 1\n[funs]\nf 1\n"
        "[constraints]\nv1 - v2 = 0\ne <= 0\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n(v3 = v4) @ e\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId v1{0}, v2{1}, e{4};
    const std::vector<TheoryLiteral> asserted{TheoryLiteral::eq(v1, v2), TheoryLiteral::atom_false(e)};
    const LinConstraint sentinel = normalize(LinConstraint::contradiction());
    TLemma lemma{asserted, {}, EufTheory::lemma_token(asserted, sentinel)};
    k.apply(s, Step{Rule::TLearn, {0}, {}, sentinel, std::nullopt, lemma});
    k.apply(s, Step{Rule::Drop, {0}, {}, std::nullopt, std::nullopt,
                    Farkas{{c_row(static_cast<std::uint32_t>(s.subproblem(0).constraints().size() - 1), Sense::Le)}}});
    EXPECT_TRUE(s.is_final());
}

TEST_F(KernelTest, TLearnRejectsUnentailedLiteralsAndForgedTokens) {
    const ImtInstance inst = parse_native(
        "[vars]\nv1 int 0 3\nv2 int 0 3\nv3 int 0 3\nv4 int 0 3\ne int 0 1\n[funs]\nf 1\n"
        "[constraints]\ne <= 0\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n(v3 = v4) @ e\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId v1{0}, v2{1}, e{4};
    const std::vector<TheoryLiteral> asserted{TheoryLiteral::eq(v1, v2), TheoryLiteral::atom_false(e)};
    const LinConstraint sentinel = normalize(LinConstraint::contradiction());
    // v1 = v2 does not hold in C here
    EXPECT_THROW(k.apply(s, Step{Rule::TLearn, {0}, {}, sentinel, std::nullopt,
                                 TLemma{asserted, {}, EufTheory::lemma_token(asserted, sentinel)}}),
                 RuleViolation);
    // a lemma the theory does not entail
    const std::vector<TheoryLiteral> weak{TheoryLiteral::atom_false(e)};
    EXPECT_THROW(k.apply(s, Step{Rule::TLearn, {0}, {}, sentinel, std::nullopt,
                                 TLemma{weak, {}, EufTheory::lemma_token(weak, sentinel)}}),
                 RuleViolation);
}

TEST_F(KernelTest, UnboundedWithRay) {
    const ImtInstance inst = parse_native("[vars]\nx int\ny int\n[objective]\nmin -x - y\n[constraints]\nx - y = 3\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const Assignment a({3, 0});
    Step bad{Rule::Unbounded, {0}, {}, std::nullopt, std::nullopt,
             UnboundedEvidence{a, {{VarId{0}, 1}}, EufTheory::model_token(a)}};
    EXPECT_THROW(k.apply(s, bad), RuleViolation);  // leaves x - y = 3
    Step zero{Rule::Unbounded, {0}, {}, std::nullopt, std::nullopt, UnboundedEvidence{a, {}, EufTheory::model_token(a)}};
    EXPECT_THROW(k.apply(s, zero), RuleViolation);
    Step good{Rule::Unbounded, {0}, {}, std::nullopt, std::nullopt,
              UnboundedEvidence{a, {{VarId{0}, 1}, {VarId{1}, 1}}, EufTheory::model_token(a)}};
    k.apply(s, good);
    EXPECT_TRUE(s.is_final());
    EXPECT_EQ(s.incumbent().kind(), Incumbent::Kind::Unbounded);
    EXPECT_EQ(obj_value(inst.objective(), s.incumbent()), ObjValue::neg_inf());
}

TEST_F(KernelTest, SubsumeBySyntacticInclusion) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\ny int 0 10\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId x{0}, y{1};
    k.apply(s, Step{Rule::Branch, {0}, branch_children(BranchDichotomy{x, 3}), std::nullopt, std::nullopt,
                    BranchDichotomy{x, 3}});
    k.apply(s, Step{Rule::Branch, {1}, branch_children(BranchDichotomy{y, 3}), std::nullopt, std::nullopt,
                    BranchDichotomy{y, 3}});
    // open: 2 = {x >= 4}, 3 = {x <= 3, y <= 3}, 4 = {x <= 3, y >= 4}
    EXPECT_THROW(k.apply(s, Step{Rule::Subsume, {2, 3}, {}, std::nullopt, std::nullopt, SubsumeSyntactic{}}),
                 RuleViolation);
    EXPECT_THROW(k.apply(s, Step{Rule::Subsume, {3, 3}, {}, std::nullopt, std::nullopt, SubsumeSyntactic{}}),
                 RuleViolation);
    EXPECT_THROW(k.apply(s, Step{Rule::Subsume, {3, 9}, {}, std::nullopt, std::nullopt, SubsumeSyntactic{}}),
                 RuleViolation);
}

TEST_F(KernelTest, SubsumeDropsTheMoreSpecificSubproblem) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 10\ny int 0 10\n[constraints]\nx >= 2\n");
    const Kernel k(inst, theory);
    KernelState s = k.start();
    const VarId y{1};
    // 1 = {x >= 2, y <= 10}, 2 = {x >= 2, y >= 11}
    k.apply(s, Step{Rule::Branch, {0}, branch_children(BranchDichotomy{y, 10}), std::nullopt, std::nullopt,
                    BranchDichotomy{y, 10}});
    // y <= 10 is the instance bound, so it can be forgotten from 1
    k.apply(s, Step{Rule::Forget, {1}, {}, le(y, 10), std::nullopt,
                    CgCut{{CgDerivation{{CgLine{{mul(RowRef::Kind::Upper, 1, Sense::Le)}}}}}}});
    EXPECT_EQ(s.subproblem(1).constraints().size(), 1u);
    EXPECT_THROW(k.apply(s, Step{Rule::Subsume, {2, 1}, {}, std::nullopt, std::nullopt, SubsumeSyntactic{}}),
                 RuleViolation);
    k.apply(s, Step{Rule::Subsume, {1, 2}, {}, std::nullopt, std::nullopt, SubsumeSyntactic{}});
    EXPECT_TRUE(s.has(1));
    EXPECT_FALSE(s.has(2));
    EXPECT_EQ(s.counters().subsume_steps, 1u);
}

TEST_F(KernelTest, EmptyTraceIsNeverAccepted) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 1\n");
    const Verdict v = replay_trace(inst, Trace{instance_digest(inst), {}}, theory);
    EXPECT_FALSE(v.accepted);
    EXPECT_FALSE(v.failed_step.has_value());
}

TEST_F(KernelTest, DigestMismatchThrows) {
    const ImtInstance inst = parse_native("[vars]\nx int 0 1\n");
    EXPECT_THROW(replay_trace(inst, Trace{"0123456789abcdef", {}}, theory), DigestMismatch);
}

TEST_F(KernelTest, ReplayReportsFailingStep) {
    const ImtInstance inst = parse_native("[vars]\nx int\n[constraints]\nx >= 1\nx <= 0\n");
    Step bad{Rule::Drop, {0}, {}, std::nullopt, std::nullopt, Farkas{{c_row(0, Sense::Ge)}}};
    const Verdict v = replay_trace(inst, Trace{instance_digest(inst), {bad}}, theory);
    EXPECT_FALSE(v.accepted);
    ASSERT_TRUE(v.failed_step.has_value());
    EXPECT_EQ(*v.failed_step, 0u);
    EXPECT_NE(v.reason.find("Drop"), std::string::npos);
}

// Every certified split covers each integer point of the parent box exactly once.
TEST(BranchChildren, PartitionPropertyOnRandomSplits) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> var(0, 2), val(-3, 3), kind(0, 3), len(1, 3);
    const Bounds b = test::box(3, -3, 3);
    for (int round = 0; round < 150; ++round) {
        Certificate cert;
        const int k = kind(rng);
        if (k == 0) {
            cert = BranchDichotomy{VarId{static_cast<std::uint32_t>(var(rng))}, val(rng)};
        } else if (k == 1) {
            cert = BranchTrichotomy{VarId{0}, VarId{static_cast<std::uint32_t>(1 + var(rng) % 2)}, val(rng)};
        } else {
            std::vector<TheoryLiteral> core;
            const int n = len(rng);
            for (int i = 0; i < n; ++i) {
                const std::uint32_t a = var(rng);
                const std::uint32_t c = (a + 1 + var(rng) % 2) % 3;
                switch (kind(rng)) {
                    case 0: core.push_back(TheoryLiteral::eq(VarId{a}, VarId{c}, val(rng) % 2)); break;
                    case 1: core.push_back(TheoryLiteral::diseq(VarId{a}, VarId{c}, val(rng) % 2)); break;
                    case 2: core.push_back(TheoryLiteral::atom_true(VarId{a})); break;
                    default: core.push_back(TheoryLiteral::atom_false(VarId{a})); break;
                }
            }
            cert = BranchConflictSplit{core};
        }
        const auto children = branch_children(cert);
        ASSERT_GE(children.size(), 2u);
        test::for_each_point(b, [&](const Assignment& a) {
            int hits = 0;
            for (const auto& child : children) {
                hits += satisfies(std::span<const LinConstraint>(child), a) ? 1 : 0;
            }
            ASSERT_EQ(hits, 1);
        });
    }
}

}  // namespace
}  // namespace imt
