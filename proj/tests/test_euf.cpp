// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "imt/euf.hpp"
#include "imt/native_format.hpp"
#include "support.hpp"

namespace imt {
namespace {

const char* const kEx31 =
    "[vars]\nx int 0 5\ny int 0 5\nv1 int 0 5\nv2 int 0 5\nv3 int 0 5\nv4 int 0 5\n[funs]\nf 1\n"
    "[constraints]\nv3 + v4 >= 3\nv1 - x = 1\nv2 - y = 2\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n";

bool holds(const TheoryLiteral& l, const Assignment& a) {
    switch (l.kind) {
        case TheoryLiteral::Kind::VarEq: return a[l.x] == a[l.y] + l.offset;
        case TheoryLiteral::Kind::VarDiseq: return a[l.x] != a[l.y] + l.offset;
        case TheoryLiteral::Kind::AtomTrue: return a[l.x] > 0;
        case TheoryLiteral::Kind::AtomFalse: return a[l.x] <= 0;
    }
    return false;
}

bool contains(const std::vector<TheoryLiteral>& ls, const TheoryLiteral& l) {
    return std::find(ls.begin(), ls.end(), l) != ls.end();
}

// Reads every pairwise literal of a full assignment into a fresh session.
TheoryCheck check_pattern(const ImtInstance& inst, const Assignment& a) {
    EufSession s(inst);
    std::vector<VarId> all;
    for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
        all.push_back(VarId{i});
    }
    for (const auto& l : arrangement(all, a)) {
        s.assert_literal(l);
    }
    return s.check();
}

class Ex31 : public ::testing::Test {
protected:
    ImtInstance inst = parse_native(kEx31);
    VarId x = inst.var("x"), y = inst.var("y"), v1 = inst.var("v1"), v2 = inst.var("v2"), v3 = inst.var("v3"),
          v4 = inst.var("v4");
};

TEST_F(Ex31, AssertConflictCore) {
    EufSession s(inst);
    EXPECT_TRUE(s.assert_literal(TheoryLiteral::eq(v1, v2)).sat);
    const TheoryCheck r = s.assert_literal(TheoryLiteral::diseq(v3, v4));
    ASSERT_FALSE(r.sat);
    for (const auto& l : r.core) {
        EXPECT_TRUE(l == TheoryLiteral::eq(v1, v2) || l == TheoryLiteral::diseq(v3, v4));
    }
    EXPECT_EQ(r.core.size(), 2u);
    // the session stays inconsistent
    EXPECT_FALSE(s.check().sat);
    EXPECT_THROW(s.implied_equalities(), InconsistentSession);
}

TEST_F(Ex31, ModelPatterns) {
    const Assignment a_prime({2, 1, 3, 3, 3, 3});
    const Assignment a({2, 1, 3, 3, 3, 0});
    EXPECT_TRUE(check_pattern(inst, a_prime).sat);
    EXPECT_FALSE(check_pattern(inst, a).sat);
    EXPECT_FALSE(functional_consistency(inst, a_prime).has_value());
    const auto v = functional_consistency(inst, a);
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(std::min(v->first, v->second), 0u);
    EXPECT_EQ(std::max(v->first, v->second), 1u);
}

TEST_F(Ex31, ImpliedEqualitiesByCongruence) {
    EufSession s(inst);
    s.assert_literal(TheoryLiteral::eq(v1, v2));
    const auto eqs = s.implied_equalities();
    EXPECT_TRUE(contains(eqs, TheoryLiteral::eq(v3, v4)) || contains(eqs, TheoryLiteral::eq(v4, v3)));
    // confirmed on every consistent point of a small box
    test::for_each_point(test::box(6, 0, 2), [&](const Assignment& a) {
        if (a[v1] == a[v2] && !functional_consistency(inst, a)) {
            EXPECT_EQ(a[v3], a[v4]);
        }
    });
    (void)x;
    (void)y;
}

TEST(EufSession, OffsetsRedundantAndClashing) {
    const ImtInstance inst = parse_native("[vars]\nx int\ny int\nz int\n");
    const VarId x{0}, y{1}, z{2};
    EufSession s(inst);
    EXPECT_TRUE(s.assert_literal(TheoryLiteral::eq(x, y, 1)).sat);
    EXPECT_TRUE(s.assert_literal(TheoryLiteral::eq(y, x, -1)).sat);
    EXPECT_EQ(s.equal_offset(x, y), Int(1));
    const TheoryCheck r = s.assert_literal(TheoryLiteral::eq(x, y, 2));
    ASSERT_FALSE(r.sat);
    EXPECT_TRUE(contains(r.core, TheoryLiteral::eq(x, y, 2)));
    EXPECT_LE(r.core.size(), 2u);
    (void)z;
}

TEST(EufSession, EmptyAndTransitivity) {
    const ImtInstance empty = parse_native("[vars]\n");
    EufSession e(empty);
    EXPECT_TRUE(e.check().sat);
    EXPECT_TRUE(e.implied_equalities().empty());

    const ImtInstance inst = parse_native("[vars]\nx int\ny int\nz int\n");
    const VarId x{0}, y{1}, z{2};
    EufSession s(inst);
    s.assert_literal(TheoryLiteral::eq(x, z));
    s.assert_literal(TheoryLiteral::eq(z, y));
    const auto eqs = s.implied_equalities();
    EXPECT_TRUE(contains(eqs, TheoryLiteral::eq(x, y)) || contains(eqs, TheoryLiteral::eq(y, x)));
}

TEST(EufSession, UnknownVariableRejected) {
    const ImtInstance inst = parse_native("[vars]\nx int\n");
    EufSession s(inst);
    EXPECT_THROW(s.assert_literal(TheoryLiteral::eq(VarId{0}, VarId{7})), UnknownVariable);
}

TEST(EufSession, AnnotatedAtomsFollowTheirAnnotation) {
    const ImtInstance inst = parse_native("[vars]\nx int\ny int\ne int 0 1\n[atoms]\n(x = y) @ e\n");
    const VarId x{0}, y{1}, e{2};
    {
        EufSession s(inst);
        s.assert_literal(TheoryLiteral::atom_true(e));
        EXPECT_EQ(s.equal_offset(x, y), Int(0));
        EXPECT_FALSE(s.assert_literal(TheoryLiteral::diseq(x, y)).sat);
    }
    {
        EufSession s(inst);
        s.assert_literal(TheoryLiteral::atom_false(e));
        EXPECT_FALSE(s.assert_literal(TheoryLiteral::eq(x, y)).sat);
    }
    EXPECT_FALSE(functional_consistency(inst, Assignment({1, 1, 1})).has_value());
    EXPECT_TRUE(functional_consistency(inst, Assignment({1, 1, 0})).has_value());
    EXPECT_FALSE(functional_consistency(inst, Assignment({1, 2, 0})).has_value());
}

TEST(EufSession, PushPopRestoresEntailments) {
    const ImtInstance inst = parse_native("[vars]\na int\nb int\nc int\nd int\n[funs]\nf 1\n[atoms]\nc = f(a)\nd = f(b)\n");
    const VarId a{0}, b{1}, c{2}, d{3};
    EufSession s(inst);
    s.assert_literal(TheoryLiteral::eq(c, a, 1));
    const auto before = s.implied_equalities();
    s.push();
    s.assert_literal(TheoryLiteral::eq(a, b));
    EXPECT_EQ(s.equal_offset(c, d), Int(0));
    s.assert_literal(TheoryLiteral::diseq(c, d));
    EXPECT_FALSE(s.check().sat);
    s.pop();
    EXPECT_TRUE(s.check().sat);
    EXPECT_EQ(s.implied_equalities(), before);
    EXPECT_FALSE(s.equal_offset(c, d).has_value());
}

TEST(FunctionalConsistency, VacuousAndMissing) {
    const ImtInstance inst = parse_native("[vars]\nx int\n");
    EXPECT_FALSE(functional_consistency(inst, Assignment({42})).has_value());
    const ImtInstance with_fun = parse_native("[vars]\nx int\ny int\n[funs]\nf 1\n[atoms]\ny = f(x)\n");
    EXPECT_THROW(functional_consistency(with_fun, Assignment({1})), MissingVariable);
}

TEST(Arrangement, OneLiteralPerPair) {
    const std::vector<VarId> vs{VarId{0}, VarId{1}, VarId{2}};
    const auto lits = arrangement(vs, Assignment({1, 1, 2}));
    ASSERT_EQ(lits.size(), 3u);
    for (const auto& l : lits) {
        EXPECT_TRUE(holds(l, Assignment({1, 1, 2})));
    }
}

TEST(EufTheory, TokensBindTheirContent) {
    const ImtInstance inst = parse_native(kEx31);
    const EufTheory th;
    const Assignment a_prime({2, 1, 3, 3, 3, 3});
    const Assignment a({2, 1, 3, 3, 3, 0});
    const auto tok = th.certify_model(inst, a_prime);
    ASSERT_TRUE(tok.has_value());
    EXPECT_TRUE(th.endorse_model(inst, a_prime, *tok));
    EXPECT_FALSE(th.certify_model(inst, a).has_value());
    EXPECT_FALSE(th.endorse_model(inst, a, EufTheory::model_token(a)));

    const std::vector<TheoryLiteral> core{TheoryLiteral::eq(inst.var("v1"), inst.var("v2")),
                                          TheoryLiteral::diseq(inst.var("v3"), inst.var("v4"))};
    const LinConstraint bottom = normalize(LinConstraint::contradiction());
    const auto lemma = th.certify_lemma(inst, core, bottom);
    ASSERT_TRUE(lemma.has_value());
    EXPECT_TRUE(th.endorse_lemma(inst, core, bottom, *lemma));
    EXPECT_FALSE(th.certify_lemma(inst, std::span(core).first(1), bottom).has_value());
}

// check() agrees with the existence of a consistent point in a box wide enough for the
// offsets used; cores re-check as conflicts on their own.
TEST(EufSession, AgreesWithEnumeration) {
    std::mt19937_64 rng(3);
    const ImtInstance inst =
        parse_native("[vars]\na int\nb int\nc int\nd int\n[funs]\nf 1\n[atoms]\nc = f(a)\nd = f(b)\n");
    const Bounds b = test::box(4, 0, 7);
    std::uniform_int_distribution<int> var(0, 3), off(-1, 1), kind(0, 1), count(1, 4);
    int sat = 0, unsat = 0;
    for (int round = 0; round < 300; ++round) {
        std::vector<TheoryLiteral> lits;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            const VarId x{static_cast<std::uint32_t>(var(rng))};
            VarId y{static_cast<std::uint32_t>(var(rng))};
            if (x == y) {
                y = VarId{(x.index + 1) % 4};
            }
            const Int c = kind(rng) == 0 ? Int(0) : Int(off(rng));
            lits.push_back(kind(rng) == 0 ? TheoryLiteral::eq(x, y, c) : TheoryLiteral::diseq(x, y, c));
        }
        EufSession s(inst);
        for (const auto& l : lits) {
            s.assert_literal(l);
        }
        const TheoryCheck r = s.check();
        bool exists = false;
        test::for_each_point(b, [&](const Assignment& p) {
            if (exists) {
                return;
            }
            exists = std::all_of(lits.begin(), lits.end(), [&](const TheoryLiteral& l) { return holds(l, p); }) &&
                     !functional_consistency(inst, p).has_value();
        });
        ASSERT_EQ(r.sat, exists) << "round " << round;
        if (r.sat) {
            ++sat;
        } else {
            ++unsat;
            EufSession fresh(inst);
            for (const auto& l : r.core) {
                ASSERT_TRUE(contains(lits, l));
                fresh.assert_literal(l);
            }
            EXPECT_FALSE(fresh.check().sat);
        }
    }
    EXPECT_GT(sat, 0);
    EXPECT_GT(unsat, 0);
}

}  // namespace
}  // namespace imt
