// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>
#include <random>

#include "imt/engine.hpp"
#include "imt/generator.hpp"
#include "imt/native_format.hpp"
#include "imt/trace_io.hpp"
#include "mutate.hpp"

namespace imt {
namespace {

const char* const kEx31 =
    "[vars]\nx int 0 5\ny int 0 5\nv1 int 0 5\nv2 int 0 5\nv3 int 0 5\nv4 int 0 5\n[funs]\nf 1\n"
    "[constraints]\nv3 + v4 >= 3\nv1 - x = 1\nv2 - y = 2\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n";

TEST(TraceIo, RoundTripOnEngineTraces) {
    std::mt19937_64 rng(12);
    const EufTheory th;
    for (int round = 0; round < 60; ++round) {
        const ImtInstance inst = random_instance(rng);
        const SolveResult r = solve(inst);
        ASSERT_TRUE(r.trace.has_value());
        const std::string text = write_trace(TraceFile{*r.trace, std::nullopt}, inst);
        const TraceFile back = read_trace(text, inst);
        EXPECT_FALSE(back.default_bound.has_value());
        EXPECT_EQ(back.trace.instance_digest, r.trace->instance_digest);
        ASSERT_EQ(back.trace.steps.size(), r.trace->steps.size());
        for (std::size_t i = 0; i < back.trace.steps.size(); ++i) {
            EXPECT_EQ(write_step(back.trace.steps[i], inst), write_step(r.trace->steps[i], inst));
        }
        EXPECT_EQ(write_trace(back, inst), text);
        EXPECT_TRUE(replay_trace(inst, back.trace, th).accepted);
    }
}

TEST(TraceIo, DefaultBoundInHeader) {
    const ImtInstance raw = parse_native("[vars]\nx int\ny int\n[funs]\nf 1\n[atoms]\ny = f(x)\n");
    Config cfg;
    cfg.default_bound = 2;
    const SolveResult r = solve(raw, cfg);
    const ImtInstance bounded = apply_default_bound(raw, cfg.default_bound);
    const std::string text = write_trace(TraceFile{*r.trace, cfg.default_bound}, bounded);
    EXPECT_EQ(read_trace_header(text).default_bound, Int(2));
    const TraceFile back = read_trace(text, bounded);
    EXPECT_TRUE(replay_trace(bounded, back.trace, EufTheory{}).accepted);
    EXPECT_THROW(replay_trace(raw, back.trace, EufTheory{}), DigestMismatch);
}

TEST(TraceIo, TheoryStepsSurvive) {
    const ImtInstance inst = parse_native(
        "[vars]\nv1 int 0 3\nv2 int 0 3\nv3 int 0 3\nv4 int 0 3\ne int 0 1\n[funs]\nf 1\n"
        "[constraints]\nv3 - v4 >= 1\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n(v1 = v2) @ e\n");
    const SolveResult r = solve(inst);
    ASSERT_GE(r.stats.theory_conflicts, 1u);
    const TraceFile back = read_trace(write_trace(TraceFile{*r.trace, std::nullopt}, inst), inst);
    std::map<Rule, int> rules;
    for (const auto& s : back.trace.steps) {
        ++rules[s.rule];
    }
    EXPECT_GT(rules[Rule::TLearn], 0);
    EXPECT_TRUE(replay_trace(inst, back.trace, EufTheory{}).accepted);
}

TEST(TraceIo, MalformedInput) {
    const ImtInstance inst = parse_native(kEx31);
    const std::string digest = instance_digest(inst);
    const std::string header =
        R"({"format":"imt-trace","version":1,"digest":")" + digest + R"(","default_bound":null})";
    EXPECT_THROW(read_trace("", inst), TraceFormatError);
    EXPECT_THROW(read_trace("not json\n", inst), TraceFormatError);
    EXPECT_THROW(read_trace(R"({"format":"other","version":1,"digest":"x","default_bound":null})", inst),
                 TraceFormatError);
    EXPECT_THROW(read_trace(R"({"format":"imt-trace","version":9,"digest":"x","default_bound":null})", inst),
                 TraceFormatError);
    EXPECT_THROW(read_trace(header + "\n{\"rule\":\"Jump\",\"targets\":[0],\"certificate\":{}}\n", inst),
                 TraceFormatError);
    EXPECT_THROW(read_trace(header + "\n{\"rule\":\"Drop\",\"targets\":[0]}\n", inst), TraceFormatError);
    try {
        read_trace(header + "\n{\"rule\":\"Retire\",\"targets\":[0],\"certificate\":{\"kind\":\"retire\","
                            "\"model\":{\"x\":\"1\"},\"lb\":{\"bound\":\"0\",\"terms\":[]},"
                            "\"token\":{\"theory\":\"euf\",\"digest\":\"0\"}}}\n",
                   inst);
        FAIL() << "expected a format error";
    } catch (const TraceFormatError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_EQ(read_trace(header + "\n", inst).trace.steps.size(), 0u);
}

// Every certificate mutation of every step in engine traces is refused by the kernel,
// both directly and after a trip through the trace format.
TEST(TraceIo, MutatedCertificatesAreRejected) {
    std::mt19937_64 rng(77);
    const EufTheory th;
    std::size_t mutations = 0;
    std::map<Rule, std::size_t> per_rule;
    std::vector<ImtInstance> instances;
    instances.push_back(parse_native(kEx31));
    instances.push_back(parse_native(
        "[vars]\nv1 int 0 3\nv2 int 0 3\nv3 int 0 3\nv4 int 0 3\ne int 0 1\n[funs]\nf 1\n"
        "[constraints]\nv3 - v4 >= 1\n[atoms]\nv3 = f(v1)\nv4 = f(v2)\n(v1 = v2) @ e\n"));
    instances.push_back(parse_native("[vars]\nx int 0 inf\ny int\n[objective]\nmin -x\n[constraints]\nx - y <= 2\n"));
    for (int i = 0; i < 40; ++i) {
        instances.push_back(random_instance(rng));
    }
    for (const auto& inst : instances) {
        const SolveResult r = solve(inst);
        const Kernel k(inst, th, engine_budgets(Config{}));
        KernelState state = k.start();
        for (const auto& step : r.trace->steps) {
            for (const auto& m : test::certificate_mutations(step)) {
                KernelState copy = state;
                try {
                    k.apply(copy, m.step);
                    ADD_FAILURE() << "accepted mutation: " << m.what << "\n" << write_step(m.step, inst);
                } catch (const RuleViolation& e) {
                    EXPECT_EQ(e.rule(), step.rule);
                    EXPECT_FALSE(e.reason().empty());
                }
                // the text form carries the mutation unchanged
                const Step reread = read_step(write_step(m.step, inst), inst);
                KernelState again = state;
                EXPECT_THROW(k.apply(again, reread), RuleViolation) << m.what;
                ++mutations;
                ++per_rule[step.rule];
            }
            k.apply(state, step);
        }
        EXPECT_TRUE(state.is_final());
    }
    EXPECT_GE(mutations, 50u);
    for (const Rule rule : {Rule::Branch, Rule::Learn, Rule::Drop, Rule::Prune, Rule::Retire, Rule::TLearn,
                            Rule::Unbounded, Rule::Propagate}) {
        EXPECT_GT(per_rule[rule], 0u) << to_string(rule);
    }
}

}  // namespace
}  // namespace imt
