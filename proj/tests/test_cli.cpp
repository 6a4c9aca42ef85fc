// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "imt/cli.hpp"
#include "imt/euf.hpp"
#include "imt/native_format.hpp"

namespace imt {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return Outcome{code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(IMT_DATA_DIR) + "/" + name; }

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("imt-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path file(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

// (name value) lines into an assignment over `inst`.
Assignment read_model(const std::string& out, const ImtInstance& inst) {
    std::vector<Int> values(inst.num_vars());
    std::vector<bool> seen(inst.num_vars());
    const std::regex line(R"(\((\S+) (-?\d+)\))");
    for (std::sregex_iterator it(out.begin(), out.end(), line), end; it != end; ++it) {
        const VarId v = inst.var((*it)[1].str());
        values[v.index] = Int((*it)[2].str());
        seen[v.index] = true;
    }
    for (bool s : seen) {
        EXPECT_TRUE(s);
    }
    return Assignment(values);
}

TEST_F(Cli, Infeasible) {
    const Outcome r = run({data("inf.imt")});
    EXPECT_EQ(r.code, kExitInfeasible);
    EXPECT_EQ(r.out, "infeasible\n");
}

TEST_F(Cli, OptimalWithModel) {
    const Outcome r = run({data("opt.imt")});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, "optimal 4\n(x 0)\n(y 4)\n");
    EXPECT_NE(r.err.find("nodes"), std::string::npos);
}

TEST_F(Cli, SmtSeparateFormExample) {
    const Outcome r = run({"--format", "smt", data("ex31.smt2"), "--oracle-check"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(first_line(r.out), "sat");
    EXPECT_NE(r.out.find("(x "), std::string::npos);
    EXPECT_NE(r.out.find("(y "), std::string::npos);
    EXPECT_NE(r.err.find("oracle check passed"), std::string::npos);
}

TEST_F(Cli, NativeSeparateFormModelIsTheoryConsistent) {
    const Outcome r = run({data("ex31.imt")});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_EQ(first_line(r.out), "sat");
    const ImtInstance inst = parse_native(slurp(data("ex31.imt")));
    const Assignment a = read_model(r.out, inst);
    EXPECT_TRUE(satisfies(std::span<const LinConstraint>(inst.constraints()), a));
    EXPECT_FALSE(functional_consistency(inst, a).has_value());
}

TEST_F(Cli, TraceThenReplay) {
    const fs::path trace = dir_ / "out.trace";
    const Outcome solve = run({data("opt.imt"), "--trace", trace.string()});
    ASSERT_EQ(solve.code, kExitOk);
    ASSERT_TRUE(fs::exists(trace));
    const Outcome replay = run({"--replay", trace.string(), data("opt.imt")});
    EXPECT_EQ(replay.code, kExitOk) << replay.err;
    EXPECT_EQ(replay.out, "trace accepted\n");

    // a trace for another instance is refused outright
    const Outcome other = run({"--replay", trace.string(), data("inf.imt")});
    EXPECT_EQ(other.code, kExitError);
    EXPECT_NE(other.err.find("error:"), std::string::npos);
}

TEST_F(Cli, TamperedTraceIsRejected) {
    const fs::path trace = dir_ / "out.trace";
    ASSERT_EQ(run({data("opt.imt"), "--trace", trace.string()}).code, kExitOk);
    std::string text = slurp(trace);
    // claim a better lower bound than the dual proves
    const std::regex bound(R"re("bound":"(-?\d+)")re");
    std::smatch m;
    ASSERT_TRUE(std::regex_search(text, m, bound));
    const long claimed = std::stol(m[1].str()) + 1;
    text.replace(static_cast<std::size_t>(m.position(1)), static_cast<std::size_t>(m.length(1)), std::to_string(claimed));
    std::ofstream(trace) << text;
    const Outcome replay = run({"--replay", trace.string(), data("opt.imt")});
    EXPECT_EQ(replay.code, kExitError);
    EXPECT_TRUE(replay.out.rfind("trace rejected at step ", 0) == 0) << replay.out;
}

TEST_F(Cli, ReplayUsesRecordedDefaultBound) {
    const fs::path in = file("free.imt", "[vars]\nx int\ny int\n[funs]\nf 1\n[atoms]\ny = f(x)\n[objective]\nmin x - y\n");
    const fs::path trace = dir_ / "t.trace";
    EXPECT_EQ(run({in.string()}).code, kExitError);
    const Outcome solve = run({in.string(), "--default-bound", "3", "--trace", trace.string()});
    ASSERT_EQ(solve.code, kExitOk) << solve.err;
    EXPECT_EQ(first_line(solve.out), "optimal -6");
    EXPECT_EQ(run({"--replay", trace.string(), in.string()}).out, "trace accepted\n");
    EXPECT_EQ(run({"--replay", trace.string(), in.string(), "--default-bound", "4"}).code, kExitError);
}

TEST_F(Cli, Unbounded) {
    const fs::path in = file("u.imt", "[vars]\nx int 0 inf\n[objective]\nmin -x\n");
    const Outcome r = run({in.string()});
    EXPECT_EQ(r.code, kExitUnbounded);
    EXPECT_EQ(first_line(r.out), "unbounded");
}

TEST_F(Cli, BudgetExhausted) {
    const fs::path in = file("k.imt",
                             "[vars]\nx int 0 20\ny int 0 20\nz int 0 20\n[objective]\nmin -x - y - z\n"
                             "[constraints]\n6*x + 10*y + 15*z <= 97\n2*x - 2*y <= 1\n");
    const Outcome r = run({in.string(), "--node-budget", "1", "--cut-cap", "0"});
    EXPECT_EQ(r.code, kExitBudget);
    EXPECT_EQ(first_line(r.out), "unknown");
}

TEST_F(Cli, SmtObjectivesAndBooleans) {
    const fs::path in = file("m.smt2",
                             "(declare-const x Int)(declare-const p Bool)(assert (<= 0 x 7))"
                             "(assert (=> p (<= x 3)))(assert p)(maximize (+ x 10))(check-sat)(get-model)");
    const Outcome r = run({in.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(r.out, "optimal 13\n(x 3)\n(p true)\n");
    const fs::path feas = file("f.smt2", "(declare-const x Int)(assert (>= x 2))(check-sat)");
    EXPECT_EQ(run({feas.string(), "--default-bound", "5"}).out, "sat\n");
    const fs::path unsat = file("n.smt2", "(declare-const b Bool)(assert (and b (not b)))(check-sat)");
    const Outcome u = run({unsat.string()});
    EXPECT_EQ(u.code, kExitInfeasible);
    EXPECT_EQ(u.out, "infeasible\n");
}

TEST_F(Cli, SeededInstancesAreDeterministic) {
    const Outcome a = run({"--seed", "11", "--oracle-check"});
    const Outcome b = run({"--seed", "11", "--oracle-check"});
    EXPECT_NE(a.code, kExitError) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.code, b.code);
    EXPECT_NE(a.err.find("[vars]"), std::string::npos);
}

TEST_F(Cli, Errors) {
    EXPECT_EQ(run({}).code, kExitError);
    EXPECT_EQ(run({(dir_ / "missing.imt").string()}).code, kExitError);
    const fs::path odd = file("x.txt", "[vars]\n");
    EXPECT_EQ(run({odd.string()}).code, kExitError);
    EXPECT_EQ(run({odd.string(), "--format", "native"}).code, kExitOk);
    EXPECT_EQ(run({odd.string(), "--format", "xml"}).code, kExitError);
    EXPECT_EQ(run({data("opt.imt"), "--no-such-flag"}).code, kExitError);
    const fs::path bad = file("bad.imt", "[vars]\nx int\n[constraints]\nx >=\n");
    const Outcome r = run({bad.string()});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("4:"), std::string::npos) << r.err;
    const fs::path unsupported = file("bad.smt2", "(push 1)");
    EXPECT_EQ(run({unsupported.string()}).code, kExitError);
}

}  // namespace
}  // namespace imt
