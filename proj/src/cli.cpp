// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "imt/engine.hpp"
#include "imt/euf.hpp"
#include "imt/generator.hpp"
#include "imt/native_format.hpp"
#include "imt/oracle.hpp"
#include "imt/smtlib.hpp"
#include "imt/trace_io.hpp"

namespace imt {
namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CliError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw CliError("cannot write '" + path + "'");
    }
}

std::optional<Int> parse_bound(const std::string& text, const char* flag) {
    if (text.empty()) {
        return std::nullopt;
    }
    try {
        Int n = parse_int(text);
        if (n < 0) {
            throw CliError(std::string(flag) + " must be non-negative");
        }
        return n;
    } catch (const std::invalid_argument&) {
        throw CliError(std::string(flag) + ": not an integer: '" + text + "'");
    }
}

/// The instance as loaded, plus what is needed to print results in source terms.
struct Loaded {
    ImtInstance instance;
    std::optional<EncodedProblem> smt;
    bool get_model = false;
};

Loaded load(const std::string& path, std::string format, const std::optional<Int>& default_bound) {
    if (format.empty()) {
        const auto ext = std::filesystem::path(path).extension().string();
        if (ext == ".imt") {
            format = "native";
        } else if (ext == ".smt2" || ext == ".smt") {
            format = "smt";
        } else {
            throw CliError("cannot infer the format of '" + path + "'; use --format native|smt");
        }
    }
    const std::string text = read_file(path);
    Loaded l;
    if (format == "native") {
        l.instance = parse_native(text);
    } else {
        const SmtProblem p = parse_smtlib(text);
        l.smt = encode_problem(p, default_bound);
        l.instance = l.smt->instance;
        l.get_model = p.get_model;
    }
    return l;
}

int exit_code(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return kExitOk;
        case SolveStatus::Infeasible: return kExitInfeasible;
        case SolveStatus::Unbounded: return kExitUnbounded;
        case SolveStatus::BudgetExceeded: return kExitBudget;
    }
    return kExitError;
}

bool feasibility_mode(const Loaded& l) { return l.smt ? !l.smt->has_objective : l.instance.objective().empty(); }

void print_result(const Loaded& l, const SolveResult& r, std::ostream& out) {
    if (r.status != SolveStatus::Optimal) {
        out << to_string(r.status) << "\n";
        return;
    }
    if (feasibility_mode(l)) {
        out << "sat\n";
    } else {
        out << "optimal " << to_string(l.smt ? l.smt->report(*r.value) : *r.value) << "\n";
    }
    if (l.smt && feasibility_mode(l) && !l.get_model) {
        return;
    }
    const Assignment& m = *r.model;
    if (l.smt) {
        for (const auto& [name, sort] : l.smt->outputs) {
            const Int& v = m[l.instance.var(name)];
            out << "(" << quote_name(name) << " " << (sort == SmtSort::Bool ? (v > 0 ? "true" : "false") : to_string(v))
                << ")\n";
        }
        return;
    }
    for (std::uint32_t i = 0; i < l.instance.num_vars(); ++i) {
        if (!l.instance.vars()[i].auxiliary) {
            out << "(" << quote_name(l.instance.names()[i]) << " " << to_string(m.values()[i]) << ")\n";
        }
    }
}

void print_stats(const SolveResult& r, std::ostream& err) {
    const auto& s = r.stats;
    err << "nodes " << s.nodes << ", branches " << s.branches << ", cuts " << s.cuts << ", theory conflicts "
        << s.theory_conflicts << ", propagations " << s.propagations << ", lp solves " << s.lp_solves << ", pivots "
        << s.pivots << ", steps " << r.counters.steps << "\n";
}

/// Cross-check against exhaustive enumeration; returns false on disagreement.
bool oracle_check(const ImtInstance& bounded, const SolveResult& r, std::ostream& err) {
    if (r.status == SolveStatus::BudgetExceeded) {
        err << "oracle check skipped: the search did not finish\n";
        return true;
    }
    SolveResult o;
    try {
        o = brute_force_solve(bounded);
    } catch (const BoxTooLarge& e) {
        err << "oracle check skipped: " << e.what() << "\n";
        return true;
    }
    if (o.status != r.status || o.value != r.value) {
        err << "oracle mismatch: solver says " << to_string(r.status) << (r.value ? " " + to_string(*r.value) : "")
            << ", enumeration says " << to_string(o.status) << (o.value ? " " + to_string(*o.value) : "") << "\n";
        return false;
    }
    err << "oracle check passed\n";
    return true;
}

int replay(const Loaded& l, const std::string& trace_path, const std::optional<Int>& cli_bound, std::ostream& out,
           std::ostream& err) {
    const std::string text = read_file(trace_path);
    TraceFile header = read_trace_header(text);
    if (cli_bound && header.default_bound && *cli_bound != *header.default_bound) {
        throw CliError("--default-bound differs from the bound recorded in the trace");
    }
    const auto bound = header.default_bound ? header.default_bound : cli_bound;
    const ImtInstance bounded = apply_default_bound(l.instance, bound);
    const TraceFile file = read_trace(text, bounded);
    const EufTheory theory;
    const Verdict v = replay_trace(bounded, file.trace, theory);
    if (v.accepted) {
        out << "trace accepted\n";
        err << file.trace.steps.size() << " steps replayed\n";
        return kExitOk;
    }
    out << "trace rejected";
    if (v.failed_step) {
        out << " at step " << *v.failed_step;
    }
    out << ": " << v.reason << "\n";
    return kExitError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ILP modulo theories solver", "imt-solve"};
    std::string input, format, default_bound_text, trace_path, replay_path;
    bool check = false;
    std::optional<std::uint64_t> node_budget;
    std::size_t cut_cap = Config{}.cut_cap_per_node;
    std::optional<std::uint64_t> seed;
    app.add_option("input", input, "instance file (.imt native, .smt2 SMT-LIB)");
    app.add_option("--format", format, "input format")->check(CLI::IsMember({"native", "smt"}));
    app.add_option("--default-bound", default_bound_text, "bound [-N, N] for variables without one");
    app.add_option("--trace", trace_path, "write the proof trace to this file");
    app.add_option("--replay", replay_path, "check a trace against the instance instead of solving");
    app.add_flag("--oracle-check", check, "cross-check the result by enumeration when the box is small");
    app.add_option("--node-budget", node_budget, "give up after this many subproblems");
    app.add_option("--cut-cap", cut_cap, "Gomory cuts per round at one node");
    app.add_option("--seed", seed, "solve a random instance generated from this seed (no input file)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        const auto default_bound = parse_bound(default_bound_text, "--default-bound");
        Loaded loaded;
        if (!input.empty()) {
            loaded = load(input, format, default_bound);
        } else if (seed) {
            std::mt19937_64 rng(*seed);
            loaded.instance = random_instance(rng);
            err << print_native(loaded.instance);
        } else {
            throw CliError("no input file (see --help)");
        }

        if (!replay_path.empty()) {
            return replay(loaded, replay_path, default_bound, out, err);
        }

        Config cfg;
        cfg.default_bound = default_bound;
        cfg.node_budget = node_budget;
        cfg.cut_cap_per_node = cut_cap;
        const SolveResult r = solve(loaded.instance, cfg);
        print_result(loaded, r, out);
        print_stats(r, err);
        const ImtInstance bounded = apply_default_bound(loaded.instance, default_bound);
        if (!trace_path.empty() && r.trace) {
            write_file(trace_path, write_trace(TraceFile{*r.trace, default_bound}, bounded));
        }
        if (check && !oracle_check(bounded, r, err)) {
            return kExitError;
        }
        return exit_code(r.status);
    } catch (const UnboundedVarsWithTheory& e) {
        err << "error: " << e.what() << " (give bounds or --default-bound)\n";
    } catch (const UnboundedForEncoding& e) {
        err << "error: " << e.what() << " (give bounds or --default-bound)\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitError;
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace imt
