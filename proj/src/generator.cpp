// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/generator.hpp"

#include <algorithm>
#include <set>

namespace imt {
namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int nonzero(std::mt19937_64& rng, int mag) {
    const int k = uniform(rng, 1, mag);
    return chance(rng, 0.5) ? k : -k;
}

}  // namespace

ImtInstance random_instance(std::mt19937_64& rng, const RandomInstanceOptions& o) {
    ImtInstance inst;
    const int n = uniform(rng, 1, static_cast<int>(o.max_vars));
    std::vector<VarId> vars;
    for (int i = 0; i < n; ++i) {
        vars.push_back(inst.add_var("x" + std::to_string(i), o.lo, o.hi));
    }
    const int m = uniform(rng, 0, static_cast<int>(o.max_constraints));
    for (int i = 0; i < m; ++i) {
        std::vector<LinExpr::Term> terms;
        for (const VarId v : vars) {
            if (chance(rng, 0.6)) {
                terms.emplace_back(v, nonzero(rng, o.max_coeff));
            }
        }
        if (terms.empty()) {
            terms.emplace_back(vars[uniform(rng, 0, n - 1)], nonzero(rng, o.max_coeff));
        }
        static constexpr Relation kRels[] = {Relation::Le, Relation::Ge, Relation::Lt, Relation::Gt, Relation::Le,
                                             Relation::Ge, Relation::Eq};
        const Relation rel = kRels[uniform(rng, 0, 6)];
        inst.add_constraint(LinConstraint{LinExpr::from_terms(std::move(terms)), rel, uniform(rng, -o.max_rhs, o.max_rhs)});
    }
    const int funs = uniform(rng, 0, static_cast<int>(o.max_funs));
    for (int f = 0; f < funs; ++f) {
        const std::string name = std::string(1, static_cast<char>('f' + f));
        inst.declare_fun(name, 1);
        const int defs = uniform(rng, 1, 2);
        for (int d = 0; d < defs; ++d) {
            const VarId result = vars[uniform(rng, 0, n - 1)];
            const VarId arg = vars[uniform(rng, 0, n - 1)];
            inst.add_atom(InterfaceAtom{FunDef{result, name, {arg}}, std::nullopt});
        }
    }
    if (n >= 3 && chance(rng, 0.2)) {
        std::vector<VarId> pick = vars;
        std::shuffle(pick.begin(), pick.end(), rng);
        inst.bounds()[pick[2]] = Interval{0, 1};
        inst.add_atom(InterfaceAtom{EqAtom{pick[0], pick[1]}, pick[2]});
    }
    std::vector<LinExpr::Term> obj;
    for (const VarId v : vars) {
        obj.emplace_back(v, uniform(rng, -o.max_coeff, o.max_coeff));
    }
    inst.set_objective(LinExpr::from_terms(std::move(obj)));
    return inst;
}

Cnf random_3cnf(std::mt19937_64& rng, int max_vars) {
    Cnf cnf;
    cnf.num_vars = uniform(rng, 3, max_vars);
    // Around the 3-SAT threshold so both outcomes are common.
    const int lo = static_cast<int>(3.5 * cnf.num_vars);
    const int hi = static_cast<int>(5.0 * cnf.num_vars);
    const int m = uniform(rng, lo, hi);
    for (int i = 0; i < m; ++i) {
        std::set<int> chosen;
        while (chosen.size() < 3) {
            chosen.insert(uniform(rng, 1, cnf.num_vars));
        }
        std::vector<int> clause;
        for (int v : chosen) {
            clause.push_back(chance(rng, 0.5) ? v : -v);
        }
        cnf.clauses.push_back(std::move(clause));
    }
    return cnf;
}

std::string cnf_to_smtlib(const Cnf& cnf) {
    std::string out = "(set-logic QF_LIA)\n";
    for (int v = 1; v <= cnf.num_vars; ++v) {
        out += "(declare-fun b" + std::to_string(v) + " () Bool)\n";
    }
    for (const auto& c : cnf.clauses) {
        out += "(assert (or";
        for (int l : c) {
            out += l > 0 ? " b" + std::to_string(l) : " (not b" + std::to_string(-l) + ")";
        }
        out += "))\n";
    }
    out += "(check-sat)\n";
    return out;
}

ImtInstance fundraising_instance(const FundraisingSpec& spec) {
    ImtInstance inst;
    const std::set<int> officials(spec.officials.begin(), spec.officials.end());
    const std::set<int> spouses(spec.with_spouse.begin(), spec.with_spouse.end());
    std::vector<std::vector<VarId>> x(spec.guests);
    for (int g = 0; g < spec.guests; ++g) {
        for (int t = 0; t < spec.tables; ++t) {
            x[g].push_back(inst.add_var("x_" + std::to_string(g) + "_" + std::to_string(t), Int(0), Int(1)));
        }
    }
    std::vector<std::pair<int, VarId>> y;
    for (int g = 0; g < spec.guests; ++g) {
        if (!officials.count(g)) {
            y.emplace_back(g, inst.add_var("y_" + std::to_string(g), Int(0), Int(1)));
        }
    }
    for (int g = 0; g < spec.guests; ++g) {
        LinExpr once;
        for (int t = 0; t < spec.tables; ++t) {
            once.add(x[g][t], 1);
        }
        inst.add_constraint(LinConstraint{std::move(once), Relation::Eq, 1});
    }
    for (int t = 0; t < spec.tables; ++t) {
        LinExpr load;
        for (int g = 0; g < spec.guests; ++g) {
            load.add(x[g][t], spouses.count(g) ? 2 : 1);
        }
        inst.add_constraint(LinConstraint{std::move(load), Relation::Le, spec.seats});
    }
    for (const auto& [a, b] : spec.separated) {
        for (int t = 0; t < spec.tables; ++t) {
            LinExpr both = LinExpr::of(x[a][t]);
            both.add(x[b][t], 1);
            inst.add_constraint(LinConstraint{std::move(both), Relation::Le, 1});
        }
    }
    // y_s <= 1 - x_s_t + sum_o x_o_t for every table t
    for (const auto& [s, ys] : y) {
        for (int t = 0; t < spec.tables; ++t) {
            LinExpr e = LinExpr::of(ys);
            e.add(x[s][t], 1);
            for (int o : spec.officials) {
                e.add(x[o][t], -1);
            }
            inst.add_constraint(LinConstraint{std::move(e), Relation::Le, 1});
        }
    }
    if (!spec.officials.empty()) {
        inst.bounds()[x[spec.officials[0]][0]].lo = Int(1);
        if (spec.officials.size() > 1 && spec.tables > 2) {
            inst.bounds()[x[spec.officials[1]][spec.tables - 1]].hi = Int(0);
        }
    }
    LinExpr obj;
    for (const auto& [s, ys] : y) {
        obj.add(ys, -1);
    }
    inst.set_objective(std::move(obj));
    return inst;
}

}  // namespace imt
