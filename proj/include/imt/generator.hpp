// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded instance generators for testing and benchmarking.

#include <random>
#include <string>
#include <vector>

#include "imt/model.hpp"

namespace imt {

struct RandomInstanceOptions {
    std::size_t max_vars = 4;
    Int lo = -5;
    Int hi = 5;
    std::size_t max_constraints = 6;
    std::size_t max_funs = 2;
    int max_coeff = 3;
    int max_rhs = 8;
};

/// Small bounded instance: random linear constraints, up to max_funs unary functions
/// with a few definitions each, occasionally an annotated equality, random objective.
ImtInstance random_instance(std::mt19937_64& rng, const RandomInstanceOptions& options = {});

/// CNF in DIMACS convention: literal k > 0 is variable k, -k its negation.
struct Cnf {
    int num_vars = 0;
    std::vector<std::vector<int>> clauses;
};

Cnf random_3cnf(std::mt19937_64& rng, int max_vars = 12);
/// One Bool constant b1..bn per variable, one assert per clause, then check-sat.
std::string cnf_to_smtlib(const Cnf& cnf);

struct FundraisingSpec {
    int guests = 10;
    int tables = 3;
    int seats = 5;
    std::vector<int> officials{0, 1};
    std::vector<int> with_spouse{0, 3, 5};
    std::vector<std::pair<int, int>> separated{{2, 3}, {4, 5}, {6, 7}, {3, 8}};
};

/// Seating assignment: x_g_t in {0,1} puts guest g at table t, a guest with a spouse
/// takes two seats, separated guests never share a table, and y_s = 1 only when
/// supporter s sits with an official. Maximises the number of such supporters (as
/// minimising its negation). Guest 0 sits at table 0 and the second official avoids the
/// last table, which removes table relabelings without changing the optimum.
ImtInstance fundraising_instance(const FundraisingSpec& spec = {});

}  // namespace imt
