// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exhaustive reference solver: every integer point of a finite box, checked with
// satisfies() and functional_consistency(). Used to cross-check the engine.

#include <stdexcept>

#include "imt/engine.hpp"
#include "imt/model.hpp"

namespace imt {

class BoxTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleOptions {
    /// Largest box volume accepted.
    Int volume_cap = 10'000'000;
};

/// Product of the interval widths; throws BoxTooLarge when some interval is infinite.
Int box_volume(const Bounds& box);

/// Minimises the objective over the integer points of `box` that respect the instance
/// bounds, C and I. Ties go to the lexicographically smallest assignment. The result is
/// Optimal or Infeasible; trace and stats are left empty.
SolveResult brute_force_solve(const ImtInstance& inst, const Bounds& box, const OracleOptions& options = {});

/// The instance's own bounds as the box.
SolveResult brute_force_solve(const ImtInstance& inst, const OracleOptions& options = {});

}  // namespace imt
