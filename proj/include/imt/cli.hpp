// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command-line driver behind imt-solve.
//
// Exit codes: 0 optimal or sat, 10 infeasible, 20 unbounded, 30 budget exhausted,
// 1 usage, input or verification error.

#include <iosfwd>
#include <string>
#include <vector>

namespace imt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 10;
inline constexpr int kExitUnbounded = 20;
inline constexpr int kExitBudget = 30;
inline constexpr int kExitError = 1;

/// `args` excludes the program name. Results go to `out`, statistics and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv);

}  // namespace imt
