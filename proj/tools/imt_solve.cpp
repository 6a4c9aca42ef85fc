// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/cli.hpp"

int main(int argc, char** argv) { return imt::run_cli(argc, argv); }
