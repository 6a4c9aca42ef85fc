// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Trace files: JSON lines. The first line is a header
//   {"format":"imt-trace","version":1,"digest":"<16 hex>","default_bound":"N"|null}
// and every following line is one step. Constraints are written in the native
// constraint syntax over the instance's variable names; integers and rationals are
// strings ("-3", "7/2") so nothing is lost to floating point.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "imt/certificate.hpp"
#include "imt/model.hpp"

namespace imt {

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& msg)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct TraceFile {
    Trace trace;
    /// Default bound the solver applied before recording, if any.
    std::optional<Int> default_bound;
};

std::string write_step(const Step& step, const ImtInstance& inst);
Step read_step(std::string_view line, const ImtInstance& inst);

std::string write_trace(const TraceFile& file, const ImtInstance& inst);
/// `inst` supplies variable names. The header is read first, so the default bound can be
/// applied to the instance before the steps are decoded (see read_trace_header).
TraceFile read_trace(std::string_view text, const ImtInstance& inst);
TraceFile read_trace_header(std::string_view text);

}  // namespace imt
