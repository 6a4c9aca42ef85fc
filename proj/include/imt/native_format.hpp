// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Line-oriented .imt format. See docs/native-format.md for the grammar.

#include <stdexcept>
#include <string>
#include <string_view>

#include "imt/model.hpp"

namespace imt {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& kind, std::size_t line, std::size_t col, const std::string& msg)
        : std::runtime_error(kind + " at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}

    std::size_t line() const { return line_; }
    std::size_t col() const { return col_; }

private:
    std::size_t line_;
    std::size_t col_;
};

class SyntaxError : public ParseError {
public:
    SyntaxError(std::size_t line, std::size_t col, const std::string& msg) : ParseError("syntax error", line, col, msg) {}
};

class SortError : public ParseError {
public:
    SortError(std::size_t line, std::size_t col, const std::string& msg) : ParseError("sort error", line, col, msg) {}
};

/// A function symbol occurs inside a linear constraint.
class SeparationError : public ParseError {
public:
    SeparationError(std::size_t line, std::size_t col, const std::string& msg)
        : ParseError("separation error", line, col, msg) {}
};

ImtInstance parse_native(std::string_view text);
/// `s` as written in the format: bare when it is a plain name, |s| otherwise.
std::string quote_name(const std::string& s);
VarNames quoted_names(const ImtInstance& inst);
/// One constraint line over the variables of `inst`.
LinConstraint parse_linear_constraint(std::string_view text, const ImtInstance& inst);
/// Canonical rendering; parse_native(print_native(i)) reproduces i.
std::string print_native(const ImtInstance& inst);
/// Stable hash of the canonical rendering, as 16 hex digits.
std::string instance_digest(const ImtInstance& inst);

}  // namespace imt
