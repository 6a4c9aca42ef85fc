// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/certificate.hpp"

#include <array>

namespace imt {

namespace {

constexpr std::array<std::pair<Rule, std::string_view>, 10> kRuleNames{{
    {Rule::Branch, "Branch"},
    {Rule::Learn, "Learn"},
    {Rule::Forget, "Forget"},
    {Rule::Propagate, "Propagate"},
    {Rule::Drop, "Drop"},
    {Rule::Prune, "Prune"},
    {Rule::Retire, "Retire"},
    {Rule::Unbounded, "Unbounded"},
    {Rule::TLearn, "TLearn"},
    {Rule::Subsume, "Subsume"},
}};

std::string offset_suffix(const Int& c) {
    if (c == 0) {
        return "";
    }
    return c > 0 ? " + " + to_string(c) : " - " + to_string(Int(-c));
}

}  // namespace

std::string_view to_string(Rule r) {
    for (const auto& [rule, name] : kRuleNames) {
        if (rule == r) {
            return name;
        }
    }
    return "?";
}

std::optional<Rule> parse_rule(std::string_view text) {
    for (const auto& [rule, name] : kRuleNames) {
        if (name == text) {
            return rule;
        }
    }
    return std::nullopt;
}

std::string format_literal(const TheoryLiteral& l, const VarNames& names) {
    const auto nm = [&](VarId v) { return v.index < names.size() ? names[v.index] : "#" + std::to_string(v.index); };
    switch (l.kind) {
    case TheoryLiteral::Kind::VarEq: return nm(l.x) + " = " + nm(l.y) + offset_suffix(l.offset);
    case TheoryLiteral::Kind::VarDiseq: return nm(l.x) + " != " + nm(l.y) + offset_suffix(l.offset);
    case TheoryLiteral::Kind::AtomTrue: return "atom(" + nm(l.x) + ")";
    case TheoryLiteral::Kind::AtomFalse: return "!atom(" + nm(l.x) + ")";
    }
    return "?";
}

}  // namespace imt
