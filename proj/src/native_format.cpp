// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/native_format.hpp"

#include <cctype>
#include <set>
#include <sstream>
#include <vector>

#include "imt/digest.hpp"

namespace imt {

namespace {

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || std::string_view("_.!$'?~%&^").find(c) != std::string_view::npos;
}

bool is_name_char(char c) { return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

bool is_plain_name(std::string_view s) {
    if (s.empty() || !is_name_start(s.front())) {
        return false;
    }
    for (char c : s) {
        if (!is_name_char(c)) {
            return false;
        }
    }
    return true;
}


class Cursor {
public:
    Cursor(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }
    bool at_end() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    bool accept(std::string_view tok) {
        skip_ws();
        if (s_.substr(pos_).starts_with(tok)) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(std::string_view tok) {
        if (!accept(tok)) {
            fail("expected '" + std::string(tok) + "'");
        }
    }
    bool at_name() {
        const char c = peek();
        return c == '|' || is_name_start(c);
    }
    std::string name() {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '|') {
            const auto end = s_.find('|', pos_ + 1);
            if (end == std::string_view::npos || end == pos_ + 1) {
                fail("unterminated or empty quoted name");
            }
            std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
            pos_ = end + 1;
            return out;
        }
        if (pos_ >= s_.size() || !is_name_start(s_[pos_])) {
            fail("expected a name");
        }
        const auto start = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_])) {
            ++pos_;
        }
        return std::string(s_.substr(start, pos_ - start));
    }
    bool at_digit() { return std::isdigit(static_cast<unsigned char>(peek())) != 0; }
    Int integer() {
        skip_ws();
        const auto start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            fail("expected an integer");
        }
        return parse_int(s_.substr(start, pos_ - start));
    }
    /// Bound literal: an optionally signed integer, or -inf / inf / +inf.
    std::optional<Int> bound(bool lower) {
        if (accept("-inf")) {
            if (!lower) {
                fail("upper bound cannot be -inf");
            }
            return std::nullopt;
        }
        if (accept("+inf") || accept("inf")) {
            if (lower) {
                fail("lower bound cannot be +inf");
            }
            return std::nullopt;
        }
        bool neg = false;
        if (accept("-")) {
            neg = true;
        } else {
            accept("+");
        }
        Int v = integer();
        return neg ? Int(-v) : v;
    }
    void finish() {
        if (!at_end()) {
            fail("unexpected trailing text");
        }
    }

    std::size_t line() const { return line_; }
    std::size_t col() const { return pos_ + 1; }
    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(line_, pos_ + 1, msg); }

private:
    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

struct Line {
    std::size_t number;
    std::string text;
};

class NativeParser {
public:
    NativeParser() = default;
    /// Reads expressions against an existing instance.
    explicit NativeParser(const ImtInstance& view) : view_(&view) {}

    LinConstraint constraint(std::string_view text) {
        Cursor c(text, 1);
        return constraint_body(c);
    }

    ImtInstance parse(std::string_view text) {
        split(text);
        for (const auto& l : sections_["vars"]) {
            parse_var(l);
        }
        for (const auto& l : sections_["funs"]) {
            parse_fun(l);
        }
        for (const auto& l : sections_["objective"]) {
            parse_objective(l);
        }
        for (const auto& l : sections_["constraints"]) {
            parse_constraint(l);
        }
        for (const auto& l : sections_["atoms"]) {
            parse_atom(l);
        }
        try {
            inst_.validate();
        } catch (const ModelError& e) {
            throw SortError(0, 0, e.what());
        }
        return std::move(inst_);
    }

private:
    void split(std::string_view text) {
        static const std::set<std::string> kSections{"vars", "funs", "objective", "constraints", "atoms"};
        std::string current;
        std::size_t number = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            std::string raw(text.substr(start, end - start));
            start = end + 1;
            ++number;
            if (auto hash = raw.find('#'); hash != std::string::npos) {
                raw.erase(hash);
            }
            const auto first = raw.find_first_not_of(" \t\r");
            if (first == std::string::npos) {
                continue;
            }
            const auto last = raw.find_last_not_of(" \t\r");
            std::string body = raw.substr(first, last - first + 1);
            if (body.front() == '[') {
                if (body.back() != ']' || !kSections.count(body.substr(1, body.size() - 2))) {
                    throw SyntaxError(number, first + 1, "unknown section header " + body);
                }
                current = body.substr(1, body.size() - 2);
                continue;
            }
            if (current.empty()) {
                throw SyntaxError(number, first + 1, "content before the first section header");
            }
            sections_[current].push_back(Line{number, raw});
        }
    }

    void parse_var(const Line& l) {
        Cursor c(l.text, l.number);
        const auto col = c.col();
        std::string name = c.name();
        const std::string sort = c.name();
        std::optional<Int> lo;
        std::optional<Int> hi;
        if (sort == "bool") {
            lo = 0;
            hi = 1;
        } else if (sort != "int") {
            throw SortError(l.number, col, "variable '" + name + "' has unsupported sort '" + sort + "'");
        }
        bool aux = c.accept("aux");
        if (sort == "int" && !aux && !c.at_end()) {
            lo = c.bound(true);
            hi = c.bound(false);
            aux = c.accept("aux");
        }
        c.finish();
        if (lo && hi && *lo > *hi) {
            throw SortError(l.number, col, "empty bounds for '" + name + "'");
        }
        if (inst_.find_var(name)) {
            throw SyntaxError(l.number, col, "duplicate variable '" + name + "'");
        }
        inst_.add_var(std::move(name), lo, hi, aux);
    }

    void parse_fun(const Line& l) {
        Cursor c(l.text, l.number);
        const auto col = c.col();
        std::string name = c.name();
        const Int ar = c.integer();
        c.finish();
        if (inst_.find_var(name)) {
            throw SeparationError(l.number, col, "'" + name + "' is both a variable and a function");
        }
        if (inst_.arity(name)) {
            throw SyntaxError(l.number, col, "duplicate function '" + name + "'");
        }
        inst_.declare_fun(name, ar.convert_to<std::size_t>());
    }

    VarId lookup(Cursor& c, const std::string& name, std::size_t col) {
        if (view_->arity(name)) {
            throw SeparationError(c.line(), col, "function symbol '" + name + "' used as a variable");
        }
        auto v = view_->find_var(name);
        if (!v) {
            throw SyntaxError(c.line(), col, "undeclared variable '" + name + "'");
        }
        return *v;
    }

    /// sum of [sign] (INT | INT*NAME | NAME) terms; returns the linear part and the constant.
    std::pair<LinExpr, Int> sum(Cursor& c) {
        LinExpr e;
        Int k = 0;
        bool first = true;
        while (true) {
            Int sign = 1;
            if (c.accept("+")) {
            } else if (c.accept("-")) {
                sign = -1;
            } else if (!first) {
                break;
            }
            first = false;
            if (c.at_digit()) {
                Int n = c.integer();
                if (c.accept("*")) {
                    const auto col = c.col();
                    const std::string name = c.name();
                    check_not_application(c, name, col);
                    e.add(lookup(c, name, col), sign * n);
                } else {
                    k += sign * n;
                }
            } else if (c.at_name()) {
                const auto col = c.col();
                const std::string name = c.name();
                check_not_application(c, name, col);
                e.add(lookup(c, name, col), sign);
            } else {
                c.fail("expected a term");
            }
        }
        return {std::move(e), std::move(k)};
    }

    void check_not_application(Cursor& c, const std::string& name, std::size_t col) {
        if (c.peek() == '(' || view_->arity(name)) {
            throw SeparationError(c.line(), col, "function application '" + name +
                                                     "' inside a linear expression; abstract it in [atoms]");
        }
    }

    Relation relation(Cursor& c) {
        for (auto [tok, rel] : {std::pair{"<=", Relation::Le}, {">=", Relation::Ge}, {"<", Relation::Lt},
                                {">", Relation::Gt}, {"=", Relation::Eq}}) {
            if (c.accept(tok)) {
                return rel;
            }
        }
        c.fail("expected a relation");
    }

    void parse_objective(const Line& l) {
        Cursor c(l.text, l.number);
        if (!c.accept("min")) {
            c.fail("objective must read 'min <expr>'");
        }
        if (objective_seen_) {
            c.fail("more than one objective");
        }
        objective_seen_ = true;
        auto [e, k] = sum(c);
        c.finish();
        if (k != 0) {
            c.fail("constant terms are not allowed in the objective");
        }
        inst_.set_objective(std::move(e));
    }

    LinConstraint constraint_body(Cursor& c) {
        auto [lhs, lk] = sum(c);
        const Relation rel = relation(c);
        auto [rhs, rk] = sum(c);
        c.finish();
        lhs -= rhs;
        return LinConstraint{std::move(lhs), rel, rk - lk};
    }

    void parse_constraint(const Line& l) {
        Cursor c(l.text, l.number);
        inst_.add_constraint(constraint_body(c));
    }

    InterfaceAtom atom_body(Cursor& c) {
        auto col = c.col();
        const std::string lhs = c.name();
        const VarId x = lookup(c, lhs, col);
        c.expect("=");
        col = c.col();
        const std::string rhs = c.name();
        if (!c.accept("(")) {
            return InterfaceAtom{EqAtom{x, lookup(c, rhs, col)}, std::nullopt};
        }
        const auto ar = inst_.arity(rhs);
        if (!ar) {
            throw SortError(c.line(), col, "undeclared function '" + rhs + "'");
        }
        FunDef f{x, rhs, {}};
        if (!c.accept(")")) {
            do {
                const auto acol = c.col();
                const std::string a = c.name();
                f.args.push_back(lookup(c, a, acol));
            } while (c.accept(","));
            c.expect(")");
        }
        if (f.args.size() != *ar) {
            throw SortError(c.line(), col, "'" + rhs + "' expects " + std::to_string(*ar) + " argument(s), got " +
                                               std::to_string(f.args.size()));
        }
        return InterfaceAtom{std::move(f), std::nullopt};
    }

    void parse_atom(const Line& l) {
        Cursor c(l.text, l.number);
        InterfaceAtom atom;
        if (c.accept("(")) {
            atom = atom_body(c);
            c.expect(")");
            c.expect("@");
            const auto col = c.col();
            const std::string a = c.name();
            const VarId v = lookup(c, a, col);
            const auto& iv = inst_.bounds()[v];
            if (!iv.lo || !iv.hi || *iv.lo < 0 || *iv.hi > 1) {
                throw SortError(l.number, col, "annotation '" + a + "' must be bounded within 0..1");
            }
            atom.annotation = v;
        } else {
            atom = atom_body(c);
        }
        c.finish();
        inst_.add_atom(std::move(atom));
    }

    ImtInstance inst_;
    const ImtInstance* view_ = &inst_;
    std::map<std::string, std::vector<Line>> sections_;
    bool objective_seen_ = false;
};

std::string bound_text(const std::optional<Int>& b, bool lower) {
    if (!b) {
        return lower ? "-inf" : "inf";
    }
    return to_string(*b);
}

}  // namespace

std::string quote_name(const std::string& s) { return is_plain_name(s) ? s : "|" + s + "|"; }

VarNames quoted_names(const ImtInstance& inst) {
    VarNames names;
    names.reserve(inst.num_vars());
    for (const auto& n : inst.names()) {
        names.push_back(quote_name(n));
    }
    return names;
}

ImtInstance parse_native(std::string_view text) { return NativeParser().parse(text); }

LinConstraint parse_linear_constraint(std::string_view text, const ImtInstance& inst) {
    return NativeParser(inst).constraint(text);
}

std::string print_native(const ImtInstance& inst) {
    const VarNames names = quoted_names(inst);
    std::ostringstream out;
    out << "[vars]\n";
    for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
        const auto& iv = inst.bounds()[VarId{i}];
        out << names[i] << " int " << bound_text(iv.lo, true) << " " << bound_text(iv.hi, false);
        if (inst.vars()[i].auxiliary) {
            out << " aux";
        }
        out << "\n";
    }
    out << "[funs]\n";
    for (const auto& [f, ar] : inst.funs()) {
        out << quote_name(f) << " " << ar << "\n";
    }
    out << "[objective]\n";
    if (!inst.objective().empty()) {
        out << "min " << format_expr(inst.objective(), names) << "\n";
    }
    out << "[constraints]\n";
    for (const auto& c : inst.constraints()) {
        out << format_constraint(c, names) << "\n";
    }
    out << "[atoms]\n";
    for (const auto& a : inst.atoms()) {
        std::string body;
        if (const auto* f = std::get_if<FunDef>(&a.atom)) {
            body = names[f->result.index] + " = " + quote_name(f->fun) + "(";
            for (std::size_t i = 0; i < f->args.size(); ++i) {
                body += (i ? ", " : "") + names[f->args[i].index];
            }
            body += ")";
        } else {
            const auto& e = std::get<EqAtom>(a.atom);
            body = names[e.x.index] + " = " + names[e.y.index];
        }
        if (a.annotation) {
            out << "(" << body << ") @ " << names[a.annotation->index] << "\n";
        } else {
            out << body << "\n";
        }
    }
    return out.str();
}

std::string instance_digest(const ImtInstance& inst) { return hex_digest(print_native(inst)); }

}  // namespace imt
