// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/smtlib.hpp"

#include <cctype>
#include <map>
#include <set>

namespace imt {
namespace {

// ---------------------------------------------------------------- s-expressions

struct SExpr {
    enum class Kind { Symbol, Numeral, String, Keyword, List };
    Kind kind = Kind::Symbol;
    std::string text;
    std::vector<SExpr> items;
    std::size_t line = 0;
    std::size_t col = 0;

    bool is_symbol(std::string_view s) const { return kind == Kind::Symbol && text == s; }
};

class Reader {
public:
    explicit Reader(std::string_view s) : s_(s) {}

    std::optional<SExpr> next() {
        skip();
        if (pos_ >= s_.size()) {
            return std::nullopt;
        }
        return read();
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(line_, col(), msg); }
    std::size_t col() const { return pos_ - line_start_ + 1; }

    void advance() {
        if (s_[pos_] == '\n') {
            ++line_;
            line_start_ = pos_ + 1;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                advance();
            } else if (s_[pos_] == ';') {
                while (pos_ < s_.size() && s_[pos_] != '\n') {
                    advance();
                }
            } else {
                break;
            }
        }
    }

    static bool symbol_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("~!@$%^&*_-+=<>.?/").find(c) !=
                                                                     std::string_view::npos;
    }

    SExpr read() {
        SExpr e;
        e.line = line_;
        e.col = col();
        const char c = s_[pos_];
        if (c == '(') {
            advance();
            e.kind = SExpr::Kind::List;
            while (true) {
                skip();
                if (pos_ >= s_.size()) {
                    throw SyntaxError(e.line, e.col, "unbalanced '('");
                }
                if (s_[pos_] == ')') {
                    advance();
                    return e;
                }
                e.items.push_back(read());
            }
        }
        if (c == ')') {
            fail("unexpected ')'");
        }
        if (c == '|') {
            advance();
            const std::size_t start = pos_;
            while (pos_ < s_.size() && s_[pos_] != '|') {
                advance();
            }
            if (pos_ >= s_.size()) {
                throw SyntaxError(e.line, e.col, "unterminated quoted symbol");
            }
            e.text = std::string(s_.substr(start, pos_ - start));
            advance();
            return e;
        }
        if (c == '"') {
            advance();
            e.kind = SExpr::Kind::String;
            while (pos_ < s_.size()) {
                if (s_[pos_] == '"') {
                    if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '"') {
                        e.text += '"';
                        advance();
                        advance();
                        continue;
                    }
                    break;
                }
                e.text += s_[pos_];
                advance();
            }
            if (pos_ >= s_.size()) {
                throw SyntaxError(e.line, e.col, "unterminated string");
            }
            advance();
            return e;
        }
        if (c == ':') {
            advance();
            e.kind = SExpr::Kind::Keyword;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && symbol_char(s_[pos_])) {
            advance();
        }
        if (pos_ == start) {
            fail(std::string("unexpected character '") + s_[pos_] + "'");
        }
        e.text = std::string(s_.substr(start, pos_ - start));
        if (e.kind == SExpr::Kind::Symbol && std::isdigit(static_cast<unsigned char>(e.text[0]))) {
            for (char d : e.text) {
                if (!std::isdigit(static_cast<unsigned char>(d))) {
                    throw SyntaxError(e.line, e.col, "bad numeral '" + e.text + "'");
                }
            }
            e.kind = SExpr::Kind::Numeral;
        }
        return e;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t line_start_ = 0;
};

// ---------------------------------------------------------------- script parsing

const std::set<std::string, std::less<>> kReserved{"+",   "-",  "*",   "<=",  "<",        ">=",  ">",
                                                   "=",   "not", "and", "or",  "=>",       "ite", "xor",
                                                   "true", "false", "distinct", "let", "forall", "exists"};

class ScriptParser {
public:
    SmtProblem parse(std::string_view text) {
        Reader r(text);
        while (auto e = r.next()) {
            if (done_) {
                break;
            }
            command(*e);
        }
        return std::move(p_);
    }

private:
    [[noreturn]] static void syntax(const SExpr& at, const std::string& msg) {
        throw SyntaxError(at.line, at.col, msg);
    }
    [[noreturn]] static void sort_error(const SExpr& at, const std::string& msg) {
        throw SortError(at.line, at.col, msg);
    }

    static const std::string& symbol(const SExpr& e, const char* what) {
        if (e.kind != SExpr::Kind::Symbol) {
            syntax(e, std::string("expected ") + what);
        }
        return e.text;
    }

    static SmtSort sort_of(const SExpr& e) {
        if (e.is_symbol("Int")) {
            return SmtSort::Int;
        }
        if (e.is_symbol("Bool")) {
            return SmtSort::Bool;
        }
        sort_error(e, "unsupported sort '" + (e.kind == SExpr::Kind::List ? std::string("(...)") : e.text) + "'");
    }

    void fresh_symbol(const SExpr& at, const std::string& name) {
        if (kReserved.count(name) || consts_.count(name) || funs_.count(name) || macros_.count(name)) {
            syntax(at, "symbol '" + name + "' is already declared or reserved");
        }
    }

    void command(const SExpr& e) {
        if (e.kind != SExpr::Kind::List || e.items.empty()) {
            syntax(e, "expected a command");
        }
        const SExpr& head = e.items[0];
        const std::string& cmd = symbol(head, "a command name");
        const auto argc = e.items.size() - 1;
        auto want = [&](std::size_t n) {
            if (argc != n) {
                syntax(e, "'" + cmd + "' takes " + std::to_string(n) + " argument(s)");
            }
        };
        if (cmd == "set-logic") {
            want(1);
            const std::string& l = symbol(e.items[1], "a logic name");
            if (l != "QF_LIA" && l != "QF_UFLIA" && l != "QF_UF" && l != "QF_IDL" && l != "QF_UFIDL" && l != "ALL") {
                throw UnsupportedCommand(e.items[1].line, e.items[1].col, "logic '" + l + "' is not supported");
            }
            p_.logic = l;
        } else if (cmd == "set-info" || cmd == "set-option") {
        } else if (cmd == "declare-fun") {
            want(3);
            const std::string& name = symbol(e.items[1], "a function name");
            fresh_symbol(e.items[1], name);
            const SExpr& params = e.items[2];
            if (params.kind != SExpr::Kind::List) {
                syntax(params, "expected a parameter sort list");
            }
            for (const auto& s : params.items) {
                if (sort_of(s) != SmtSort::Int) {
                    sort_error(s, "function arguments must be Int");
                }
            }
            declare(name, params.items.size(), sort_of(e.items[3]));
        } else if (cmd == "declare-const") {
            want(2);
            const std::string& name = symbol(e.items[1], "a constant name");
            fresh_symbol(e.items[1], name);
            declare(name, 0, sort_of(e.items[2]));
        } else if (cmd == "define-fun") {
            want(4);
            const std::string& name = symbol(e.items[1], "a function name");
            fresh_symbol(e.items[1], name);
            if (e.items[2].kind != SExpr::Kind::List || !e.items[2].items.empty()) {
                throw UnsupportedCommand(e.line, e.col, "define-fun with parameters is not supported");
            }
            const SmtSort s = sort_of(e.items[3]);
            SmtTerm body = term(e.items[4]);
            if (body.sort != s) {
                sort_error(e.items[4], "body of '" + name + "' does not have the declared sort");
            }
            macros_.emplace(name, std::move(body));
        } else if (cmd == "assert") {
            want(1);
            SmtTerm t = term(e.items[1]);
            if (t.sort != SmtSort::Bool) {
                sort_error(e.items[1], "assertion is not Bool");
            }
            p_.assertions.push_back(std::move(t));
        } else if (cmd == "minimize" || cmd == "maximize") {
            want(1);
            if (p_.objective) {
                throw UnsupportedCommand(e.line, e.col, "only one objective is supported");
            }
            SmtTerm t = term(e.items[1]);
            if (t.sort != SmtSort::Int) {
                sort_error(e.items[1], "objective is not Int");
            }
            p_.objective = std::move(t);
            p_.maximize = cmd == "maximize";
        } else if (cmd == "check-sat") {
            want(0);
            p_.check_sat = true;
        } else if (cmd == "get-model") {
            want(0);
            p_.get_model = true;
        } else if (cmd == "exit") {
            done_ = true;
        } else {
            throw UnsupportedCommand(head.line, head.col, "'" + cmd + "' is not supported");
        }
    }

    void declare(const std::string& name, std::size_t arity, SmtSort result) {
        if (arity == 0) {
            consts_.emplace(name, result);
            p_.constants.emplace_back(name, result);
        } else {
            funs_.emplace(name, SmtFunction{name, arity, result});
            p_.functions.push_back(SmtFunction{name, arity, result});
        }
    }

    static SmtTerm make(const SExpr& at, SmtTerm::Kind kind, SmtSort sort, std::string name = {},
                        std::vector<SmtTerm> args = {}) {
        SmtTerm t;
        t.kind = kind;
        t.sort = sort;
        t.name = std::move(name);
        t.args = std::move(args);
        t.line = at.line;
        t.col = at.col;
        return t;
    }

    static SmtTerm builtin(const SExpr& at, SmtSort sort, std::string op, std::vector<SmtTerm> args) {
        return make(at, SmtTerm::Kind::Builtin, sort, std::move(op), std::move(args));
    }

    static void require(const SExpr& at, const std::vector<SmtTerm>& args, SmtSort s, const std::string& op) {
        for (const auto& a : args) {
            if (a.sort != s) {
                sort_error(at, "'" + op + "' expects " + (s == SmtSort::Int ? "Int" : "Bool") + " arguments");
            }
        }
    }

    SmtTerm term(const SExpr& e) {
        switch (e.kind) {
            case SExpr::Kind::Numeral: {
                SmtTerm t = make(e, SmtTerm::Kind::Numeral, SmtSort::Int);
                t.value = parse_int(e.text);
                return t;
            }
            case SExpr::Kind::Symbol: {
                if (e.text == "true" || e.text == "false") {
                    SmtTerm t = make(e, SmtTerm::Kind::BoolLiteral, SmtSort::Bool);
                    t.value = e.text == "true" ? 1 : 0;
                    return t;
                }
                if (auto it = macros_.find(e.text); it != macros_.end()) {
                    return it->second;
                }
                if (auto it = consts_.find(e.text); it != consts_.end()) {
                    return make(e, SmtTerm::Kind::Constant, it->second, e.text);
                }
                if (funs_.count(e.text)) {
                    sort_error(e, "function '" + e.text + "' used without arguments");
                }
                sort_error(e, "undeclared symbol '" + e.text + "'");
            }
            case SExpr::Kind::List:
                return application(e);
            default:
                syntax(e, "unexpected token '" + e.text + "'");
        }
    }

    SmtTerm application(const SExpr& e) {
        if (e.items.empty()) {
            syntax(e, "empty application");
        }
        const SExpr& head = e.items[0];
        if (head.kind != SExpr::Kind::Symbol) {
            syntax(head, "expected an operator");
        }
        const std::string& op = head.text;
        if (op == "let" || op == "forall" || op == "exists" || op == "!") {
            throw UnsupportedCommand(head.line, head.col, "'" + op + "' is not supported");
        }
        std::vector<SmtTerm> args;
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            args.push_back(term(e.items[i]));
        }
        const std::size_t n = args.size();
        auto at_least = [&](std::size_t k) {
            if (n < k) {
                syntax(e, "'" + op + "' needs at least " + std::to_string(k) + " argument(s)");
            }
        };
        if (op == "+" || op == "-" || op == "*") {
            at_least(1);
            require(e, args, SmtSort::Int, op);
            if (op == "*") {
                std::size_t nonconst = 0;
                for (const auto& a : args) {
                    nonconst += !is_constant(a);
                }
                if (nonconst > 1) {
                    sort_error(e, "nonlinear multiplication");
                }
            }
            return builtin(e, SmtSort::Int, op, std::move(args));
        }
        if (op == "<=" || op == "<" || op == ">=" || op == ">") {
            at_least(2);
            require(e, args, SmtSort::Int, op);
            return chain(e, op, std::move(args));
        }
        if (op == "=") {
            at_least(2);
            require(e, args, args[0].sort, op);
            return chain(e, op, std::move(args));
        }
        if (op == "distinct") {
            at_least(2);
            require(e, args, args[0].sort, op);
            std::vector<SmtTerm> parts;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    parts.push_back(builtin(e, SmtSort::Bool, "not", {builtin(e, SmtSort::Bool, "=", {args[i], args[j]})}));
                }
            }
            return parts.size() == 1 ? parts[0] : builtin(e, SmtSort::Bool, "and", std::move(parts));
        }
        if (op == "not") {
            if (n != 1) {
                syntax(e, "'not' takes one argument");
            }
            require(e, args, SmtSort::Bool, op);
            return builtin(e, SmtSort::Bool, op, std::move(args));
        }
        if (op == "and" || op == "or") {
            require(e, args, SmtSort::Bool, op);
            return builtin(e, SmtSort::Bool, op, std::move(args));
        }
        if (op == "xor") {
            if (n != 2) {
                syntax(e, "'xor' takes two arguments");
            }
            require(e, args, SmtSort::Bool, op);
            return builtin(e, SmtSort::Bool, "not", {builtin(e, SmtSort::Bool, "=", std::move(args))});
        }
        if (op == "=>") {
            at_least(2);
            require(e, args, SmtSort::Bool, op);
            SmtTerm acc = std::move(args.back());
            for (std::size_t i = n - 1; i-- > 0;) {
                acc = builtin(e, SmtSort::Bool, "=>", {std::move(args[i]), std::move(acc)});
            }
            return acc;
        }
        if (op == "ite") {
            if (n != 3) {
                syntax(e, "'ite' takes three arguments");
            }
            if (args[0].sort != SmtSort::Bool || args[1].sort != args[2].sort) {
                sort_error(e, "ill-sorted 'ite'");
            }
            const SmtSort s = args[1].sort;
            return builtin(e, s, op, std::move(args));
        }
        if (auto it = funs_.find(op); it != funs_.end()) {
            if (n != it->second.arity) {
                sort_error(e, "'" + op + "' expects " + std::to_string(it->second.arity) + " argument(s), got " +
                                  std::to_string(n));
            }
            require(e, args, SmtSort::Int, op);
            return make(e, SmtTerm::Kind::Function, it->second.result, op, std::move(args));
        }
        if (consts_.count(op) || macros_.count(op)) {
            sort_error(head, "'" + op + "' is not a function");
        }
        sort_error(head, "undeclared function '" + op + "'");
    }

    static bool is_constant(const SmtTerm& t) {
        if (t.kind == SmtTerm::Kind::Numeral) {
            return true;
        }
        if (t.kind == SmtTerm::Kind::Builtin && (t.name == "+" || t.name == "-" || t.name == "*")) {
            for (const auto& a : t.args) {
                if (!is_constant(a)) {
                    return false;
                }
            }
            return true;
        }
        return false;
    }

    /// (op a b c) as (and (op a b) (op b c)).
    static SmtTerm chain(const SExpr& e, const std::string& op, std::vector<SmtTerm> args) {
        if (args.size() == 2) {
            return builtin(e, SmtSort::Bool, op, std::move(args));
        }
        std::vector<SmtTerm> parts;
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            parts.push_back(builtin(e, SmtSort::Bool, op, {args[i], args[i + 1]}));
        }
        return builtin(e, SmtSort::Bool, "and", std::move(parts));
    }

    SmtProblem p_;
    std::map<std::string, SmtSort, std::less<>> consts_;
    std::map<std::string, SmtFunction, std::less<>> funs_;
    std::map<std::string, SmtTerm, std::less<>> macros_;
    bool done_ = false;
};

}  // namespace

SmtProblem parse_smtlib(std::string_view text) { return ScriptParser().parse(text); }

}  // namespace imt

namespace imt {
namespace {

std::string label(VarId v, const VarNames& names) {
    return v.index < names.size() ? names[v.index] : "#" + std::to_string(v.index);
}

Int box_extreme(const LinExpr& e, const Bounds& bounds, const VarNames& names, bool upper) {
    Int total = 0;
    for (const auto& [v, c] : e.terms()) {
        const Interval& iv = bounds[v];
        const auto& side = (c > 0) == upper ? iv.hi : iv.lo;
        if (!side) {
            throw UnboundedForEncoding(label(v, names));
        }
        total += c * *side;
    }
    return total;
}

}  // namespace

Int box_max(const LinExpr& e, const Bounds& bounds, const VarNames& names) {
    return box_extreme(e, bounds, names, true);
}

Int box_min(const LinExpr& e, const Bounds& bounds, const VarNames& names) {
    return box_extreme(e, bounds, names, false);
}

std::vector<LinConstraint> encode_atom_indicator(const LinConstraint& t, VarId v, const Bounds& bounds,
                                                 const VarNames& names) {
    LinConstraint n = normalize(t);
    if (n.rel == Relation::Eq) {
        throw std::invalid_argument("an indicator needs an inequality atom");
    }
    if (n.rel == Relation::Ge) {
        n = LinConstraint{n.lhs.negated(), Relation::Le, -n.rhs};
    }
    const Int& r = n.rhs;
    const Int k = box_max(n.lhs, bounds, names);
    const Int m = box_min(n.lhs, bounds, names) - 1;
    LinExpr first = n.lhs;
    first.add(v, k - r);
    LinExpr second = n.lhs;
    second.add(v, -(m - r));
    return {LinConstraint{std::move(first), Relation::Le, k}, LinConstraint{std::move(second), Relation::Ge, r + 1}};
}

namespace {

struct Lin {
    LinExpr e;
    Int k;
};

Lin operator-(const Lin& a, const Lin& b) { return {a.e - b.e, a.k - b.k}; }

struct Lit {
    VarId v;
    bool neg = false;

    Lit operator!() const { return {v, !neg}; }
};

enum class Pol { Pos, Neg, Both };

Pol flip(Pol p) { return p == Pol::Pos ? Pol::Neg : p == Pol::Neg ? Pol::Pos : Pol::Both; }
bool wants_pos(Pol p) { return p != Pol::Neg; }
bool wants_neg(Pol p) { return p != Pol::Pos; }

bool is_relation(const SmtTerm& t) {
    return t.kind == SmtTerm::Kind::Builtin &&
           (t.name == "<=" || t.name == "<" || t.name == ">=" || t.name == ">" || t.name == "=") &&
           t.args.size() == 2 && t.args[0].sort == SmtSort::Int;
}

Relation relation_of(const std::string& op) {
    if (op == "<=") {
        return Relation::Le;
    }
    if (op == "<") {
        return Relation::Lt;
    }
    if (op == ">=") {
        return Relation::Ge;
    }
    if (op == ">") {
        return Relation::Gt;
    }
    return Relation::Eq;
}

Relation negated(Relation r) {
    switch (r) {
        case Relation::Le: return Relation::Gt;
        case Relation::Lt: return Relation::Ge;
        case Relation::Ge: return Relation::Lt;
        case Relation::Gt: return Relation::Le;
        case Relation::Eq: break;
    }
    throw std::logic_error("equality has no single-constraint negation");
}

LinExpr divided(const LinExpr& e, const Int& g) {
    std::vector<LinExpr::Term> terms;
    for (const auto& [v, c] : e.terms()) {
        terms.emplace_back(v, Int(c / g));
    }
    return LinExpr::from_terms(std::move(terms));
}

class Encoder {
public:
    Encoder(const SmtProblem& p, const std::optional<Int>& default_bound) : p_(p), default_bound_(default_bound) {}

    EncodedProblem run() {
        ImtInstance& inst = out_.instance;
        for (const auto& [name, sort] : p_.constants) {
            const VarId v = sort == SmtSort::Bool ? inst.add_var(name, Int(0), Int(1)) : inst.add_var(name);
            consts_.emplace(name, v);
            taken_.insert(name);
            out_.outputs.emplace_back(name, sort);
        }
        for (const auto& f : p_.functions) {
            inst.declare_fun(f.name, f.arity);
            taken_.insert(f.name);
        }
        std::vector<const SmtTerm*> top;
        for (const auto& a : p_.assertions) {
            flatten(a, top);
        }
        std::vector<const SmtTerm*> rest;
        for (const SmtTerm* t : top) {
            if (!as_bound(*t)) {
                rest.push_back(t);
            }
        }
        if (default_bound_) {
            for (const auto& [name, sort] : p_.constants) {
                Interval& iv = inst.bounds()[consts_.at(name)];
                if (!iv.lo) {
                    iv.lo = -*default_bound_;
                }
                if (!iv.hi) {
                    iv.hi = *default_bound_;
                }
            }
        }
        std::vector<const SmtTerm*> remaining;
        for (const SmtTerm* t : rest) {
            if (!as_app_bound(*t)) {
                remaining.push_back(t);
            }
        }
        for (const SmtTerm* t : remaining) {
            assert_top(*t);
        }
        if (p_.objective) {
            Lin l = lin(*p_.objective);
            out_.has_objective = true;
            out_.maximize = p_.maximize;
            out_.objective_offset = l.k;
            inst.set_objective(p_.maximize ? l.e.negated() : l.e);
        }
        inst.validate();
        return std::move(out_);
    }

private:
    ImtInstance& inst() { return out_.instance; }

    static void flatten(const SmtTerm& t, std::vector<const SmtTerm*>& out) {
        if (t.kind == SmtTerm::Kind::Builtin && t.name == "and") {
            for (const auto& a : t.args) {
                flatten(a, out);
            }
        } else {
            out.push_back(&t);
        }
    }

    // ------------------------------------------------ bounds

    /// Linear form of a term built from numerals, constants and + - * only.
    std::optional<Lin> pure_lin(const SmtTerm& t) const {
        switch (t.kind) {
            case SmtTerm::Kind::Numeral:
                return Lin{{}, t.value};
            case SmtTerm::Kind::Constant:
                return Lin{LinExpr::of(consts_.at(t.name)), 0};
            case SmtTerm::Kind::Builtin: {
                if (t.name != "+" && t.name != "-" && t.name != "*") {
                    return std::nullopt;
                }
                std::vector<Lin> parts;
                for (const auto& a : t.args) {
                    auto l = pure_lin(a);
                    if (!l) {
                        return std::nullopt;
                    }
                    parts.push_back(std::move(*l));
                }
                return combine(t, std::move(parts));
            }
            default:
                return std::nullopt;
        }
    }

    static Lin combine(const SmtTerm& t, std::vector<Lin> parts) {
        if (t.name == "+") {
            Lin acc{{}, 0};
            for (const auto& p : parts) {
                acc.e += p.e;
                acc.k += p.k;
            }
            return acc;
        }
        if (t.name == "-") {
            if (parts.size() == 1) {
                return Lin{parts[0].e.negated(), -parts[0].k};
            }
            Lin acc = parts[0];
            for (std::size_t i = 1; i < parts.size(); ++i) {
                acc = acc - parts[i];
            }
            return acc;
        }
        Lin acc{{}, 1};
        for (const auto& p : parts) {
            if (p.e.empty()) {
                acc = Lin{acc.e.scaled(p.k), acc.k * p.k};
            } else if (acc.e.empty()) {
                acc = Lin{p.e.scaled(acc.k), p.k * acc.k};
            } else {
                throw SortError(t.line, t.col, "nonlinear multiplication");
            }
        }
        return acc;
    }

    bool as_bound(const SmtTerm& t) {
        if (t.kind == SmtTerm::Kind::Constant && t.sort == SmtSort::Bool) {
            return tighten(consts_.at(t.name), Int(1), std::nullopt);
        }
        if (t.kind == SmtTerm::Kind::Builtin && t.name == "not" && t.args[0].kind == SmtTerm::Kind::Constant &&
            t.args[0].sort == SmtSort::Bool) {
            return tighten(consts_.at(t.args[0].name), std::nullopt, Int(0));
        }
        if (!is_relation(t)) {
            return false;
        }
        auto a = pure_lin(t.args[0]);
        auto b = pure_lin(t.args[1]);
        if (!a || !b) {
            return false;
        }
        return bound_from(*a - *b, relation_of(t.name));
    }

    /// Bounds on application results, e.g. (<= 0 (f x) 5). Runs after the default bound
    /// so an explicit bound can narrow it.
    bool as_app_bound(const SmtTerm& t) {
        if (!is_relation(t) || !has_app(t) || has_ite(t)) {
            return false;
        }
        return bound_from(lin(t.args[0]) - lin(t.args[1]), relation_of(t.name));
    }

    static bool has_app(const SmtTerm& t) {
        return t.kind == SmtTerm::Kind::Function ||
               std::any_of(t.args.begin(), t.args.end(), [](const SmtTerm& a) { return has_app(a); });
    }

    static bool has_ite(const SmtTerm& t) {
        return (t.kind == SmtTerm::Kind::Builtin && t.name == "ite") ||
               std::any_of(t.args.begin(), t.args.end(), [](const SmtTerm& a) { return has_ite(a); });
    }

    /// d rel 0 as a bound when d has a single variable.
    bool bound_from(const Lin& d, Relation rel) {
        if (d.e.size() != 1) {
            return false;
        }
        const LinConstraint c = normalize(LinConstraint{d.e, rel, -d.k});
        const auto& [v, coeff] = c.lhs.terms()[0];
        const Int& r = c.rhs;
        if (c.rel == Relation::Eq) {
            if (r % coeff != 0) {
                return false;
            }
            const Int x = r / coeff;
            return tighten(v, x, x);
        }
        // coeff * v <= r, or >= r
        const bool upper = (c.rel == Relation::Le) == (coeff > 0);
        const Int q = upper ? floor_div(r, coeff) : ceil_div(r, coeff);
        return upper ? tighten(v, std::nullopt, q) : tighten(v, q, std::nullopt);
    }

    /// Intersects v's interval; refuses (returns false) when the result would be empty.
    bool tighten(VarId v, const std::optional<Int>& lo, const std::optional<Int>& hi) {
        Interval iv = inst().bounds()[v];
        if (lo && (!iv.lo || *lo > *iv.lo)) {
            iv.lo = lo;
        }
        if (hi && (!iv.hi || *hi < *iv.hi)) {
            iv.hi = hi;
        }
        if (iv.lo && iv.hi && *iv.lo > *iv.hi) {
            return false;
        }
        inst().bounds()[v] = iv;
        return true;
    }

    // ------------------------------------------------ fresh variables

    VarId fresh(const std::string& prefix, std::optional<Int> lo, std::optional<Int> hi) {
        std::string name;
        do {
            name = prefix + "!" + std::to_string(++counter_);
        } while (taken_.count(name));
        taken_.insert(name);
        return inst().add_var(name, std::move(lo), std::move(hi), true);
    }

    VarId fresh_bool(const std::string& prefix) { return fresh(prefix, Int(0), Int(1)); }

    Interval interval(const Lin& l) const {
        Interval out{l.k, l.k};
        for (const auto& [v, c] : l.e.terms()) {
            const Interval& iv = out_.instance.bounds()[v];
            const auto& lo_side = c > 0 ? iv.lo : iv.hi;
            const auto& hi_side = c > 0 ? iv.hi : iv.lo;
            if (out.lo) {
                out.lo = lo_side ? std::optional<Int>(*out.lo + c * *lo_side) : std::nullopt;
            }
            if (out.hi) {
                out.hi = hi_side ? std::optional<Int>(*out.hi + c * *hi_side) : std::nullopt;
            }
        }
        return out;
    }

    /// A variable equal to l: l itself when it is a bare variable, else a fresh one.
    VarId as_var(const Lin& l) {
        if (l.k == 0 && l.e.size() == 1 && l.e.terms()[0].second == 1) {
            return l.e.terms()[0].first;
        }
        auto key = std::make_pair(l.e, l.k);
        if (auto it = term_vars_.find(key); it != term_vars_.end()) {
            return it->second;
        }
        const Interval iv = interval(l);
        const VarId v = fresh("v", iv.lo, iv.hi);
        inst().add_constraint(LinConstraint{LinExpr::of(v) - l.e, Relation::Eq, l.k});
        term_vars_.emplace(std::move(key), v);
        return v;
    }

    VarId app_var(const SmtTerm& t) {
        std::vector<VarId> args;
        std::vector<std::uint32_t> key;
        for (const auto& a : t.args) {
            args.push_back(as_var(lin(a)));
            key.push_back(args.back().index);
        }
        auto k = std::make_pair(t.name, key);
        if (auto it = apps_.find(k); it != apps_.end()) {
            return it->second;
        }
        const VarId v = t.sort == SmtSort::Bool ? fresh_bool("v")
                        : default_bound_        ? fresh("v", -*default_bound_, *default_bound_)
                                                : fresh("v", std::nullopt, std::nullopt);
        inst().add_atom(InterfaceAtom{FunDef{v, t.name, std::move(args)}, std::nullopt});
        apps_.emplace(std::move(k), v);
        return v;
    }

    // ------------------------------------------------ terms

    Lin lin(const SmtTerm& t) {
        switch (t.kind) {
            case SmtTerm::Kind::Numeral:
                return Lin{{}, t.value};
            case SmtTerm::Kind::Constant:
                return Lin{LinExpr::of(consts_.at(t.name)), 0};
            case SmtTerm::Kind::Function:
                return Lin{LinExpr::of(app_var(t)), 0};
            case SmtTerm::Kind::Builtin:
                if (t.name == "ite") {
                    return Lin{LinExpr::of(ite_var(t)), 0};
                } else {
                    std::vector<Lin> parts;
                    for (const auto& a : t.args) {
                        parts.push_back(lin(a));
                    }
                    return combine(t, std::move(parts));
                }
            case SmtTerm::Kind::BoolLiteral:
                break;
        }
        throw SortError(t.line, t.col, "Bool term in an integer position");
    }

    VarId ite_var(const SmtTerm& t) {
        const Lit c = lit(t.args[0], Pol::Both);
        const Lin s = lin(t.args[1]);
        const Lin e = lin(t.args[2]);
        const Interval a = interval(s);
        const Interval b = interval(e);
        std::optional<Int> lo, hi;
        if (a.lo && b.lo) {
            lo = std::min(*a.lo, *b.lo);
        }
        if (a.hi && b.hi) {
            hi = std::max(*a.hi, *b.hi);
        }
        const VarId z = fresh("v", lo, hi);
        const LinExpr ze = LinExpr::of(z);
        implied(c, ze - s.e, s.k);
        implied(c, s.e - ze, -s.k);
        implied(!c, ze - e.e, e.k);
        implied(!c, e.e - ze, -e.k);
        return z;
    }

    /// l => e <= r, by big-M over the box.
    void implied(const Lit& l, const LinExpr& e, const Int& r) {
        const Int k = box_max(e, inst().bounds(), inst().names());
        if (k <= r) {
            return;
        }
        LinExpr lhs = e;
        if (l.neg) {
            lhs.add(l.v, -(k - r));
            inst().add_constraint(LinConstraint{std::move(lhs), Relation::Le, r});
        } else {
            lhs.add(l.v, k - r);
            inst().add_constraint(LinConstraint{std::move(lhs), Relation::Le, k});
        }
    }

    Lit truth() {
        if (!true_) {
            true_ = fresh("true", Int(1), Int(1));
        }
        return Lit{*true_};
    }

    Lit constant(bool value) { return value ? truth() : !truth(); }

    void clause(const std::vector<Lit>& lits) {
        LinExpr e;
        Int rhs = 1;
        for (const Lit& l : lits) {
            if (l.neg) {
                e.add(l.v, -1);
                rhs -= 1;
            } else {
                e.add(l.v, 1);
            }
        }
        if (e.empty() && rhs <= 0) {
            return;
        }
        inst().add_constraint(LinConstraint{std::move(e), Relation::Ge, rhs});
    }

    Lit gate_and(const std::vector<Lit>& ls, Pol pol) {
        const Lit a{fresh_bool("b")};
        if (wants_pos(pol)) {
            for (const Lit& l : ls) {
                clause({!a, l});
            }
        }
        if (wants_neg(pol)) {
            std::vector<Lit> c;
            for (const Lit& l : ls) {
                c.push_back(!l);
            }
            c.push_back(a);
            clause(c);
        }
        return a;
    }

    Lit gate_or(const std::vector<Lit>& ls, Pol pol) {
        const Lit a{fresh_bool("b")};
        if (wants_pos(pol)) {
            std::vector<Lit> c{!a};
            c.insert(c.end(), ls.begin(), ls.end());
            clause(c);
        }
        if (wants_neg(pol)) {
            for (const Lit& l : ls) {
                clause({!l, a});
            }
        }
        return a;
    }

    Lit lit(const SmtTerm& t, Pol pol) {
        switch (t.kind) {
            case SmtTerm::Kind::BoolLiteral:
                return constant(t.value != 0);
            case SmtTerm::Kind::Constant:
                return Lit{consts_.at(t.name)};
            case SmtTerm::Kind::Function:
                return Lit{app_var(t)};
            case SmtTerm::Kind::Numeral:
                throw SortError(t.line, t.col, "integer term in a Boolean position");
            case SmtTerm::Kind::Builtin:
                break;
        }
        const std::string& op = t.name;
        if (op == "not") {
            return !lit(t.args[0], flip(pol));
        }
        if (op == "and" || op == "or") {
            if (t.args.empty()) {
                return constant(op == "and");
            }
            if (t.args.size() == 1) {
                return lit(t.args[0], pol);
            }
            std::vector<Lit> ls;
            for (const auto& a : t.args) {
                ls.push_back(lit(a, pol));
            }
            return op == "and" ? gate_and(ls, pol) : gate_or(ls, pol);
        }
        if (op == "=>") {
            return gate_or({!lit(t.args[0], flip(pol)), lit(t.args[1], pol)}, pol);
        }
        if (op == "ite") {
            const Lit c = lit(t.args[0], Pol::Both);
            const Lit g = lit(t.args[1], pol);
            const Lit h = lit(t.args[2], pol);
            const Lit a{fresh_bool("b")};
            if (wants_pos(pol)) {
                clause({!a, !c, g});
                clause({!a, c, h});
            }
            if (wants_neg(pol)) {
                clause({!c, !g, a});
                clause({c, !h, a});
            }
            return a;
        }
        if (op == "=" && t.args[0].sort == SmtSort::Bool) {
            const Lit p = lit(t.args[0], Pol::Both);
            const Lit q = lit(t.args[1], Pol::Both);
            const Lit a{fresh_bool("b")};
            if (wants_pos(pol)) {
                clause({!a, !p, q});
                clause({!a, p, !q});
            }
            if (wants_neg(pol)) {
                clause({p, q, a});
                clause({!p, !q, a});
            }
            return a;
        }
        if (op == "=") {
            return eq_lit(t, pol);
        }
        if (is_relation(t)) {
            const Lin d = lin(t.args[0]) - lin(t.args[1]);
            const Int r = -d.k;
            switch (relation_of(op)) {
                case Relation::Le: return le_lit(d.e, r);
                case Relation::Lt: return le_lit(d.e, r - 1);
                case Relation::Ge: return !le_lit(d.e, r - 1);
                case Relation::Gt: return !le_lit(d.e, r);
                case Relation::Eq: break;
            }
        }
        throw SortError(t.line, t.col, "unexpected '" + op + "' in a Boolean position");
    }

    static bool var_like(const SmtTerm& t) {
        return t.kind == SmtTerm::Kind::Function || t.kind == SmtTerm::Kind::Constant;
    }

    Lit eq_lit(const SmtTerm& t, Pol pol) {
        const SmtTerm& s = t.args[0];
        const SmtTerm& u = t.args[1];
        if (var_like(s) && var_like(u) && (s.kind == SmtTerm::Kind::Function || u.kind == SmtTerm::Kind::Function)) {
            VarId x = as_var(lin(s));
            VarId y = as_var(lin(u));
            if (x == y) {
                return truth();
            }
            if (y < x) {
                std::swap(x, y);
            }
            const auto key = std::make_pair(x.index, y.index);
            if (auto it = eq_atoms_.find(key); it != eq_atoms_.end()) {
                return Lit{it->second};
            }
            const VarId v = fresh_bool("e");
            inst().add_atom(InterfaceAtom{EqAtom{x, y}, v});
            eq_atoms_.emplace(key, v);
            return Lit{v};
        }
        const Lin d = lin(s) - lin(u);
        const Int r = -d.k;
        return gate_and({le_lit(d.e, r), !le_lit(d.e, r - 1)}, pol);
    }

    /// Indicator literal for e <= r, shared between an atom and its complement.
    Lit le_lit(const LinExpr& e, const Int& r) {
        if (e.empty()) {
            return constant(0 <= r);
        }
        const Int g = e.content();
        LinExpr p = divided(e, g);
        Int q = floor_div(r, g);
        if (p.terms()[0].second < 0) {
            // p <= q  iff  not (-p <= -q - 1)
            return !le_canonical(p.negated(), -q - 1);
        }
        return le_canonical(p, q);
    }

    Lit le_canonical(const LinExpr& e, const Int& r) {
        auto key = std::make_pair(e, r);
        if (auto it = indicators_.find(key); it != indicators_.end()) {
            return Lit{it->second};
        }
        const VarId v = fresh_bool("t");
        for (auto& c : encode_atom_indicator(LinConstraint{e, Relation::Le, r}, v, inst().bounds(), inst().names())) {
            inst().add_constraint(std::move(c));
        }
        indicators_.emplace(std::move(key), v);
        return Lit{v};
    }

    // ------------------------------------------------ assertions

    void assert_top(const SmtTerm& t) {
        if (t.kind == SmtTerm::Kind::BoolLiteral) {
            if (t.value == 0) {
                inst().add_constraint(LinConstraint{{}, Relation::Ge, 1});
            }
            return;
        }
        if (is_relation(t)) {
            const Lin d = lin(t.args[0]) - lin(t.args[1]);
            inst().add_constraint(LinConstraint{d.e, relation_of(t.name), -d.k});
            return;
        }
        if (t.kind == SmtTerm::Kind::Builtin && t.name == "not" && is_relation(t.args[0]) && t.args[0].name != "=") {
            const SmtTerm& a = t.args[0];
            const Lin d = lin(a.args[0]) - lin(a.args[1]);
            inst().add_constraint(LinConstraint{d.e, negated(relation_of(a.name)), -d.k});
            return;
        }
        if (t.kind == SmtTerm::Kind::Builtin && t.name == "or") {
            std::vector<Lit> ls;
            for (const auto& a : t.args) {
                ls.push_back(lit(a, Pol::Pos));
            }
            clause(ls);
            return;
        }
        clause({lit(t, Pol::Pos)});
    }

    const SmtProblem& p_;
    std::optional<Int> default_bound_;
    EncodedProblem out_;
    std::map<std::string, VarId, std::less<>> consts_;
    std::set<std::string, std::less<>> taken_;
    std::map<std::pair<LinExpr, Int>, VarId> term_vars_;
    std::map<std::pair<std::string, std::vector<std::uint32_t>>, VarId> apps_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, VarId> eq_atoms_;
    std::map<std::pair<LinExpr, Int>, VarId> indicators_;
    std::optional<VarId> true_;
    std::size_t counter_ = 0;
};

}  // namespace

EncodedProblem encode_problem(const SmtProblem& p, const std::optional<Int>& default_bound) {
    return Encoder(p, default_bound).run();
}

ImtInstance abstract_variables(const SmtProblem& p, const std::optional<Int>& default_bound) {
    return encode_problem(p, default_bound).instance;
}

}  // namespace imt
