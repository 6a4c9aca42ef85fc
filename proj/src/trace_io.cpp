// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/trace_io.hpp"

#include <json.hpp>

#include "imt/native_format.hpp"

namespace imt {
namespace {

using json = nlohmann::ordered_json;

struct Fail {
    std::string msg;
};

[[noreturn]] void fail(const std::string& msg) { throw Fail{msg}; }

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        fail(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

std::string str(const json& j) {
    if (!j.is_string()) {
        fail("expected a string, got " + j.dump());
    }
    return j.get<std::string>();
}

Int int_of(const json& j) {
    try {
        return parse_int(str(j));
    } catch (const std::invalid_argument&) {
        fail("bad integer " + j.dump());
    }
}

Rat rat_of(const json& j) {
    try {
        return parse_rat(str(j));
    } catch (const std::invalid_argument&) {
        fail("bad rational " + j.dump());
    } catch (const std::runtime_error&) {
        fail("bad rational " + j.dump());
    }
}

class Codec {
public:
    explicit Codec(const ImtInstance& inst) : inst_(inst), quoted_(quoted_names(inst)) {}

    // ---- writing ----

    std::string name(VarId v) const { return inst_.name(v); }

    json constraint(const LinConstraint& c) const { return format_constraint(c, quoted_); }

    json literal(const TheoryLiteral& l) const {
        switch (l.kind) {
            case TheoryLiteral::Kind::VarEq:
            case TheoryLiteral::Kind::VarDiseq:
                return {{"lit", l.kind == TheoryLiteral::Kind::VarEq ? "eq" : "diseq"},
                        {"x", name(l.x)},
                        {"y", name(l.y)},
                        {"offset", to_string(l.offset)}};
            case TheoryLiteral::Kind::AtomTrue:
                return {{"lit", "true"}, {"var", name(l.x)}};
            case TheoryLiteral::Kind::AtomFalse:
                return {{"lit", "false"}, {"var", name(l.x)}};
        }
        return {};
    }

    json literals(const std::vector<TheoryLiteral>& ls) const {
        json out = json::array();
        for (const auto& l : ls) {
            out.push_back(literal(l));
        }
        return out;
    }

    static const char* row_kind(RowRef::Kind k) {
        switch (k) {
            case RowRef::Kind::Constraint: return "C";
            case RowRef::Kind::Equality: return "D";
            case RowRef::Kind::Lower: return "lo";
            case RowRef::Kind::Upper: return "hi";
            case RowRef::Kind::Line: return "line";
        }
        return "?";
    }

    static json multipliers(const std::vector<Multiplier>& ms) {
        json out = json::array();
        for (const auto& m : ms) {
            out.push_back(json::array(
                {row_kind(m.row.kind), m.row.index, m.sense == Sense::Ge ? "ge" : "le", to_string(m.weight)}));
        }
        return out;
    }

    static json derivation(const CgDerivation& d) {
        json out = json::array();
        for (const auto& l : d.lines) {
            out.push_back(multipliers(l.terms));
        }
        return out;
    }

    static json derivations(const std::vector<CgDerivation>& ds) {
        json out = json::array();
        for (const auto& d : ds) {
            out.push_back(derivation(d));
        }
        return out;
    }

    static json token(const TheoryToken& t) { return {{"theory", t.theory}, {"digest", t.digest}}; }

    json model(const Assignment& a) const {
        json out = json::object();
        for (std::uint32_t i = 0; i < a.size(); ++i) {
            out[name(VarId{i})] = to_string(a.values()[i]);
        }
        return out;
    }

    static json lb(const LbDual& d) {
        json b;
        switch (d.bound.kind()) {
            case ObjValue::Kind::NegInf: b = "-inf"; break;
            case ObjValue::Kind::PosInf: b = "+inf"; break;
            case ObjValue::Kind::Finite: b = to_string(d.bound.value()); break;
        }
        return {{"bound", b}, {"terms", multipliers(d.terms)}};
    }

    json certificate(const Certificate& cert) const {
        return std::visit(
            [&](const auto& c) -> json {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, BranchDichotomy>) {
                    return {{"kind", "dichotomy"}, {"var", name(c.var)}, {"split", to_string(c.split)}};
                } else if constexpr (std::is_same_v<T, BranchTrichotomy>) {
                    return {{"kind", "trichotomy"}, {"x", name(c.x)}, {"y", name(c.y)}, {"offset", to_string(c.offset)}};
                } else if constexpr (std::is_same_v<T, BranchConflictSplit>) {
                    return {{"kind", "conflict-split"}, {"core", literals(c.core)}};
                } else if constexpr (std::is_same_v<T, CgCut>) {
                    return {{"kind", "cg-cut"}, {"derivations", derivations(c.derivations)}};
                } else if constexpr (std::is_same_v<T, Farkas>) {
                    return {{"kind", "farkas"}, {"terms", multipliers(c.terms)}};
                } else if constexpr (std::is_same_v<T, BoundFix>) {
                    return {{"kind", "bound-fix"}, {"derivations", derivations(c.derivations)}};
                } else if constexpr (std::is_same_v<T, LbDual>) {
                    json j = lb(c);
                    j["kind"] = "lb-dual";
                    return j;
                } else if constexpr (std::is_same_v<T, RetireEvidence>) {
                    return {{"kind", "retire"}, {"model", model(c.model)}, {"lb", lb(c.lb_match)}, {"token", token(c.token)}};
                } else if constexpr (std::is_same_v<T, UnboundedEvidence>) {
                    json ray = json::array();
                    for (const auto& [v, k] : c.ray) {
                        ray.push_back(json::array({name(v), to_string(k)}));
                    }
                    return {{"kind", "unbounded"}, {"model", model(c.model)}, {"ray", ray}, {"token", token(c.token)}};
                } else if constexpr (std::is_same_v<T, TLemma>) {
                    return {{"kind", "tlemma"},
                            {"asserted", literals(c.asserted)},
                            {"derivations", derivations(c.derivations)},
                            {"token", token(c.token)}};
                } else {
                    return {{"kind", "subsume"}};
                }
            },
            cert);
    }

    json step(const Step& s) const {
        json j;
        j["rule"] = std::string(to_string(s.rule));
        j["targets"] = s.targets;
        if (!s.children.empty()) {
            json kids = json::array();
            for (const auto& child : s.children) {
                json k = json::array();
                for (const auto& c : child) {
                    k.push_back(constraint(c));
                }
                kids.push_back(k);
            }
            j["children"] = kids;
        }
        if (s.constraint) {
            j["constraint"] = constraint(*s.constraint);
        }
        if (s.equality) {
            j["equality"] = constraint(s.equality->to_constraint());
        }
        j["certificate"] = certificate(s.certificate);
        return j;
    }

    // ---- reading ----

    VarId var(const json& j) const {
        const std::string n = str(j);
        auto v = inst_.find_var(n);
        if (!v) {
            fail("unknown variable '" + n + "'");
        }
        return *v;
    }

    LinConstraint read_constraint(const json& j) const {
        try {
            return parse_linear_constraint(str(j), inst_);
        } catch (const ParseError& e) {
            fail(std::string("bad constraint: ") + e.what());
        }
    }

    SimpleEquality read_equality(const json& j) const {
        const LinConstraint c = read_constraint(j);
        const auto& t = c.lhs.terms();
        if (c.rel == Relation::Eq && t.size() == 1 && t[0].second == 1) {
            return SimpleEquality::fix(t[0].first, c.rhs);
        }
        if (c.rel == Relation::Eq && t.size() == 2 && t[0].second == 1 && t[1].second == -1) {
            return SimpleEquality::diff(t[0].first, t[1].first, c.rhs);
        }
        if (c.rel == Relation::Eq && t.size() == 2 && t[0].second == -1 && t[1].second == 1) {
            return SimpleEquality::diff(t[1].first, t[0].first, c.rhs);
        }
        fail("not a simple equality: " + j.dump());
    }

    TheoryLiteral read_literal(const json& j) const {
        const std::string kind = str(field(j, "lit"));
        if (kind == "eq" || kind == "diseq") {
            const VarId x = var(field(j, "x"));
            const VarId y = var(field(j, "y"));
            Int off = int_of(field(j, "offset"));
            return kind == "eq" ? TheoryLiteral::eq(x, y, off) : TheoryLiteral::diseq(x, y, off);
        }
        if (kind == "true") {
            return TheoryLiteral::atom_true(var(field(j, "var")));
        }
        if (kind == "false") {
            return TheoryLiteral::atom_false(var(field(j, "var")));
        }
        fail("unknown literal kind '" + kind + "'");
    }

    std::vector<TheoryLiteral> read_literals(const json& j) const {
        if (!j.is_array()) {
            fail("expected a literal list");
        }
        std::vector<TheoryLiteral> out;
        for (const auto& l : j) {
            out.push_back(read_literal(l));
        }
        return out;
    }

    static std::vector<Multiplier> read_multipliers(const json& j) {
        if (!j.is_array()) {
            fail("expected a multiplier list");
        }
        std::vector<Multiplier> out;
        for (const auto& m : j) {
            if (!m.is_array() || m.size() != 4 || !m[1].is_number_unsigned()) {
                fail("bad multiplier " + m.dump());
            }
            Multiplier x;
            const std::string k = str(m[0]);
            if (k == "C") {
                x.row.kind = RowRef::Kind::Constraint;
            } else if (k == "D") {
                x.row.kind = RowRef::Kind::Equality;
            } else if (k == "lo") {
                x.row.kind = RowRef::Kind::Lower;
            } else if (k == "hi") {
                x.row.kind = RowRef::Kind::Upper;
            } else if (k == "line") {
                x.row.kind = RowRef::Kind::Line;
            } else {
                fail("unknown row kind '" + k + "'");
            }
            const auto idx = m[1].get<std::uint64_t>();
            if (idx > UINT32_MAX) {
                fail("row index out of range");
            }
            x.row.index = static_cast<std::uint32_t>(idx);
            const std::string sense = str(m[2]);
            if (sense != "ge" && sense != "le") {
                fail("unknown sense '" + sense + "'");
            }
            x.sense = sense == "ge" ? Sense::Ge : Sense::Le;
            x.weight = rat_of(m[3]);
            out.push_back(std::move(x));
        }
        return out;
    }

    static std::vector<CgDerivation> read_derivations(const json& j) {
        if (!j.is_array()) {
            fail("expected a derivation list");
        }
        std::vector<CgDerivation> out;
        for (const auto& d : j) {
            if (!d.is_array()) {
                fail("expected a derivation");
            }
            CgDerivation der;
            for (const auto& line : d) {
                der.lines.push_back(CgLine{read_multipliers(line)});
            }
            out.push_back(std::move(der));
        }
        return out;
    }

    static TheoryToken read_token(const json& j) { return {str(field(j, "theory")), str(field(j, "digest"))}; }

    Assignment read_model(const json& j) const {
        if (!j.is_object()) {
            fail("expected a model object");
        }
        std::vector<std::optional<Int>> vals(inst_.num_vars());
        for (const auto& [k, v] : j.items()) {
            vals[var(json(k)).index] = int_of(v);
        }
        std::vector<Int> out;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (!vals[i]) {
                fail("model misses variable '" + inst_.name(VarId{static_cast<std::uint32_t>(i)}) + "'");
            }
            out.push_back(*vals[i]);
        }
        return Assignment(std::move(out));
    }

    static LbDual read_lb(const json& j) {
        LbDual d;
        const std::string b = str(field(j, "bound"));
        if (b == "-inf") {
            d.bound = ObjValue::neg_inf();
        } else if (b == "+inf") {
            d.bound = ObjValue::pos_inf();
        } else {
            d.bound = ObjValue::finite(int_of(json(b)));
        }
        d.terms = read_multipliers(field(j, "terms"));
        return d;
    }

    Certificate read_certificate(const json& j) const {
        const std::string kind = str(field(j, "kind"));
        if (kind == "dichotomy") {
            return BranchDichotomy{var(field(j, "var")), int_of(field(j, "split"))};
        }
        if (kind == "trichotomy") {
            return BranchTrichotomy{var(field(j, "x")), var(field(j, "y")), int_of(field(j, "offset"))};
        }
        if (kind == "conflict-split") {
            return BranchConflictSplit{read_literals(field(j, "core"))};
        }
        if (kind == "cg-cut") {
            return CgCut{read_derivations(field(j, "derivations"))};
        }
        if (kind == "farkas") {
            return Farkas{read_multipliers(field(j, "terms"))};
        }
        if (kind == "bound-fix") {
            return BoundFix{read_derivations(field(j, "derivations"))};
        }
        if (kind == "lb-dual") {
            return read_lb(j);
        }
        if (kind == "retire") {
            return RetireEvidence{read_model(field(j, "model")), read_lb(field(j, "lb")), read_token(field(j, "token"))};
        }
        if (kind == "unbounded") {
            UnboundedEvidence u;
            u.model = read_model(field(j, "model"));
            const json& ray = field(j, "ray");
            if (!ray.is_array()) {
                fail("expected a ray list");
            }
            for (const auto& e : ray) {
                if (!e.is_array() || e.size() != 2) {
                    fail("bad ray entry " + e.dump());
                }
                u.ray.emplace_back(var(e[0]), int_of(e[1]));
            }
            u.token = read_token(field(j, "token"));
            return u;
        }
        if (kind == "tlemma") {
            return TLemma{read_literals(field(j, "asserted")), read_derivations(field(j, "derivations")),
                          read_token(field(j, "token"))};
        }
        if (kind == "subsume") {
            return SubsumeSyntactic{};
        }
        fail("unknown certificate kind '" + kind + "'");
    }

    Step read(const json& j) const {
        Step s;
        const std::string rule = str(field(j, "rule"));
        auto r = parse_rule(rule);
        if (!r) {
            fail("unknown rule '" + rule + "'");
        }
        s.rule = *r;
        const json& targets = field(j, "targets");
        if (!targets.is_array()) {
            fail("targets must be a list");
        }
        for (const auto& t : targets) {
            if (!t.is_number_unsigned()) {
                fail("bad target " + t.dump());
            }
            s.targets.push_back(t.get<SubproblemId>());
        }
        if (j.contains("children")) {
            for (const auto& child : j.at("children")) {
                std::vector<LinConstraint> cs;
                for (const auto& c : child) {
                    cs.push_back(read_constraint(c));
                }
                s.children.push_back(std::move(cs));
            }
        }
        if (j.contains("constraint")) {
            s.constraint = read_constraint(j.at("constraint"));
        }
        if (j.contains("equality")) {
            s.equality = read_equality(j.at("equality"));
        }
        s.certificate = read_certificate(field(j, "certificate"));
        return s;
    }

private:
    const ImtInstance& inst_;
    VarNames quoted_;
};

json parse_json(std::string_view line, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw TraceFormatError(lineno, e.what());
    }
}

template <class F>
auto guarded(std::size_t lineno, F&& f) {
    try {
        return f();
    } catch (const Fail& e) {
        throw TraceFormatError(lineno, e.msg);
    } catch (const json::exception& e) {
        throw TraceFormatError(lineno, e.what());
    }
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back(line);
        if (nl == std::string_view::npos) {
            break;
        }
        text.remove_prefix(nl + 1);
    }
    return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

}  // namespace

std::string write_step(const Step& step, const ImtInstance& inst) { return Codec(inst).step(step).dump(); }

Step read_step(std::string_view line, const ImtInstance& inst) {
    const json j = parse_json(line, 1);
    return guarded(1, [&] { return Codec(inst).read(j); });
}

std::string write_trace(const TraceFile& file, const ImtInstance& inst) {
    json header{{"format", "imt-trace"}, {"version", 1}, {"digest", file.trace.instance_digest}};
    header["default_bound"] = file.default_bound ? json(to_string(*file.default_bound)) : json(nullptr);
    std::string out = header.dump() + "\n";
    const Codec codec(inst);
    for (const auto& s : file.trace.steps) {
        out += codec.step(s).dump();
        out += "\n";
    }
    return out;
}

TraceFile read_trace_header(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty() || blank(lines[0])) {
        throw TraceFormatError(1, "missing header");
    }
    const json h = parse_json(lines[0], 1);
    return guarded(1, [&] {
        if (str(field(h, "format")) != "imt-trace") {
            fail("not an imt-trace file");
        }
        const json& v = field(h, "version");
        if (!v.is_number_integer() || v.get<int>() != 1) {
            fail("unsupported version " + v.dump());
        }
        TraceFile f;
        f.trace.instance_digest = str(field(h, "digest"));
        if (h.contains("default_bound") && !h.at("default_bound").is_null()) {
            f.default_bound = int_of(h.at("default_bound"));
        }
        return f;
    });
}

TraceFile read_trace(std::string_view text, const ImtInstance& inst) {
    TraceFile f = read_trace_header(text);
    const auto lines = lines_of(text);
    const Codec codec(inst);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (blank(lines[i])) {
            continue;
        }
        const json j = parse_json(lines[i], i + 1);
        f.trace.steps.push_back(guarded(i + 1, [&] { return codec.read(j); }));
    }
    return f;
}

}  // namespace imt
