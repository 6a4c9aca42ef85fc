// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#include "imt/euf.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "imt/digest.hpp"

namespace imt {

// ---------------------------------------------------------------- Closure

std::pair<std::size_t, Int> EufSession::Closure::find(std::size_t n) const {
    Int off = 0;
    while (parent[n] != n) {
        off += offset[n];
        n = parent[n];
    }
    return {n, off};
}

bool EufSession::Closure::merge(std::size_t a, std::size_t b, const Int& c) {
    if (conflict) {
        return false;
    }
    auto [ra, oa] = find(a);
    auto [rb, ob] = find(b);
    // a = b + c, a = ra + oa, b = rb + ob  =>  ra = rb + d
    const Int d = ob + c - oa;
    if (ra == rb) {
        if (d != 0) {
            conflict = true;
        }
        return !conflict;
    }
    if (size[ra] <= size[rb]) {
        parent[ra] = rb;
        offset[ra] = d;
        size[rb] += size[ra];
    } else {
        parent[rb] = ra;
        offset[rb] = -d;
        size[ra] += size[rb];
    }
    return true;
}

bool EufSession::Closure::add_diseq(std::size_t a, std::size_t b, const Int& c) {
    diseqs.emplace_back(a, b, c);
    return close();
}

bool EufSession::Closure::close() {
    if (conflict) {
        return false;
    }
    const std::size_t first_app = parent.size() - apps.size();
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::pair<std::string, std::vector<std::pair<std::size_t, Int>>>, std::size_t> table;
        for (std::size_t i = 0; i < apps.size(); ++i) {
            std::vector<std::pair<std::size_t, Int>> sig;
            sig.reserve(apps[i].args.size());
            for (auto a : apps[i].args) {
                sig.push_back(find(a));
            }
            const std::size_t node = first_app + i;
            auto [it, fresh] = table.try_emplace({apps[i].fun, std::move(sig)}, node);
            if (fresh) {
                continue;
            }
            auto [r1, o1] = find(node);
            auto [r2, o2] = find(it->second);
            if (r1 != r2 || o1 != o2) {
                if (!merge(node, it->second, 0)) {
                    return false;
                }
                changed = true;
            }
        }
    }
    for (const auto& [a, b, c] : diseqs) {
        auto [ra, oa] = find(a);
        auto [rb, ob] = find(b);
        if (ra == rb && oa == ob + c) {
            conflict = true;
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- Session

EufSession::EufSession(const ImtInstance& inst) : inst_(&inst), num_vars_(inst.num_vars()) {
    closure_ = base();
}

EufSession::Closure EufSession::base() const {
    Closure cl;
    std::size_t nodes = num_vars_;
    std::vector<std::size_t> app_node(inst_->atoms().size(), 0);
    for (std::size_t i = 0; i < inst_->atoms().size(); ++i) {
        if (const auto* f = std::get_if<FunDef>(&inst_->atoms()[i].atom)) {
            app_node[i] = nodes++;
            Closure::App app{f->fun, {}};
            for (VarId a : f->args) {
                app.args.push_back(a.index);
            }
            cl.apps.push_back(std::move(app));
        }
    }
    cl.parent.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        cl.parent[n] = n;
    }
    cl.offset.assign(nodes, 0);
    cl.size.assign(nodes, 1);
    for (std::size_t i = 0; i < inst_->atoms().size(); ++i) {
        const auto& atom = inst_->atoms()[i];
        if (atom.annotation) {
            continue;
        }
        if (const auto* f = std::get_if<FunDef>(&atom.atom)) {
            cl.merge(f->result.index, app_node[i], 0);
        } else {
            const auto& e = std::get<EqAtom>(atom.atom);
            cl.merge(e.x.index, e.y.index, 0);
        }
    }
    cl.close();
    return cl;
}

void EufSession::validate(const TheoryLiteral& l) const {
    if (l.x.index >= num_vars_ || (!l.is_atom() && l.y.index >= num_vars_)) {
        throw UnknownVariable("theory literal mentions an unknown variable");
    }
    if (l.is_atom()) {
        const bool annotates = std::any_of(inst_->atoms().begin(), inst_->atoms().end(),
                                           [&](const InterfaceAtom& a) { return a.annotation == l.x; });
        if (!annotates) {
            throw UnknownVariable("'" + inst_->name(l.x) + "' annotates no interface atom");
        }
    }
}

bool EufSession::apply(Closure& cl, const TheoryLiteral& l) const {
    switch (l.kind) {
    case TheoryLiteral::Kind::VarEq:
        if (!cl.merge(l.x.index, l.y.index, l.offset)) {
            return false;
        }
        return cl.close();
    case TheoryLiteral::Kind::VarDiseq: return cl.add_diseq(l.x.index, l.y.index, l.offset);
    case TheoryLiteral::Kind::AtomTrue:
    case TheoryLiteral::Kind::AtomFalse: {
        const bool positive = l.kind == TheoryLiteral::Kind::AtomTrue;
        std::size_t app = num_vars_;
        for (const auto& atom : inst_->atoms()) {
            const auto* f = std::get_if<FunDef>(&atom.atom);
            const std::size_t this_app = f ? app++ : 0;
            if (atom.annotation != l.x) {
                continue;
            }
            const std::size_t a = f ? f->result.index : std::get<EqAtom>(atom.atom).x.index;
            const std::size_t b = f ? this_app : std::get<EqAtom>(atom.atom).y.index;
            if (positive) {
                if (!cl.merge(a, b, 0)) {
                    return false;
                }
            } else {
                cl.diseqs.emplace_back(a, b, 0);
            }
        }
        return cl.close();
    }
    }
    return false;
}

bool EufSession::consistent(std::span<const TheoryLiteral> lits) const {
    Closure cl = base();
    for (const auto& l : lits) {
        if (!apply(cl, l)) {
            return false;
        }
    }
    return true;
}

ConflictCore EufSession::minimize(std::vector<TheoryLiteral> lits) const {
    // Deletion pass over all but the last literal, which is critical by construction.
    std::size_t i = 0;
    while (i + 1 < lits.size()) {
        std::vector<TheoryLiteral> trial;
        trial.reserve(lits.size() - 1);
        for (std::size_t j = 0; j < lits.size(); ++j) {
            if (j != i) {
                trial.push_back(lits[j]);
            }
        }
        if (!consistent(trial)) {
            lits = std::move(trial);
        } else {
            ++i;
        }
    }
    return lits;
}

TheoryCheck EufSession::assert_literal(const TheoryLiteral& l) {
    validate(l);
    asserted_.push_back(l);
    if (!core_.empty()) {
        return {false, core_};
    }
    if (!apply(closure_, l)) {
        core_ = minimize(asserted_);
        return {false, core_};
    }
    return {};
}

TheoryCheck EufSession::check() const {
    if (!core_.empty()) {
        return {false, core_};
    }
    return {};
}

std::optional<Int> EufSession::equal_offset(VarId x, VarId y) const {
    if (x.index >= num_vars_ || y.index >= num_vars_) {
        throw UnknownVariable("equal_offset on an unknown variable");
    }
    auto [rx, ox] = closure_.find(x.index);
    auto [ry, oy] = closure_.find(y.index);
    if (rx != ry) {
        return std::nullopt;
    }
    return ox - oy;
}

std::vector<TheoryLiteral> EufSession::implied_equalities() const {
    if (!core_.empty()) {
        throw InconsistentSession("implied_equalities on an inconsistent session");
    }
    std::map<std::size_t, std::vector<std::pair<VarId, Int>>> classes;
    for (std::uint32_t v = 0; v < num_vars_; ++v) {
        auto [r, o] = closure_.find(v);
        classes[r].emplace_back(VarId{v}, o);
    }
    std::vector<TheoryLiteral> out;
    for (const auto& [root, members] : classes) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                out.push_back(TheoryLiteral::eq(members[i].first, members[j].first,
                                                members[i].second - members[j].second));
            }
        }
    }
    return out;
}

void EufSession::push() { marks_.push_back(Mark{closure_, asserted_.size(), core_}); }

void EufSession::pop() {
    if (marks_.empty()) {
        throw std::logic_error("pop without matching push");
    }
    closure_ = std::move(marks_.back().closure);
    asserted_.resize(marks_.back().asserted);
    core_ = std::move(marks_.back().core);
    marks_.pop_back();
}

// ---------------------------------------------------------------- model checks

std::vector<TheoryLiteral> arrangement(std::span<const VarId> vars, const Assignment& model) {
    std::vector<TheoryLiteral> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        for (std::size_t j = i + 1; j < vars.size(); ++j) {
            out.push_back(model[vars[i]] == model[vars[j]] ? TheoryLiteral::eq(vars[i], vars[j])
                                                           : TheoryLiteral::diseq(vars[i], vars[j]));
        }
    }
    return out;
}

std::optional<ConsistencyViolation> functional_consistency(const ImtInstance& inst, const Assignment& model) {
    const auto& atoms = inst.atoms();
    for (VarId v : inst.theory_vars()) {
        (void)model[v];  // throws MissingVariable
    }
    const auto expected = [&](const InterfaceAtom& a) { return !a.annotation || model[*a.annotation] > 0; };
    using Key = std::pair<std::string, std::vector<Int>>;
    const auto key_of = [&](const FunDef& f) {
        Key k{f.fun, {}};
        for (VarId a : f.args) {
            k.second.push_back(model[a]);
        }
        return k;
    };
    std::map<Key, std::size_t> defined;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (const auto* e = std::get_if<EqAtom>(&atoms[i].atom)) {
            if ((model[e->x] == model[e->y]) != expected(atoms[i])) {
                return ConsistencyViolation{i, i};
            }
            continue;
        }
        if (!expected(atoms[i])) {
            continue;
        }
        const auto& f = std::get<FunDef>(atoms[i].atom);
        auto [it, fresh] = defined.try_emplace(key_of(f), i);
        if (!fresh && model[std::get<FunDef>(atoms[it->second].atom).result] != model[f.result]) {
            return ConsistencyViolation{it->second, i};
        }
    }
    // A negated definition v != f(args) only fails when f(args) is pinned to v.
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto* f = std::get_if<FunDef>(&atoms[i].atom);
        if (!f || expected(atoms[i])) {
            continue;
        }
        auto it = defined.find(key_of(*f));
        if (it != defined.end() && model[std::get<FunDef>(atoms[it->second].atom).result] == model[f->result]) {
            return ConsistencyViolation{it->second, i};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- theory adapter

namespace {

char kind_tag(TheoryLiteral::Kind k) {
    switch (k) {
    case TheoryLiteral::Kind::VarEq: return 'E';
    case TheoryLiteral::Kind::VarDiseq: return 'N';
    case TheoryLiteral::Kind::AtomTrue: return 'T';
    case TheoryLiteral::Kind::AtomFalse: return 'F';
    }
    return '?';
}

bool entails(const ImtInstance& inst, std::span<const TheoryLiteral> asserted, const LinConstraint& lemma) {
    EufSession s(inst);
    for (const auto& l : asserted) {
        if (!s.assert_literal(l).sat) {
            return true;
        }
    }
    const LinConstraint c = normalize(lemma);
    if (c.lhs.empty()) {
        return compare(0, c.rel, c.rhs);
    }
    if (c.lhs.size() != 2) {
        return false;
    }
    const auto& [x, kx] = c.lhs.terms()[0];
    const auto& [y, ky] = c.lhs.terms()[1];
    if (kx + ky != 0 || (kx != 1 && kx != -1)) {
        return false;
    }
    const auto off = s.equal_offset(x, y);
    return off && compare(kx * *off, c.rel, c.rhs);
}

}  // namespace

TheoryToken EufTheory::model_token(const Assignment& model) {
    std::string claim = "euf|model|";
    for (const auto& v : model.values()) {
        claim += to_string(v);
        claim += ',';
    }
    return TheoryToken{"euf", hex_digest(claim)};
}

TheoryToken EufTheory::lemma_token(std::span<const TheoryLiteral> asserted, const LinConstraint& lemma) {
    std::ostringstream claim;
    claim << "euf|lemma|";
    for (const auto& l : asserted) {
        claim << kind_tag(l.kind) << l.x.index;
        if (!l.is_atom()) {
            claim << ':' << l.y.index << ':' << l.offset;
        }
        claim << ';';
    }
    claim << '|';
    for (const auto& [v, k] : lemma.lhs.terms()) {
        claim << k << '*' << v.index << ' ';
    }
    claim << to_string(lemma.rel) << ' ' << lemma.rhs;
    return TheoryToken{"euf", hex_digest(claim.str())};
}

std::optional<TheoryToken> EufTheory::certify_model(const ImtInstance& inst, const Assignment& model) const {
    try {
        if (model.size() != inst.num_vars() || functional_consistency(inst, model)) {
            return std::nullopt;
        }
    } catch (const ModelError&) {
        return std::nullopt;
    }
    return model_token(model);
}

std::optional<TheoryToken> EufTheory::certify_lemma(const ImtInstance& inst, std::span<const TheoryLiteral> asserted,
                                                    const LinConstraint& lemma) const {
    try {
        if (!entails(inst, asserted, lemma)) {
            return std::nullopt;
        }
    } catch (const ModelError&) {
        return std::nullopt;
    }
    return lemma_token(asserted, lemma);
}

bool EufTheory::endorse_model(const ImtInstance& inst, const Assignment& model, const TheoryToken& token) const {
    const auto expected = certify_model(inst, model);
    return expected && *expected == token;
}

bool EufTheory::endorse_lemma(const ImtInstance& inst, std::span<const TheoryLiteral> asserted,
                              const LinConstraint& lemma, const TheoryToken& token) const {
    const auto expected = certify_lemma(inst, asserted, lemma);
    return expected && *expected == token;
}

}  // namespace imt
