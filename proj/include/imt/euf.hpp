// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Congruence closure with integer offsets over the interface variables and FunDef
// atoms of an instance, plus the Theory adapter the kernel consults.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "imt/certificate.hpp"
#include "imt/kernel.hpp"
#include "imt/model.hpp"

namespace imt {

class UnknownVariable : public ModelError {
public:
    using ModelError::ModelError;
};

class InconsistentSession : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using ConflictCore = std::vector<TheoryLiteral>;

struct TheoryCheck {
    bool sat = true;
    ConflictCore core;  // non-empty iff !sat
};

class EufSession {
public:
    explicit EufSession(const ImtInstance& inst);

    /// Records `l` and closes. Once a conflict is found the session stays inconsistent
    /// and keeps reporting the same core.
    TheoryCheck assert_literal(const TheoryLiteral& l);
    TheoryCheck check() const;

    /// VarEq literals between variables the closure has put in one class.
    std::vector<TheoryLiteral> implied_equalities() const;
    /// Some c with x = y + c entailed, if the closure knows one.
    std::optional<Int> equal_offset(VarId x, VarId y) const;

    void push();
    void pop();

    const std::vector<TheoryLiteral>& asserted() const { return asserted_; }

    /// Union-find with offsets: every node n satisfies n = root + offset.
    struct Closure {
        struct App {
            std::string fun;
            std::vector<std::size_t> args;
        };

        std::vector<std::size_t> parent;
        std::vector<Int> offset;  // n = parent[n] + offset[n]
        std::vector<std::size_t> size;
        std::vector<App> apps;  // app node i is at index num_vars + i
        std::vector<std::tuple<std::size_t, std::size_t, Int>> diseqs;  // a != b + c
        bool conflict = false;

        std::pair<std::size_t, Int> find(std::size_t n) const;
        bool merge(std::size_t a, std::size_t b, const Int& c);
        bool add_diseq(std::size_t a, std::size_t b, const Int& c);
        /// Congruence to a fixed point, then disequality scan.
        bool close();
    };

    const Closure& closure() const { return closure_; }

private:
    bool apply(Closure& cl, const TheoryLiteral& l) const;
    Closure base() const;
    bool consistent(std::span<const TheoryLiteral> lits) const;
    ConflictCore minimize(std::vector<TheoryLiteral> lits) const;
    void validate(const TheoryLiteral& l) const;

    const ImtInstance* inst_;
    std::size_t num_vars_;
    Closure closure_;
    std::vector<TheoryLiteral> asserted_;
    ConflictCore core_;
    struct Mark {
        Closure closure;
        std::size_t asserted;
        ConflictCore core;
    };
    std::vector<Mark> marks_;
};

/// Exactly one of x = y / x != y (offset 0) per unordered pair, read off `model`.
std::vector<TheoryLiteral> arrangement(std::span<const VarId> vars, const Assignment& model);

/// Witness of a functional-consistency failure: indices into inst.atoms(). A single
/// atom whose truth disagrees with its annotation is reported as (i, i).
struct ConsistencyViolation {
    std::size_t first;
    std::size_t second;
};

/// Full-assignment T-model check: nullopt when `model` is EUF-consistent with I.
std::optional<ConsistencyViolation> functional_consistency(const ImtInstance& inst, const Assignment& model);

class EufTheory : public Theory {
public:
    std::string name() const override { return "euf"; }

    /// Token for `model` when it is a T-model of I, else nullopt.
    std::optional<TheoryToken> certify_model(const ImtInstance& inst, const Assignment& model) const;
    /// Token for `lemma` when asserted /\ I entails it, else nullopt.
    std::optional<TheoryToken> certify_lemma(const ImtInstance& inst, std::span<const TheoryLiteral> asserted,
                                             const LinConstraint& lemma) const;

    bool endorse_model(const ImtInstance& inst, const Assignment& model, const TheoryToken& token) const override;
    bool endorse_lemma(const ImtInstance& inst, std::span<const TheoryLiteral> asserted, const LinConstraint& lemma,
                       const TheoryToken& token) const override;

    static TheoryToken model_token(const Assignment& model);
    static TheoryToken lemma_token(std::span<const TheoryLiteral> asserted, const LinConstraint& lemma);
};

}  // namespace imt
