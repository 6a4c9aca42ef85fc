// Copyright (c) IMT Solver contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Certificate mutations for fuzzing the kernel. Each mutation breaks a side condition
// outright (negative weight, missing row, inflated bound, forged token, children that
// no longer match), so a sound kernel has to reject every one of them.

#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "imt/certificate.hpp"

namespace imt::test {

struct Mutation {
    std::string what;
    Step step;
};

namespace detail {

inline void on_terms(const std::vector<Multiplier>& terms, const std::string& where,
                     const std::function<void(std::vector<Multiplier>, std::string)>& emit) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].weight == 0) {
            continue;
        }
        auto neg = terms;
        neg[i].weight = -neg[i].weight;
        emit(std::move(neg), where + ": negative weight");
        auto missing = terms;
        missing[i].row.index += 1000;
        emit(std::move(missing), where + ": row out of range");
        break;
    }
}

inline void on_derivations(const std::vector<CgDerivation>& ds, const std::string& where,
                           const std::function<void(std::vector<CgDerivation>, std::string)>& emit) {
    for (std::size_t d = 0; d < ds.size(); ++d) {
        for (std::size_t l = 0; l < ds[d].lines.size(); ++l) {
            on_terms(ds[d].lines[l].terms, where, [&](std::vector<Multiplier> t, std::string w) {
                auto copy = ds;
                copy[d].lines[l].terms = std::move(t);
                emit(std::move(copy), std::move(w));
            });
        }
    }
}

inline TheoryToken forged(TheoryToken t) {
    t.digest = t.digest.empty() ? std::string("0") : std::string(t.digest.rbegin(), t.digest.rend()) + "x";
    return t;
}

}  // namespace detail

inline std::vector<Mutation> certificate_mutations(const Step& step) {
    std::vector<Mutation> out;
    const auto with = [&](Certificate c, std::string what) {
        Step s = step;
        s.certificate = std::move(c);
        out.push_back(Mutation{std::move(what), std::move(s)});
    };
    const auto lb_mutations = [&](const LbDual& d, const std::function<Certificate(LbDual)>& wrap) {
        if (d.bound.is_finite()) {
            LbDual up = d;
            up.bound = ObjValue::finite(d.bound.value() + 1);
            with(wrap(std::move(up)), "lb: bound inflated");
        }
        detail::on_terms(d.terms, "lb", [&](std::vector<Multiplier> t, std::string w) {
            LbDual m = d;
            m.terms = std::move(t);
            with(wrap(std::move(m)), std::move(w));
        });
    };
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, BranchDichotomy>) {
                with(BranchDichotomy{c.var, c.split + 1}, "dichotomy: split moved");
            } else if constexpr (std::is_same_v<T, BranchTrichotomy>) {
                with(BranchTrichotomy{c.x, c.y, c.offset + 1}, "trichotomy: offset moved");
            } else if constexpr (std::is_same_v<T, BranchConflictSplit>) {
                auto core = c.core;
                if (core.size() > 1) {
                    core.pop_back();
                } else {
                    core.push_back(TheoryLiteral::atom_true(core.front().x));
                }
                with(BranchConflictSplit{core}, "conflict split: core changed");
            } else if constexpr (std::is_same_v<T, CgCut>) {
                detail::on_derivations(c.derivations, "cg",
                                       [&](std::vector<CgDerivation> d, std::string w) { with(CgCut{d}, w); });
            } else if constexpr (std::is_same_v<T, BoundFix>) {
                detail::on_derivations(c.derivations, "bound fix",
                                       [&](std::vector<CgDerivation> d, std::string w) { with(BoundFix{d}, w); });
            } else if constexpr (std::is_same_v<T, Farkas>) {
                detail::on_terms(c.terms, "farkas", [&](std::vector<Multiplier> t, std::string w) { with(Farkas{t}, w); });
            } else if constexpr (std::is_same_v<T, LbDual>) {
                lb_mutations(c, [](LbDual d) -> Certificate { return d; });
            } else if constexpr (std::is_same_v<T, RetireEvidence>) {
                with(RetireEvidence{c.model, c.lb_match, detail::forged(c.token)}, "retire: forged token");
                lb_mutations(c.lb_match,
                             [&](LbDual d) -> Certificate { return RetireEvidence{c.model, std::move(d), c.token}; });
            } else if constexpr (std::is_same_v<T, UnboundedEvidence>) {
                with(UnboundedEvidence{c.model, c.ray, detail::forged(c.token)}, "unbounded: forged token");
                with(UnboundedEvidence{c.model, {}, c.token}, "unbounded: zero ray");
            } else if constexpr (std::is_same_v<T, TLemma>) {
                with(TLemma{c.asserted, c.derivations, detail::forged(c.token)}, "tlemma: forged token");
                detail::on_derivations(c.derivations, "tlemma", [&](std::vector<CgDerivation> d, std::string w) {
                    with(TLemma{c.asserted, d, c.token}, w);
                });
            }
        },
        step.certificate);
    return out;
}

}  // namespace imt::test
