#pragma once

#include <string>

#include "evidential/dst.hpp"
#include "evidential/mass.hpp"
#include "evidential/query.hpp"

namespace evidential {

namespace detail {

// Resolution errors carry the offending atom; raised when an expression is
// bound to a concrete scope.
inline void resolve_atom(const Scope& scope, const QueryExpr& atom) {
    auto idx = scope.index_of(atom.var);
    if (!idx) throw ValidateError("unknown variable '" + atom.var + "' in expression");
    if (!scope.variable(*idx).has_value(atom.value))
        throw ValidateError("unknown value '" + atom.value + "' for variable '" + atom.var + "'");
}

}  // namespace detail

inline bool eval_expr(const QueryExpr& e, const Scope& scope, std::size_t config) {
    switch (e.kind) {
        case QueryExpr::Kind::atom: {
            auto idx = scope.index_of(e.var);
            if (!idx) throw ValidateError("unknown variable '" + e.var + "' in expression");
            const Variable& v = scope.variable(*idx);
            return v.domain[scope.digit(config, *idx)] == e.value;
        }
        case QueryExpr::Kind::neg:
            return !eval_expr(e.children[0], scope, config);
        case QueryExpr::Kind::conj:
            for (const auto& c : e.children)
                if (!eval_expr(c, scope, config)) return false;
            return true;
        case QueryExpr::Kind::disj:
            for (const auto& c : e.children)
                if (eval_expr(c, scope, config)) return true;
            return false;
    }
    return false;
}

inline void resolve_expr(const Scope& scope, const QueryExpr& e) {
    if (e.kind == QueryExpr::Kind::atom) {
        detail::resolve_atom(scope, e);
        return;
    }
    for (const auto& c : e.children) resolve_expr(scope, c);
}

// The subset of the frame on which the expression holds.
inline Bitset satisfying_set(const Scope& scope, const QueryExpr& e) {
    resolve_expr(scope, e);
    Bitset set(scope.frame_size());
    for (std::size_t c = 0; c < scope.frame_size(); ++c)
        if (eval_expr(e, scope, c)) set.set(c);
    return set;
}

// Categorical bpa carrying mass 1 on the satisfying set of the expression.
inline MassFunction logical_bpa(const Scope& scope, const QueryExpr& e) {
    Bitset set = satisfying_set(scope, e);
    if (set.none())
        throw ValidateError("expression " + to_string(e) + " is unsatisfiable over " +
                            scope.describe());
    return MassFunction::categorical(scope, set);
}

}  // namespace evidential
