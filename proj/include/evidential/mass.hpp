#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evidential/bitset.hpp"
#include "evidential/domain.hpp"
#include "evidential/errors.hpp"

namespace evidential {

// A subset of the enumerated frame of a scope.
struct FocalSet {
    Scope scope;
    Bitset set;
};

enum class SetFunctionKind { belief, plausibility, commonality };

// A scoped basic probability assignment, stored as a sparse list of
// (focal set, mass) with focals in canonical (bitset value) order.
// The pseudo flag marks pseudo-belief functions: negative masses are
// permitted as long as every commonality value stays above -kPruneTol.
class MassFunction {
public:
    using Focal = std::pair<Bitset, double>;

    // Vacuous bpa on the empty scope.
    MassFunction() : MassFunction(Scope(), {{Bitset::ones(1), 1.0}}, false) {}

    // Assembles without validating; entries must already be merged and sorted.
    static MassFunction make(Scope scope, std::vector<Focal> focals, bool pseudo) {
        return MassFunction(std::move(scope), std::move(focals), pseudo);
    }

    // Merges duplicate sets by summing. Without `normalize`, the total mass
    // must already be 1 within kEqualityTol; with it, masses are rescaled.
    static MassFunction from_focals(const Scope& scope, const std::vector<Focal>& entries,
                                    bool normalize = false) {
        if (entries.empty()) throw ValidateError("mass function needs at least one focal entry");
        std::map<Bitset, double> merged;
        for (const auto& [set, mass] : entries) {
            if (set.size() != scope.frame_size())
                throw ValidateError("focal set does not match scope " + scope.describe());
            merged[set] += mass;
        }
        double total = 0;
        for (const auto& [set, mass] : merged) total += mass;
        std::vector<Focal> focals;
        bool pseudo = false;
        if (normalize) {
            if (std::abs(total) < kPruneTol)
                throw ValidateError("cannot normalize mass function with zero total mass");
        } else if (std::abs(total - 1.0) > kEqualityTol) {
            throw ValidateError("focal masses sum to " + format_real(total) +
                                ", expected 1 (request normalization to rescale)");
        }
        double inv = normalize ? 1.0 / total : 1.0;
        for (const auto& [set, mass] : merged) {
            double v = mass * inv;
            if (std::abs(v) < kPruneTol) continue;
            if (v < 0) pseudo = true;
            focals.push_back({set, v});
        }
        if (focals.empty()) throw ValidateError("mass function has no focal sets");
        return make(scope, std::move(focals), pseudo);
    }

    static MassFunction vacuous(const Scope& scope) {
        return make(scope, {{Bitset::ones(scope.frame_size()), 1.0}}, false);
    }

    // m(A) = 1. The vacuous bpa is the A = Theta case.
    static MassFunction categorical(const Scope& scope, const Bitset& set) {
        if (set.size() != scope.frame_size())
            throw ValidateError("focal set does not match scope " + scope.describe());
        if (set.none()) throw ValidateError("categorical bpa requires a nonempty set");
        return make(scope, {{set, 1.0}}, false);
    }

    // m(A) = alpha, m(Theta) = 1 - alpha, with alpha in (0,1].
    static MassFunction simple_support(const Scope& scope, const Bitset& set, double alpha) {
        if (set.none()) throw ValidateError("simple support function requires a nonempty set");
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ValidateError("simple support weight must lie in (0,1], got " +
                                format_real(alpha));
        if (alpha >= 1.0 - kPruneTol || set == Bitset::ones(scope.frame_size()))
            return categorical(scope, set);
        return make(scope, sorted({{set, alpha}, {Bitset::ones(scope.frame_size()), 1.0 - alpha}}),
                    false);
    }

    const Scope& scope() const { return scope_; }
    const std::vector<Focal>& focals() const { return focals_; }
    bool pseudo() const { return pseudo_; }

    double total_mass() const {
        double t = 0;
        for (const auto& [set, mass] : focals_) t += mass;
        return t;
    }

    double mass_of(const Bitset& set) const {
        auto it = std::lower_bound(focals_.begin(), focals_.end(), set,
                                   [](const Focal& f, const Bitset& s) { return f.first < s; });
        if (it != focals_.end() && it->first == set) return it->second;
        return 0.0;
    }

    bool is_vacuous() const {
        return focals_.size() == 1 && focals_[0].first == Bitset::ones(scope_.frame_size()) &&
               std::abs(focals_[0].second - 1.0) <= kEqualityTol;
    }

    // True when every focal is a single configuration (a discrete
    // probability distribution in bpa form).
    bool bayesian() const {
        for (const auto& [set, mass] : focals_)
            if (set.count() != 1) return false;
        return true;
    }

    // One line per focal: "{config,config,...}: mass", focals in canonical
    // order, masses with 12 significant digits.
    std::string render() const {
        std::string out;
        for (const auto& [set, mass] : focals_) {
            std::string line = "{";
            bool first = true;
            set.for_each_bit([&](std::size_t c) {
                if (!first) line += ',';
                first = false;
                line += scope_.config_label(c);
            });
            line += "}: ";
            line += format_real(mass);
            out += line;
            out += '\n';
        }
        return out;
    }

private:
    MassFunction(Scope scope, std::vector<Focal> focals, bool pseudo)
        : scope_(std::move(scope)), focals_(std::move(focals)), pseudo_(pseudo) {}

    static std::vector<Focal> sorted(std::vector<Focal> focals) {
        std::sort(focals.begin(), focals.end(),
                  [](const Focal& a, const Focal& b) { return a.first < b.first; });
        return focals;
    }

    Scope scope_;
    std::vector<Focal> focals_;
    bool pseudo_ = false;
};

// Eq.-style set functions derived from m: Bel sums subsets, Pl sums
// intersecting sets, Q sums supersets.
inline double set_function(const MassFunction& m, SetFunctionKind kind, const Bitset& set) {
    if (set.size() != m.scope().frame_size())
        throw ValidateError("set function argument does not match scope " + m.scope().describe());
    double acc = 0;
    for (const auto& [focal, mass] : m.focals()) {
        switch (kind) {
            case SetFunctionKind::belief:
                if (focal.any() && focal.is_subset_of(set)) acc += mass;
                break;
            case SetFunctionKind::plausibility:
                if (focal.intersects(set)) acc += mass;
                break;
            case SetFunctionKind::commonality:
                if (set.is_subset_of(focal)) acc += mass;
                break;
        }
    }
    return acc;
}

inline double belief(const MassFunction& m, const Bitset& set) {
    return set_function(m, SetFunctionKind::belief, set);
}
inline double plausibility(const MassFunction& m, const Bitset& set) {
    return set_function(m, SetFunctionKind::plausibility, set);
}
inline double commonality(const MassFunction& m, const Bitset& set) {
    return set_function(m, SetFunctionKind::commonality, set);
}

// Removes the empty focal and rescales by 1/(1 - m(empty)).
inline MassFunction normalize_mass(const MassFunction& m) {
    double conflict = m.mass_of(Bitset(m.scope().frame_size()));
    if (conflict >= 1.0 - kPruneTol)
        throw ConflictError("total conflict: all mass assigned to the empty set");
    if (std::abs(conflict) < kPruneTol) return m;
    std::vector<MassFunction::Focal> focals;
    bool pseudo = false;
    for (const auto& [set, mass] : m.focals()) {
        if (set.none()) continue;
        double v = mass / (1.0 - conflict);
        if (std::abs(v) < kPruneTol) continue;
        if (v < 0) pseudo = true;
        focals.push_back({set, v});
    }
    if (focals.empty()) throw ConflictError("total conflict: all mass assigned to the empty set");
    return MassFunction::make(m.scope(), std::move(focals), pseudo);
}

}  // namespace evidential
