#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "evidential/dst.hpp"
#include "evidential/mass.hpp"

namespace evidential {

// The max-product counterparts of combination and projection. Values are
// degrees of support, not masses: results are deliberately left
// unnormalized, since only relative strengths matter for revision.

struct MaxCombined {
    MassFunction result;
    // Per result focal: every operand index pair (i in a, j in b) attaining
    // the maximum, in ascending order.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> sources;
};

inline MaxCombined combine_max_traced(const MassFunction& a, const MassFunction& b) {
    if (!(a.scope() == b.scope()))
        throw ValidateError("max-combination requires identical scopes, got " +
                            a.scope().describe() + " and " + b.scope().describe());
    struct Cell {
        double best;
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
    };
    std::map<Bitset, Cell> acc;
    for (std::size_t i = 0; i < a.focals().size(); ++i) {
        for (std::size_t j = 0; j < b.focals().size(); ++j) {
            Bitset inter = a.focals()[i].first & b.focals()[j].first;
            if (inter.none()) continue;
            double w = a.focals()[i].second * b.focals()[j].second;
            auto [it, fresh] = acc.try_emplace(inter, Cell{w, {{i, j}}});
            if (fresh) continue;
            if (w > it->second.best) {
                it->second.best = w;
                it->second.pairs.assign(1, {i, j});
            } else if (w == it->second.best) {
                it->second.pairs.push_back({i, j});
            }
        }
    }
    if (acc.empty())
        throw ConflictError("max-combination left no consistent set of propositions");
    MaxCombined out;
    std::vector<MassFunction::Focal> focals;
    for (auto& [set, cell] : acc) {
        focals.push_back({set, cell.best});
        std::sort(cell.pairs.begin(), cell.pairs.end());
        out.sources.push_back(std::move(cell.pairs));
    }
    out.result = MassFunction::make(a.scope(), std::move(focals), a.pseudo() || b.pseudo());
    return out;
}

// (m1 max+ m2)(A) = max{m1(B) * m2(C) | B n C = A}, empty intersections
// dropped, no normalization.
inline MassFunction combine_max(const MassFunction& a, const MassFunction& b) {
    return combine_max_traced(a, b).result;
}

struct MaxMarginalized {
    MassFunction result;
    // Per result focal: the pre-image focals attaining the maximum
    // (the argmax witnesses), in ascending order.
    std::vector<std::vector<Bitset>> witnesses;
};

inline MaxMarginalized marginalize_max_traced(const MassFunction& m, const Scope& target) {
    if (!m.scope().contains(target))
        throw ValidateError("max-projection target " + target.describe() +
                            " is not contained in " + m.scope().describe());
    struct Cell {
        double best;
        std::vector<Bitset> witnesses;
    };
    std::map<Bitset, Cell> acc;
    if (target == m.scope()) {
        for (const auto& [set, mass] : m.focals()) acc.try_emplace(set, Cell{mass, {set}});
    } else {
        auto proj = projection_table(m.scope(), target);
        std::size_t frame = target.frame_size();
        for (const auto& [set, mass] : m.focals()) {
            Bitset image(frame);
            set.for_each_bit([&](std::size_t c) { image.set(proj[c]); });
            auto [it, fresh] = acc.try_emplace(image, Cell{mass, {set}});
            if (fresh) continue;
            if (mass > it->second.best) {
                it->second.best = mass;
                it->second.witnesses.assign(1, set);
            } else if (mass == it->second.best) {
                it->second.witnesses.push_back(set);
            }
        }
    }
    MaxMarginalized out;
    std::vector<MassFunction::Focal> focals;
    for (auto& [set, cell] : acc) {
        focals.push_back({set, cell.best});
        std::sort(cell.witnesses.begin(), cell.witnesses.end());
        out.witnesses.push_back(std::move(cell.witnesses));
    }
    out.result = MassFunction::make(target, std::move(focals), m.pseudo());
    return out;
}

// Projected value at A = max over pre-images of A.
inline MassFunction marginalize_max(const MassFunction& m, const Scope& target) {
    return marginalize_max_traced(m, target).result;
}

// Focal position of `set` within m, if present.
inline std::optional<std::size_t> focal_index_of(const MassFunction& m, const Bitset& set) {
    const auto& focals = m.focals();
    auto it = std::lower_bound(
        focals.begin(), focals.end(), set,
        [](const MassFunction::Focal& f, const Bitset& s) { return f.first < s; });
    if (it != focals.end() && it->first == set)
        return static_cast<std::size_t>(it - focals.begin());
    return std::nullopt;
}

}  // namespace evidential
