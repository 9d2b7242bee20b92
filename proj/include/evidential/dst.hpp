#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evidential/domain.hpp"
#include "evidential/errors.hpp"
#include "evidential/mass.hpp"

namespace evidential {

namespace detail {

// Largest frame (in configurations) for which the dense subset lattice
// (2^frame entries) may be materialized for commonality transforms.
inline constexpr std::size_t kDenseLatticeMaxFrame = 20;
// Cap on sparse support families handled by the quadratic Moebius recurrence.
inline constexpr std::size_t kSparseFamilyCap = 16384;

// All subsets of the given focal sets (the downset), deduplicated, empty set
// included. Returns nullopt once more than `cap` distinct sets appear.
inline std::optional<std::vector<Bitset>> downset(const std::vector<MassFunction::Focal>& focals,
                                                  std::size_t frame, std::size_t cap) {
    std::map<Bitset, bool> seen;
    std::vector<Bitset> queue;
    for (const auto& [set, mass] : focals) {
        if (seen.emplace(set, true).second) queue.push_back(set);
        if (seen.size() > cap) return std::nullopt;
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        Bitset current = queue[head];
        std::vector<std::size_t> members = current.bits();
        for (std::size_t b : members) {
            Bitset child = current;
            child.reset(b);
            if (seen.emplace(child, true).second) {
                queue.push_back(child);
                if (seen.size() > cap) return std::nullopt;
            }
        }
    }
    std::vector<Bitset> out;
    out.reserve(seen.size());
    for (const auto& [set, flag] : seen) out.push_back(set);
    (void)frame;
    return out;
}

// Solves Q(A) = sum over supersets B of A (within the family) of m(B) for m.
// The family is processed by descending cardinality, so each m(A) only needs
// the already-solved masses of its strict supersets. Sets outside the family
// carry zero mass by construction.
inline std::map<Bitset, double> invert_on_family(const std::vector<Bitset>& family,
                                                 const std::map<Bitset, double>& q) {
    std::vector<Bitset> order = family;
    std::sort(order.begin(), order.end(), [](const Bitset& a, const Bitset& b) {
        std::size_t ca = a.count(), cb = b.count();
        if (ca != cb) return ca > cb;
        return a < b;
    });
    std::map<Bitset, double> m;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Bitset& a = order[i];
        auto it = q.find(a);
        double v = it == q.end() ? 0.0 : it->second;
        std::size_t ca = a.count();
        for (std::size_t j = 0; j < i; ++j) {
            const Bitset& b = order[j];
            if (b.count() > ca && a.is_subset_of(b)) v -= m[b];
        }
        m[a] = v;
    }
    return m;
}

// Dense fast zeta transform over the subset lattice: q[S] = sum of m[T], T>=S.
inline void superset_zeta(std::vector<double>& a, std::size_t frame) {
    std::size_t n = std::size_t{1} << frame;
    for (std::size_t bit = 0; bit < frame; ++bit) {
        std::size_t step = std::size_t{1} << bit;
        for (std::size_t s = 0; s < n; ++s)
            if (!(s & step)) a[s] += a[s | step];
    }
}

// Inverse of superset_zeta (the Moebius transform).
inline void superset_mobius(std::vector<double>& a, std::size_t frame) {
    std::size_t n = std::size_t{1} << frame;
    for (std::size_t bit = 0; bit < frame; ++bit) {
        std::size_t step = std::size_t{1} << bit;
        for (std::size_t s = 0; s < n; ++s)
            if (!(s & step)) a[s] -= a[s | step];
    }
}

inline std::vector<double> dense_masses(const MassFunction& m) {
    std::size_t frame = m.scope().frame_size();
    std::vector<double> a(std::size_t{1} << frame, 0.0);
    for (const auto& [set, mass] : m.focals()) a[set.to_mask()] += mass;
    return a;
}

// Assembles a mass function from recovered per-set masses: drops the empty
// set, prunes noise, rescales to unit total. All recovered masses zero maps
// to the vacuous bpa.
inline MassFunction finish_recovered(const Scope& scope,
                                     std::vector<MassFunction::Focal> recovered,
                                     const char* what) {
    std::vector<MassFunction::Focal> focals;
    double total = 0;
    for (auto& [set, mass] : recovered) {
        if (set.none()) continue;
        if (std::abs(mass) < kPruneTol) continue;
        focals.push_back({set, mass});
        total += mass;
    }
    if (focals.empty() || std::abs(total) < kPruneTol) return MassFunction::vacuous(scope);
    if (total < 0)
        throw ValidateError(std::string(what) + " yields a negative total mass");
    bool pseudo = false;
    for (auto& [set, mass] : focals) {
        mass /= total;
        if (mass < 0) pseudo = true;
    }
    std::sort(focals.begin(), focals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return MassFunction::make(scope, std::move(focals), pseudo);
}

}  // namespace detail

// Dempster's Rule of Combination: intersect focal pairs, multiply masses,
// renormalize the conflict away. Operands must share one scope.
inline MassFunction combine_dempster(const MassFunction& a, const MassFunction& b) {
    if (!(a.scope() == b.scope()))
        throw ValidateError("combination requires identical scopes, got " + a.scope().describe() +
                            " and " + b.scope().describe());
    std::map<Bitset, double> acc;
    for (const auto& [fa, ma] : a.focals()) {
        for (const auto& [fb, mb] : b.focals()) {
            Bitset inter = fa & fb;
            if (inter.none()) continue;
            acc[inter] += ma * mb;
        }
    }
    double total = 0;
    for (const auto& [set, mass] : acc) total += mass;
    if (total <= kPruneTol)
        throw ConflictError("total conflict between combined bodies of evidence");
    std::vector<MassFunction::Focal> focals;
    double kept = 0;
    for (const auto& [set, mass] : acc) {
        double v = mass / total;
        if (std::abs(v) < kPruneTol) continue;
        focals.push_back({set, v});
        kept += v;
    }
    if (focals.empty()) throw ConflictError("total conflict between combined bodies of evidence");
    bool pseudo = false;
    for (auto& [set, mass] : focals) {
        mass /= kept;
        if (mass < 0) pseudo = true;
    }
    return MassFunction::make(a.scope(), std::move(focals), pseudo);
}

// Minimal extension (vacuous extension): each focal A becomes the cylinder
// A x Theta.(target - scope) with unchanged mass.
inline MassFunction extend_min(const MassFunction& m, const Scope& target) {
    if (!target.contains(m.scope()))
        throw ValidateError("extension target " + target.describe() + " does not contain " +
                            m.scope().describe());
    if (target == m.scope()) return m;
    auto proj = projection_table(target, m.scope());
    std::size_t frame = target.frame_size();
    std::vector<MassFunction::Focal> focals;
    focals.reserve(m.focals().size());
    for (const auto& [set, mass] : m.focals()) focals.push_back({Bitset(frame), mass});
    for (std::size_t t = 0; t < frame; ++t) {
        std::size_t p = proj[t];
        for (std::size_t i = 0; i < m.focals().size(); ++i)
            if (m.focals()[i].first.test(p)) focals[i].first.set(t);
    }
    std::sort(focals.begin(), focals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return MassFunction::make(target, std::move(focals), m.pseudo());
}

// Marginalization: drops the coordinates outside `target`, merging focals
// with equal projections.
inline MassFunction marginalize(const MassFunction& m, const Scope& target) {
    if (!m.scope().contains(target))
        throw ValidateError("marginalization target " + target.describe() +
                            " is not contained in " + m.scope().describe());
    if (target == m.scope()) return m;
    auto proj = projection_table(m.scope(), target);
    std::size_t frame = target.frame_size();
    std::map<Bitset, double> acc;
    for (const auto& [set, mass] : m.focals()) {
        Bitset out(frame);
        set.for_each_bit([&](std::size_t c) { out.set(proj[c]); });
        acc[out] += mass;
    }
    std::vector<MassFunction::Focal> focals;
    bool pseudo = false;
    for (const auto& [set, mass] : acc) {
        if (std::abs(mass) < kPruneTol) continue;
        if (mass < 0) pseudo = true;
        focals.push_back({set, mass});
    }
    if (focals.empty())
        throw ValidateError("marginalization lost all mass");
    return MassFunction::make(target, std::move(focals), pseudo);
}

// Conditioning: combination with the categorical bpa on A, yielding Bel(.|A).
inline MassFunction condition_on(const MassFunction& m, const Bitset& a) {
    return combine_dempster(m, MassFunction::categorical(m.scope(), a));
}

// Recovers the unique mass function supported on the stated family of sets
// whose commonality values match the given table. A dense table over every
// subset of the frame is the special case where the family is the full
// lattice.
inline MassFunction mass_from_commonality(const Scope& scope,
                                          const std::vector<std::pair<Bitset, double>>& q) {
    std::size_t frame = scope.frame_size();
    std::map<Bitset, double> table;
    std::vector<Bitset> family;
    for (const auto& [set, value] : q) {
        if (set.size() != frame)
            throw ValidateError("commonality entry does not match scope " + scope.describe());
        if (value < -kPruneTol)
            throw ValidateError("commonality value " + format_real(value) +
                                " is negative: not a pseudo-belief function");
        if (set.none()) continue;  // Q(empty) is the total mass, implied
        if (!table.emplace(set, value).second)
            throw ValidateError("duplicate commonality entry for one set");
        family.push_back(set);
    }
    if (family.empty()) throw ValidateError("commonality table has no nonempty sets");
    if (family.size() > detail::kSparseFamilyCap)
        throw CapacityError("commonality family exceeds " +
                            std::to_string(detail::kSparseFamilyCap) + " sets");
    auto masses = detail::invert_on_family(family, table);
    std::vector<MassFunction::Focal> recovered(masses.begin(), masses.end());
    double total = 0;
    for (const auto& [set, mass] : recovered) total += mass;
    if (std::abs(total - 1.0) > kEqualityTol)
        throw ValidateError("commonality table implies total mass " + format_real(total) +
                            ", expected 1");
    MassFunction out = detail::finish_recovered(scope, std::move(recovered), "commonality inversion");
    if (out.pseudo()) {
        // Negative masses are admissible only while commonalities stay
        // non-negative everywhere.
        auto support = detail::downset(out.focals(), frame, detail::kSparseFamilyCap);
        if (!support)
            throw CapacityError("pseudo admissibility check exceeds family capacity");
        for (const Bitset& set : *support) {
            if (set.none()) continue;
            if (commonality(out, set) < -kPruneTol)
                throw ValidateError("commonality table implies a negative commonality of " +
                                    format_real(commonality(out, set)) +
                                    ": not a pseudo-belief function");
        }
    }
    return out;
}

// Decombination, the inverse of Dempster combination: the result r satisfies
// Q_r(A) proportional to Q_12(A)/Q_2(A) wherever Q_2 does not vanish, with
// the constant fixed so masses sum to 1. The result is in general a
// pseudo-belief function.
inline MassFunction decombine(const MassFunction& m12, const MassFunction& m2) {
    if (!(m12.scope() == m2.scope()))
        throw ValidateError("decombination requires identical scopes, got " +
                            m12.scope().describe() + " and " + m2.scope().describe());
    const Scope& scope = m12.scope();
    std::size_t frame = scope.frame_size();

    auto ratio_of = [](double q12, double q2) -> std::optional<double> {
        if (std::abs(q2) <= kPruneTol) {
            if (std::abs(q12) > kPruneTol)
                throw ValidateError(
                    "decombination undefined: zero commonality in the divisor against " +
                    format_real(q12) + " in the dividend");
            return std::nullopt;  // both vanish
        }
        return q12 / q2;
    };

    std::vector<MassFunction::Focal> recovered;
    bool dense = frame <= 16;
    std::optional<std::vector<Bitset>> family;
    if (!dense) {
        family = detail::downset(m12.focals(), frame, detail::kSparseFamilyCap);
        if (!family) {
            if (frame <= detail::kDenseLatticeMaxFrame)
                dense = true;
            else
                throw CapacityError("decombination support exceeds capacity on a frame of " +
                                    std::to_string(frame) + " configurations");
        }
    }
    if (dense) {
        std::vector<double> q12 = detail::dense_masses(m12);
        std::vector<double> q2 = detail::dense_masses(m2);
        detail::superset_zeta(q12, frame);
        detail::superset_zeta(q2, frame);
        std::vector<double> qr(q12.size(), 0.0);
        for (std::size_t s = 1; s < qr.size(); ++s) {
            auto r = ratio_of(q12[s], q2[s]);
            qr[s] = r ? *r : 0.0;
        }
        qr[0] = 1.0;
        detail::superset_mobius(qr, frame);
        for (std::size_t s = 1; s < qr.size(); ++s)
            if (std::abs(qr[s]) >= kPruneTol)
                recovered.push_back({Bitset::from_mask(frame, s), qr[s]});
    } else {
        std::map<Bitset, double> qr;
        for (const Bitset& set : *family) {
            if (set.none()) continue;
            auto r = ratio_of(commonality(m12, set), commonality(m2, set));
            qr[set] = r ? *r : 0.0;
        }
        auto masses = detail::invert_on_family(*family, qr);
        recovered.assign(masses.begin(), masses.end());
    }
    return detail::finish_recovered(scope, std::move(recovered), "decombination");
}

// Invariant checks for a stored mass function. Proper functions must have
// positive masses on nonempty sets summing to 1; pseudo functions may carry
// negative masses while all commonalities stay above -kPruneTol.
inline void validate_mass(const MassFunction& m) {
    if (m.focals().empty()) throw ValidateError("mass function has no focal sets");
    std::size_t frame = m.scope().frame_size();
    double total = 0;
    for (const auto& [set, mass] : m.focals()) {
        if (set.size() != frame)
            throw ValidateError("focal set does not match scope " + m.scope().describe());
        total += mass;
        if (!m.pseudo()) {
            if (set.none()) throw ValidateError("proper mass function assigns mass to the empty set");
            if (mass <= 0)
                throw ValidateError("proper mass function carries non-positive mass " +
                                    format_real(mass));
        }
    }
    if (std::abs(total - 1.0) > kEqualityTol)
        throw ValidateError("masses sum to " + format_real(total) + ", expected 1");
    for (std::size_t i = 0; i + 1 < m.focals().size(); ++i)
        if (!(m.focals()[i].first < m.focals()[i + 1].first))
            throw ValidateError("focal sets are not in canonical order");
    if (m.pseudo()) {
        auto support = detail::downset(m.focals(), frame, detail::kSparseFamilyCap);
        if (!support)
            throw CapacityError("pseudo admissibility check exceeds family capacity");
        for (const Bitset& set : *support) {
            if (set.none()) continue;
            if (commonality(m, set) < -kPruneTol)
                throw ValidateError("pseudo-belief function has negative commonality " +
                                    format_real(commonality(m, set)));
        }
    }
}

}  // namespace evidential
