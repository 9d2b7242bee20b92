#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace evidential;
using namespace testutil;

namespace {

Scope one_var_scope(const std::string& name, std::vector<std::string> values) {
    return Scope::of({make_variable(name, std::move(values))});
}

// w over {a,b}: frame of two configurations.
Scope ab_frame() { return one_var_scope("w", {"a", "b"}); }

Bitset bits(const Scope& s, std::initializer_list<std::size_t> configs) {
    Bitset b(s.frame_size());
    for (auto c : configs) b.set(c);
    return b;
}

}  // namespace

TEST_CASE("mass_from_focals builds categorical facts and merges duplicates") {
    Scope p = one_var_scope("p", {"t", "f"});
    MassFunction fact = MassFunction::from_focals(p, {{bits(p, {0}), 1.0}});
    REQUIRE(fact.focals().size() == 1);
    REQUIRE(fact.mass_of(bits(p, {0})) == 1.0);

    Scope w = ab_frame();
    MassFunction merged = MassFunction::from_focals(
        w, {{bits(w, {0}), 0.5}, {bits(w, {0}), 0.1}, {bits(w, {0, 1}), 0.4}});
    REQUIRE(merged.focals().size() == 2);
    REQUIRE(merged.mass_of(bits(w, {0})) == Catch::Approx(0.6));
    REQUIRE(merged.mass_of(bits(w, {0, 1})) == Catch::Approx(0.4));
    REQUIRE(!merged.pseudo());

    REQUIRE_THROWS_AS(
        MassFunction::from_focals(w, {{bits(w, {0}), 0.5}, {bits(w, {1}), 0.4}}),
        ValidateError);
    // ... but an explicit normalization request rescales.
    MassFunction rescaled = MassFunction::from_focals(
        w, {{bits(w, {0}), 0.5}, {bits(w, {1}), 0.4}}, /*normalize=*/true);
    REQUIRE(rescaled.mass_of(bits(w, {0})) == Catch::Approx(5.0 / 9.0));
}

TEST_CASE("normalize_mass divides the conflict away") {
    Scope w = ab_frame();
    MassFunction dirty = MassFunction::from_focals(
        w, {{Bitset(w.frame_size()), 0.3}, {bits(w, {0}), 0.35}, {bits(w, {1}), 0.35}});
    MassFunction clean = normalize_mass(dirty);
    REQUIRE(clean.focals().size() == 2);
    REQUIRE(clean.mass_of(bits(w, {0})) == Catch::Approx(0.5));
    REQUIRE(clean.mass_of(bits(w, {1})) == Catch::Approx(0.5));

    MassFunction proper = MassFunction::from_focals(w, {{bits(w, {0}), 1.0}});
    REQUIRE(mass_equal(normalize_mass(proper), proper, 0.0));

    MassFunction total_conflict =
        MassFunction::from_focals(w, {{Bitset(w.frame_size()), 1.0}});
    REQUIRE_THROWS_AS(normalize_mass(total_conflict), ConflictError);
}

TEST_CASE("set functions: belief, plausibility, commonality") {
    Scope w = ab_frame();
    MassFunction vac = MassFunction::vacuous(w);
    REQUIRE(belief(vac, bits(w, {0})) == 0.0);
    REQUIRE(plausibility(vac, bits(w, {0})) == 1.0);

    MassFunction m =
        MassFunction::from_focals(w, {{bits(w, {0}), 0.5}, {bits(w, {0, 1}), 0.5}});
    REQUIRE(commonality(m, bits(w, {0})) == Catch::Approx(1.0));
    REQUIRE(commonality(m, bits(w, {1})) == Catch::Approx(0.5));
    REQUIRE(commonality(m, bits(w, {0, 1})) == Catch::Approx(0.5));

    REQUIRE_THROWS_AS(set_function(m, SetFunctionKind::belief, Bitset(5)), ValidateError);
}

TEST_CASE("Pl(A) = 1 - Bel(complement) and Bel <= Pl on random masses") {
    std::mt19937 rng(7);
    Scope s = Scope::of({binary("a"), binary("b"), make_variable("c", {"1", "2", "3"})});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        MassFunction m = random_mass(rng, s, 5);
        REQUIRE(std::abs(m.total_mass() - 1.0) < kEqualityTol);
        Bitset a(s.frame_size());
        for (std::size_t c = 0; c < s.frame_size(); ++c)
            if (unit(rng) < 0.5) a.set(c);
        double bel = belief(m, a), pl = plausibility(m, a);
        REQUIRE(bel <= pl + kEqualityTol);
        REQUIRE(pl == Catch::Approx(1.0 - belief(m, a.complement())).margin(kEqualityTol));
    }
}

TEST_CASE("mass_from_commonality inverts categorical and general tables") {
    Scope w = ab_frame();
    // Q table of the categorical on {a}: 1 on subsets of {a}, 0 elsewhere.
    MassFunction cat = mass_from_commonality(
        w, {{bits(w, {0}), 1.0}, {bits(w, {1}), 0.0}, {bits(w, {0, 1}), 0.0}});
    REQUIRE(mass_equal(cat, MassFunction::categorical(w, bits(w, {0})), kPruneTol));

    MassFunction m =
        MassFunction::from_focals(w, {{bits(w, {0}), 0.5}, {bits(w, {0, 1}), 0.5}});
    std::vector<std::pair<Bitset, double>> q;
    for (std::uint64_t mask = 1; mask < 4; ++mask) {
        Bitset set = Bitset::from_mask(w.frame_size(), mask);
        q.push_back({set, commonality(m, set)});
    }
    REQUIRE(mass_equal(mass_from_commonality(w, q), m, kPruneTol));

    REQUIRE_THROWS_AS(mass_from_commonality(w, {{bits(w, {0, 1}), -0.1}}), ValidateError);
}

TEST_CASE("Moebius round-trips reproduce masses on dense frames") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Scope s = trial % 2 == 0
                      ? Scope::of({make_variable("u", {"1", "2", "3"}), binary("v")})
                      : Scope::of({binary("a"), binary("b"), binary("c")});
        MassFunction m = random_mass(rng, s, 6);

        // m -> Bel -> m by naive alternating-sign inversion.
        auto recovered = mass_from_belief_naive(m);
        for (const auto& [set, mass] : m.focals())
            REQUIRE(recovered[set.to_mask()] == Catch::Approx(mass).margin(kEqualityTol));
        double total = 0;
        for (const auto& [mask, mass] : recovered) total += mass;
        REQUIRE(total == Catch::Approx(1.0).margin(kEqualityTol));

        // m -> Q -> m through mass_from_commonality.
        std::vector<std::pair<Bitset, double>> q;
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << s.frame_size()); ++mask) {
            Bitset set = Bitset::from_mask(s.frame_size(), mask);
            q.push_back({set, commonality(m, set)});
        }
        REQUIRE(mass_equal(mass_from_commonality(s, q), m, kEqualityTol));
    }
}

TEST_CASE("Dempster combination of categorical functions is set intersection") {
    Scope s = Scope::of({binary("a"), binary("b")});
    MassFunction m1 = MassFunction::categorical(s, bits(s, {0, 1, 2}));
    MassFunction m2 = MassFunction::categorical(s, bits(s, {1, 2, 3}));
    MassFunction combined = combine_dempster(m1, m2);
    REQUIRE(combined.focals().size() == 1);
    REQUIRE(combined.mass_of(bits(s, {1, 2})) == 1.0);

    // Disjoint categoricals are total conflict.
    REQUIRE_THROWS_AS(
        combine_dempster(MassFunction::categorical(s, bits(s, {0})),
                         MassFunction::categorical(s, bits(s, {3}))),
        ConflictError);
}

TEST_CASE("the worked two-focal combination") {
    Scope w = ab_frame();
    MassFunction m1 =
        MassFunction::from_focals(w, {{bits(w, {0}), 0.6}, {bits(w, {0, 1}), 0.4}});
    MassFunction m2 =
        MassFunction::from_focals(w, {{bits(w, {1}), 0.5}, {bits(w, {0, 1}), 0.5}});
    MassFunction m = combine_dempster(m1, m2);
    REQUIRE(m.mass_of(bits(w, {0})) == Catch::Approx(3.0 / 7.0).margin(kEqualityTol));
    REQUIRE(m.mass_of(bits(w, {1})) == Catch::Approx(2.0 / 7.0).margin(kEqualityTol));
    REQUIRE(m.mass_of(bits(w, {0, 1})) == Catch::Approx(2.0 / 7.0).margin(kEqualityTol));
}

TEST_CASE("modus ponens and modus tollens with logical belief functions") {
    Scope xi = one_var_scope("p", {"t", "f"});
    Scope lambda = one_var_scope("q", {"t", "f"});
    Scope theta = Scope::of({make_variable("p", {"t", "f"}), make_variable("q", {"t", "f"})});
    // theta configs: (t,t)=0 (t,f)=1 (f,t)=2 (f,f)=3
    MassFunction implication = MassFunction::categorical(theta, bits(theta, {0, 2, 3}));

    SECTION("modus ponens: p true forces q true") {
        MassFunction p_true = MassFunction::categorical(xi, bits(xi, {0}));
        MassFunction extended = extend_min(p_true, theta);
        REQUIRE(extended.mass_of(bits(theta, {0, 1})) == 1.0);
        MassFunction combined = combine_dempster(implication, extended);
        REQUIRE(combined.mass_of(bits(theta, {0})) == 1.0);
        MassFunction q_marginal = marginalize(combined, lambda);
        REQUIRE(q_marginal.mass_of(bits(lambda, {0})) == 1.0);
    }
    SECTION("p false says nothing about q") {
        MassFunction p_false = MassFunction::categorical(xi, bits(xi, {1}));
        MassFunction combined = combine_dempster(implication, extend_min(p_false, theta));
        MassFunction q_marginal = marginalize(combined, lambda);
        REQUIRE(q_marginal.is_vacuous());
    }
    SECTION("modus tollens: q false forces p false") {
        MassFunction q_false = MassFunction::categorical(lambda, bits(lambda, {1}));
        MassFunction combined = combine_dempster(implication, extend_min(q_false, theta));
        MassFunction p_marginal = marginalize(combined, xi);
        REQUIRE(p_marginal.mass_of(bits(xi, {1})) == 1.0);
    }
}

TEST_CASE("minimal extension and marginalization round-trip") {
    Scope w = ab_frame();
    Scope big = Scope::of({make_variable("w", {"a", "b"}), binary("x")});
    MassFunction m =
        MassFunction::from_focals(w, {{bits(w, {0}), 0.4}, {bits(w, {0, 1}), 0.6}});
    REQUIRE(mass_equal(extend_min(m, w), m, 0.0));  // identity extension
    MassFunction up = extend_min(m, big);
    REQUIRE(up.mass_of(bits(big, {0, 1})) == Catch::Approx(0.4));  // {a} x {t,f}
    REQUIRE(mass_equal(marginalize(up, w), m, kPruneTol));
    REQUIRE(mass_equal(marginalize(m, w), m, 0.0));  // identity projection
    REQUIRE_THROWS_AS(extend_min(up, w), ValidateError);
    REQUIRE_THROWS_AS(marginalize(m, big), ValidateError);
}

TEST_CASE("conditioning is combination with a categorical bpa") {
    Scope w = one_var_scope("w", {"a", "b", "c"});
    SECTION("vacuous conditioned on A is categorical on A") {
        MassFunction conditioned = condition_on(MassFunction::vacuous(w), bits(w, {0, 1}));
        REQUIRE(conditioned.mass_of(bits(w, {0, 1})) == 1.0);
    }
    SECTION("Bayesian bpa conditions like Bayes' rule") {
        std::mt19937 rng(3);
        for (int i = 0; i < 50; ++i) {
            MassFunction m = random_bayesian_mass(rng, w);
            Bitset a = bits(w, {0, 2});
            MassFunction conditioned = condition_on(m, a);
            double z = m.mass_of(bits(w, {0})) + m.mass_of(bits(w, {2}));
            REQUIRE(conditioned.mass_of(bits(w, {0})) ==
                    Catch::Approx(m.mass_of(bits(w, {0})) / z).margin(kEqualityTol));
            REQUIRE(conditioned.mass_of(bits(w, {1})) == 0.0);
        }
    }
    SECTION("conditioning on a zero-plausibility set is total conflict") {
        MassFunction m = MassFunction::categorical(w, bits(w, {0}));
        REQUIRE_THROWS_AS(condition_on(m, bits(w, {1, 2})), ConflictError);
        REQUIRE_THROWS_AS(condition_on(m, Bitset(w.frame_size())), ValidateError);
    }
}

TEST_CASE("categorical and simple support constructors") {
    Scope w = ab_frame();
    REQUIRE(MassFunction::categorical(w, Bitset::ones(2)).is_vacuous());
    MassFunction s = MassFunction::simple_support(w, bits(w, {0}), 0.8);
    REQUIRE(s.mass_of(bits(w, {0})) == Catch::Approx(0.8));
    REQUIRE(s.mass_of(bits(w, {0, 1})) == Catch::Approx(0.2));
    REQUIRE(mass_equal(MassFunction::simple_support(w, bits(w, {0}), 1.0),
                       MassFunction::categorical(w, bits(w, {0})), 0.0));
    REQUIRE_THROWS_AS(MassFunction::simple_support(w, bits(w, {0}), 0.0), ValidateError);
    REQUIRE_THROWS_AS(MassFunction::simple_support(w, bits(w, {0}), 1.5), ValidateError);
    REQUIRE_THROWS_AS(MassFunction::simple_support(w, Bitset(2), 0.5), ValidateError);
}

TEST_CASE("combination is commutative and associative") {
    std::mt19937 rng(23);
    Scope s = Scope::of({binary("a"), binary("b")});
    for (int i = 0; i < 300; ++i) {
        MassFunction m1 = random_mass(rng, s, 4);
        MassFunction m2 = random_mass(rng, s, 4);
        MassFunction m3 = random_mass(rng, s, 4);
        REQUIRE(mass_equal(combine_dempster(m1, m2), combine_dempster(m2, m1), kEqualityTol));
        try {
            MassFunction left = combine_dempster(combine_dempster(m1, m2), m3);
            MassFunction right = combine_dempster(m1, combine_dempster(m2, m3));
            REQUIRE(mass_equal(left, right, kEqualityTol));
        } catch (const ConflictError&) {
            // fine: conflict is association-independent for proper inputs
        }
    }
}

TEST_CASE("combination-marginalization exchange") {
    std::mt19937 rng(31);
    Scope a_scope = Scope::of({binary("a"), binary("b")});
    Scope b_scope = Scope::of({binary("b"), binary("c")});
    Scope joint = scope_union(a_scope, b_scope);
    Scope common = scope_intersection(a_scope, b_scope);
    for (int i = 0; i < 300; ++i) {
        MassFunction ma = random_mass(rng, a_scope, 4);
        MassFunction mb = random_mass(rng, b_scope, 4);
        MassFunction lhs =
            marginalize(combine_dempster(extend_min(ma, joint), extend_min(mb, joint)), a_scope);
        MassFunction rhs = combine_dempster(ma, extend_min(marginalize(mb, common), a_scope));
        REQUIRE(mass_equal(lhs, rhs, kEqualityTol));
    }
}

TEST_CASE("projection is transitive") {
    std::mt19937 rng(37);
    Scope big = Scope::of({binary("a"), binary("b"), binary("c")});
    Scope mid = Scope::of({binary("a"), binary("b")});
    Scope small = Scope::of({binary("a")});
    for (int i = 0; i < 200; ++i) {
        MassFunction m = random_mass(rng, big, 5);
        REQUIRE(mass_equal(marginalize(m, small), marginalize(marginalize(m, mid), small),
                           kPruneTol));
    }
}

TEST_CASE("commonalities multiply under combination") {
    std::mt19937 rng(41);
    Scope s = Scope::of({binary("a"), binary("b")});
    std::uniform_int_distribution<std::uint64_t> mask_dist(1, 15);
    for (int i = 0; i < 300; ++i) {
        MassFunction m1 = random_mass(rng, s, 4);
        MassFunction m2 = random_mass(rng, s, 4);
        MassFunction m12 = combine_dempster(m1, m2);
        // Find the proportionality constant on one set, check all others.
        std::optional<double> c;
        for (std::uint64_t mask = 1; mask < 16; ++mask) {
            Bitset set = Bitset::from_mask(4, mask);
            double q1q2 = commonality(m1, set) * commonality(m2, set);
            double q12 = commonality(m12, set);
            if (!c && std::abs(q1q2) > 1e-6) c = q12 / q1q2;
        }
        REQUIRE(c.has_value());
        for (std::uint64_t mask = 1; mask < 16; ++mask) {
            Bitset set = Bitset::from_mask(4, mask);
            REQUIRE(commonality(m12, set) ==
                    Catch::Approx(*c * commonality(m1, set) * commonality(m2, set))
                        .margin(kEqualityTol));
        }
    }
}

TEST_CASE("Bayesian combination reduces to the normalized pointwise product") {
    std::mt19937 rng(43);
    Scope s = Scope::of({binary("a"), binary("b")});
    for (int i = 0; i < 200; ++i) {
        MassFunction m1 = random_bayesian_mass(rng, s);
        MassFunction m2 = random_bayesian_mass(rng, s);
        MassFunction m12 = combine_dempster(m1, m2);
        double z = 0;
        for (std::size_t c = 0; c < s.frame_size(); ++c)
            z += m1.mass_of(Bitset::single(4, c)) * m2.mass_of(Bitset::single(4, c));
        for (std::size_t c = 0; c < s.frame_size(); ++c) {
            Bitset single = Bitset::single(4, c);
            REQUIRE(m12.mass_of(single) ==
                    Catch::Approx(m1.mass_of(single) * m2.mass_of(single) / z)
                        .margin(kEqualityTol));
        }
    }
}

TEST_CASE("decombination undoes combination up to a positive scalar") {
    std::mt19937 rng(47);
    Scope s = Scope::of({binary("a"), binary("b")});

    SECTION("identity against the vacuous bpa") {
        for (int i = 0; i < 20; ++i) {
            MassFunction m = random_mass(rng, s, 4);
            REQUIRE(mass_equal(decombine(m, MassFunction::vacuous(s)), m, kEqualityTol));
        }
    }
    SECTION("round-trip on random pairs") {
        for (int i = 0; i < 100; ++i) {
            MassFunction m1 = random_mass(rng, s, 3);
            MassFunction m2 = random_mass(rng, s, 3);
            MassFunction m12 = combine_dempster(m1, m2);
            MassFunction r = decombine(m12, m2);
            MassFunction again = combine_dempster(m2, r);
            REQUIRE(detail::commonality_proportional(m12, again, kEqualityTol));
        }
    }
    SECTION("probabilistic decombination is memberwise division") {
        for (int i = 0; i < 50; ++i) {
            MassFunction m1 = random_bayesian_mass(rng, ab_frame());
            MassFunction m2 = random_bayesian_mass(rng, ab_frame());
            MassFunction m12 = combine_dempster(m1, m2);
            REQUIRE(mass_equal(decombine(m12, m2), m1, kEqualityTol));
        }
    }
    SECTION("division by a vanishing commonality is undefined") {
        MassFunction m12 = MassFunction::vacuous(s);
        MassFunction m2 = MassFunction::categorical(s, bits(s, {0}));
        REQUIRE_THROWS_AS(decombine(m12, m2), ValidateError);
    }
}

TEST_CASE("canonical rendering of a mass function") {
    Scope theta = Scope::of({make_variable("p", {"t", "f"}), make_variable("q", {"t", "f"})});
    MassFunction m = MassFunction::from_focals(
        theta, {{bits(theta, {0, 2, 3}), 0.75}, {bits(theta, {0}), 0.25}});
    REQUIRE(m.render() ==
            "{(t,t)}: 0.250000000000\n"
            "{(t,t),(f,t),(f,f)}: 0.750000000000\n");
}

TEST_CASE("validate_mass rejects broken invariants") {
    Scope w = ab_frame();
    validate_mass(MassFunction::vacuous(w));
    MassFunction negative =
        MassFunction::make(w, {{bits(w, {0}), -0.2}, {bits(w, {0, 1}), 1.2}}, false);
    REQUIRE_THROWS_AS(validate_mass(negative), ValidateError);
    // The same weights are a fine pseudo-belief function: Q stays positive.
    MassFunction pseudo =
        MassFunction::make(w, {{bits(w, {0}), -0.2}, {bits(w, {0, 1}), 1.2}}, true);
    validate_mass(pseudo);
    // ... but commonalities must not dip below zero: here Q({b}) = -0.2.
    MassFunction bad = MassFunction::make(
        w, {{bits(w, {0}), 1.2}, {bits(w, {0, 1}), -0.2}}, true);
    REQUIRE_THROWS_AS(validate_mass(bad), ValidateError);
}
