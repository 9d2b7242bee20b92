#include <catch2/catch_amalgamated.hpp>

#include "evidential/io.hpp"
#include "oracles.hpp"

using namespace evidential;
using namespace testutil;

namespace {

BeliefNetwork ab_network() {
    Variable a = binary("a"), b = binary("b");
    NodeValuation va = NodeValuation::probabilistic(a, {}, {0.7, 0.3});
    NodeValuation shape = NodeValuation::probabilistic(b, {a}, {0.5, 0.5, 0.5, 0.5});
    std::vector<double> table(4);
    table[shape.family_index(0, 0)] = 0.9;
    table[shape.family_index(0, 1)] = 0.1;
    table[shape.family_index(1, 0)] = 0.5;
    table[shape.family_index(1, 1)] = 0.5;
    return BeliefNetwork::build({a, b}, Dag::make({"a", "b"}, {{"a", "b"}}),
                                {va, NodeValuation::probabilistic(b, {a}, table)});
}

// The node-valuation shape of the worked tables: X with 2 values, Z with 4,
// Y with 3, Y depending on X and Z.
std::vector<Variable> xyz_variables() {
    return {make_variable("x", {"x1", "x2"}), make_variable("z", {"z1", "z2", "z3", "z4"}),
            make_variable("y", {"y1", "y2", "y3"})};
}

NodeValuation xyz_probabilistic() {
    Variable x = xyz_variables()[0], z = xyz_variables()[1], y = xyz_variables()[2];
    NodeValuation shape =
        NodeValuation::probabilistic(y, {x, z}, std::vector<double>(24, 1.0 / 3.0));
    std::vector<double> table(24);
    for (std::size_t pc = 0; pc < 8; ++pc) {
        double p1 = (pc + 1) / 10.0;
        double p2 = (8 - pc) / 20.0;
        table[shape.family_index(pc, 0)] = p1;
        table[shape.family_index(pc, 1)] = p2;
        table[shape.family_index(pc, 2)] = 1.0 - p1 - p2;
    }
    return NodeValuation::probabilistic(y, {x, z}, table);
}

// The four-focal Dempster-Shafer table: one singleton, one pair, one
// singleton, one four-element set.
NodeValuation xyz_ds() {
    Variable x = xyz_variables()[0], z = xyz_variables()[1], y = xyz_variables()[2];
    std::vector<Variable> family_vars{x, z, y};
    Scope family = Scope::of(family_vars);
    auto config = [&](const char* xv, const char* zv, const char* yv) {
        return family.config_index({{"x", xv}, {"z", zv}, {"y", yv}});
    };
    Bitset f1(24), f2(24), f3(24), f4(24);
    f1.set(config("x1", "z1", "y1"));
    f2.set(config("x1", "z1", "y2"));
    f2.set(config("x1", "z3", "y2"));
    f3.set(config("x2", "z2", "y3"));
    f4.set(config("x1", "z4", "y1"));
    f4.set(config("x1", "z4", "y3"));
    f4.set(config("x2", "z4", "y1"));
    f4.set(config("x2", "z4", "y3"));
    MassFunction m = MassFunction::from_focals(
        family, {{f1, 0.4}, {f2, 0.3}, {f3, 0.2}, {f4, 0.1}});
    return NodeValuation::dempster_shafer(y, {x, z}, m);
}

BeliefNetwork xyz_network(NodeValuation y_val) {
    std::vector<Variable> vars = xyz_variables();
    return BeliefNetwork::build(
        vars, Dag::make({"x", "y", "z"}, {{"x", "y"}, {"z", "y"}}),
        {NodeValuation::probabilistic(vars[0], {}, {0.5, 0.5}),
         NodeValuation::probabilistic(vars[1], {}, {0.25, 0.25, 0.25, 0.25}),
         std::move(y_val)});
}

}  // namespace

TEST_CASE("probabilistic rule beams list the full table in canonical order") {
    BeliefNetwork net = xyz_network(xyz_probabilistic());
    RuleBeam beam = render_rule_beam(net, "y");
    REQUIRE(beam.groups.size() == 24);
    std::string text = beam.text();
    REQUIRE(text.find("VALUATION y : probabilistic\n") == 0);
    REQUIRE(text.find("IF x='x1' AND z='z1' THEN y='y1' WITH 0.100000000000\n") !=
            std::string::npos);
    std::string last_line = "IF x='x2' AND z='z4' THEN y='y3' WITH ";
    REQUIRE(text.rfind(last_line) > text.find("IF x='x2' AND z='z4' THEN y='y1'"));
    // Lexicographic parent-config then child-value order.
    REQUIRE(text.find("z='z1' THEN y='y1'") < text.find("z='z1' THEN y='y2'"));
    REQUIRE(text.find("x='x1' AND z='z4'") < text.find("x='x2' AND z='z1'"));
}

TEST_CASE("ds rule beams group focals into AND IF chains weighted by Q") {
    BeliefNetwork net = xyz_network(xyz_ds());
    RuleBeam beam = render_rule_beam(net, "y");
    REQUIRE(beam.kind == NodeValuation::Kind::ds);
    REQUIRE(beam.groups.size() == 4);
    std::size_t chain4 = 0;
    for (const auto& group : beam.groups) {
        if (group.lines.size() == 4) ++chain4;
        // Non-nested focals: Q equals the mass here.
        REQUIRE((group.weight == Catch::Approx(0.4) || group.weight == Catch::Approx(0.3) ||
                 group.weight == Catch::Approx(0.2) || group.weight == Catch::Approx(0.1)));
    }
    REQUIRE(chain4 == 1);
    std::string text = beam.text();
    REQUIRE(text.find("VALUATION y : dempster-shafer\n") == 0);
    REQUIRE(text.find("AND IF") != std::string::npos);
    // One WITH per group, on the group's last line.
    std::size_t with_count = 0;
    for (std::size_t pos = text.find("WITH"); pos != std::string::npos;
         pos = text.find("WITH", pos + 1))
        ++with_count;
    REQUIRE(with_count == 4);
}

TEST_CASE("rule beams round-trip through their text form") {
    std::vector<Variable> vars = xyz_variables();

    SECTION("probabilistic") {
        NodeValuation val = xyz_probabilistic();
        NodeValuation parsed =
            parse_rule_beam(render_rule_beam(xyz_network(val), "y").text(), vars);
        REQUIRE(parsed.kind() == NodeValuation::Kind::probabilistic);
        REQUIRE(parsed.node() == "y");
        REQUIRE(parsed.parents() == std::vector<std::string>{"x", "z"});
        for (std::size_t c = 0; c < 24; ++c)
            REQUIRE(parsed.prob_table()[c] == Catch::Approx(val.prob_table()[c]).margin(1e-12));
    }
    SECTION("dempster-shafer") {
        NodeValuation val = xyz_ds();
        NodeValuation parsed =
            parse_rule_beam(render_rule_beam(xyz_network(val), "y").text(), vars);
        REQUIRE(parsed.kind() == NodeValuation::Kind::ds);
        REQUIRE(max_mass_diff(parsed.ds_focals(), val.ds_focals()) < 1e-12);
    }
    SECTION("randomized probabilistic and ds fixtures") {
        std::mt19937 rng(139);
        for (int i = 0; i < 20; ++i) {
            BeliefNetwork net =
                i % 2 == 0 ? random_prob_net(rng, 4, 0.5) : random_ds_net(rng, 4, 3, 0.5);
            for (const auto& v : net.variables()) {
                NodeValuation parsed =
                    parse_rule_beam(render_rule_beam(net, v.name).text(), net.variables());
                const NodeValuation& original = net.valuation(v.name);
                REQUIRE(parsed.kind() == original.kind());
                if (parsed.kind() == NodeValuation::Kind::probabilistic) {
                    for (std::size_t c = 0; c < parsed.prob_table().size(); ++c)
                        REQUIRE(parsed.prob_table()[c] ==
                                Catch::Approx(original.prob_table()[c]).margin(1e-12));
                } else {
                    REQUIRE(max_mass_diff(parsed.ds_focals(), original.ds_focals()) < 1e-11);
                }
            }
        }
    }
}

TEST_CASE("beam parsing rejects incomplete or inconsistent input") {
    std::vector<Variable> vars{binary("a"), binary("b")};

    SECTION("missing parent configuration") {
        std::string text =
            "VALUATION b : probabilistic\n"
            "IF a='t' THEN b='t' WITH 0.9\n"
            "IF a='t' THEN b='f' WITH 0.1\n";
        REQUIRE_THROWS_AS(parse_rule_beam(text, vars), ValidateError);
    }
    SECTION("rows that do not sum to one") {
        std::string text =
            "VALUATION b : probabilistic\n"
            "IF a='t' THEN b='t' WITH 0.9\n"
            "IF a='t' THEN b='f' WITH 0.2\n"
            "IF a='f' THEN b='t' WITH 0.5\n"
            "IF a='f' THEN b='f' WITH 0.5\n";
        REQUIRE_THROWS_AS(parse_rule_beam(text, vars), ValidateError);
    }
    SECTION("malformed lines") {
        REQUIRE_THROWS_AS(parse_rule_beam("VALUATION b : probabilistic\nIF a='t' THEN\n", vars),
                          ParseError);
        REQUIRE_THROWS_AS(parse_rule_beam("no header\n", vars), ParseError);
        REQUIRE_THROWS_AS(
            parse_rule_beam("VALUATION b : probabilistic\nIF a='t' b='t' WITH 1\n", vars),
            ParseError);
    }
    SECTION("a Q table implying an inadmissible pseudo-belief function") {
        std::vector<Variable> wvar{make_variable("w", {"a", "b", "c"}),
                                   make_variable("y", {"u"})};
        // Q weights force masses m({a,b}) = m({a,c}) = -0.15 whose
        // commonality at {a} is -0.1: beyond the pseudo tolerance.
        std::string text =
            "VALUATION y : dempster-shafer\n"
            "IF w='a' THEN y='u'\n"
            "AND IF w='b' THEN y='u' WITH 0.05\n"
            "IF w='a' THEN y='u'\n"
            "AND IF w='c' THEN y='u' WITH 0.05\n"
            "IF w='b' THEN y='u'\n"
            "AND IF w='c' THEN y='u' WITH 1.3\n"
            "IF w='a' THEN y='u'\n"
            "AND IF w='b' THEN y='u'\n"
            "AND IF w='c' THEN y='u' WITH 0.2\n";
        REQUIRE_THROWS_AS(parse_rule_beam(text, wvar), ValidateError);
    }
}

TEST_CASE("query nodes compile into deterministic gate cascades") {
    // Eight two-valued nodes named p1..p8 with the t/n alphabet.
    std::vector<std::string> names{"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"};
    std::vector<Variable> vars;
    for (const auto& n : names) vars.push_back(make_variable(n, {"t", "n"}));
    Dag dag = Dag::make(names, {{"p1", "p2"},
                                {"p2", "p4"},
                                {"p2", "p7"},
                                {"p3", "p4"},
                                {"p4", "p5"},
                                {"p4", "p6"},
                                {"p5", "p8"},
                                {"p6", "p8"},
                                {"p7", "p8"}});
    std::vector<NodeValuation> vals;
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<Variable> parents;
        for (const auto& p : dag.parents(names[i]))
            parents.push_back(make_variable(p, {"t", "n"}));
        Scope ps = Scope::of(parents);
        NodeValuation shape = NodeValuation::probabilistic(
            vars[i], parents, std::vector<double>(ps.frame_size() * 2, 0.5));
        std::vector<double> table(ps.frame_size() * 2);
        for (std::size_t pc = 0; pc < ps.frame_size(); ++pc) {
            double p = 0.1 + 0.05 * static_cast<double>(i) + 0.03 * static_cast<double>(pc);
            table[shape.family_index(pc, 0)] = p;
            table[shape.family_index(pc, 1)] = 1.0 - p;
        }
        vals.push_back(NodeValuation::probabilistic(vars[i], parents, table));
    }
    BeliefNetwork net = BeliefNetwork::build(vars, dag, vals);

    SECTION("the OR gate carries the four listed rules") {
        CompiledQuery compiled = compile_query_node(net, parse_expression("p5='t' .or. p1='n'"));
        REQUIRE(compiled.added == std::vector<std::string>{"x1"});
        REQUIRE(compiled.gate == "x1");
        const NodeValuation& gate = compiled.network.valuation("x1");
        REQUIRE(gate.parents() == std::vector<std::string>{"p1", "p5"});
        // parent configs (p1,p5): (t,t) (t,n) (n,t) (n,n)
        REQUIRE(gate.prob_of(0, 0) == 1.0);  // p5=t
        REQUIRE(gate.prob_of(1, 1) == 1.0);  // neither holds
        REQUIRE(gate.prob_of(2, 0) == 1.0);  // both hold
        REQUIRE(gate.prob_of(3, 0) == 1.0);  // p1=n
        std::string text = render_rule_beam(compiled.network, "x1").text();
        REQUIRE(text.find("IF p1='t' AND p5='t' THEN x1='t' WITH 1.00000000000") !=
                std::string::npos);
        REQUIRE(text.find("IF p1='t' AND p5='n' THEN x1='n' WITH 1.00000000000") !=
                std::string::npos);
    }
    SECTION("the rule query builds the x1 -> x2 -> x3 cascade") {
        ParsedQuery q = parse_query("if (p5='t' .or. p1='n') .and. p3='n' then p6='t'");
        REQUIRE(q.rule);
        CompiledQuery compiled = compile_rule_node(net, *q.rule);
        REQUIRE(compiled.added == std::vector<std::string>{"x1", "x2", "x3"});
        REQUIRE(compiled.gate == "x3");
        const NodeValuation& x3 = compiled.network.valuation("x3");
        REQUIRE(x3.parents() == std::vector<std::string>{"p6", "x2"});
        const Variable& v3 = compiled.network.variable("x3");
        REQUIRE(v3.domain == std::vector<std::string>{"t", "n", "?"});
        // Premise-false rows map to '?' with weight 1.
        const Scope& ps = x3.parent_scope();
        for (std::size_t pc = 0; pc < ps.frame_size(); ++pc) {
            std::size_t x2_pos = *ps.index_of("x2");
            bool premise = ps.variable(x2_pos).domain[ps.digit(pc, x2_pos)] == "t";
            if (!premise) REQUIRE(x3.prob_of(pc, 2) == 1.0);
        }
    }
    SECTION("fresh gate names skip collisions") {
        std::vector<Variable> vars2 = vars;
        vars2.push_back(make_variable("x1", {"t", "n"}));
        std::vector<NodeValuation> vals2 = vals;
        vals2.push_back(
            NodeValuation::probabilistic(make_variable("x1", {"t", "n"}), {}, {0.5, 0.5}));
        std::vector<std::string> names2 = names;
        names2.push_back("x1");
        BeliefNetwork with_x1 =
            BeliefNetwork::build(vars2, Dag::make(names2, dag.edges()), vals2);
        CompiledQuery compiled = compile_query_node(with_x1, parse_expression("p1='t'"));
        REQUIRE(compiled.added == std::vector<std::string>{"x2"});
    }
}

TEST_CASE("expression queries match brute-force event probabilities") {
    BeliefNetwork net = ab_network();

    SECTION("the worked disjunction") {
        MassFunction m = evaluate_expression_query(net, parse_expression("a='t' .or. b='t'"));
        REQUIRE(m.mass_of(Bitset::single(2, 0)) == Catch::Approx(0.85).margin(kEqualityTol));
    }
    SECTION("conditioning an event on itself") {
        QueryExpr e = parse_expression("a='t'");
        MassFunction m = evaluate_expression_query(net, e, &e);
        REQUIRE(m.mass_of(Bitset::single(2, 0)) == Catch::Approx(1.0).margin(kEqualityTol));
    }
    SECTION("a tautology") {
        MassFunction m = evaluate_expression_query(net, parse_expression("a='t' .or. not a='t'"));
        REQUIRE(m.mass_of(Bitset::single(2, 0)) == Catch::Approx(1.0).margin(kEqualityTol));
    }
    SECTION("a zero-plausibility given is an error") {
        QueryExpr given = parse_expression("a='t' and not a='t'");
        QueryExpr e = parse_expression("b='t'");
        REQUIRE_THROWS_AS(evaluate_expression_query(net, e, &given), ConflictError);
    }
    SECTION("random expressions, unconditional and conditional") {
        std::mt19937 rng(149);
        for (int i = 0; i < 60; ++i) {
            BeliefNetwork rnet = random_prob_net(rng, 4, 0.5);
            QueryExpr e = random_expr(rng, rnet, 4);
            MassFunction m = evaluate_expression_query(rnet, e);
            REQUIRE(m.mass_of(Bitset::single(2, 0)) ==
                    Catch::Approx(brute_event_prob(rnet, e)).margin(kEqualityTol));
            QueryExpr given = random_expr(rng, rnet, 2);
            if (brute_event_prob(rnet, given) < 1e-6) continue;
            MassFunction mc = evaluate_expression_query(rnet, e, &given);
            REQUIRE(mc.mass_of(Bitset::single(2, 0)) ==
                    Catch::Approx(brute_conditional_prob(rnet, e, given)).margin(kEqualityTol));
        }
    }
    SECTION("ds networks answer with belief and plausibility") {
        Variable p = binary("p"), q = binary("q");
        Scope pq = Scope::of({p, q});
        Bitset implication(4);
        implication.set(0);
        implication.set(2);
        implication.set(3);
        BeliefNetwork dsnet = BeliefNetwork::build(
            {p, q}, Dag::make({"p", "q"}, {{"p", "q"}}),
            {NodeValuation::dempster_shafer(p, {}, MassFunction::vacuous(Scope::of({p}))),
             NodeValuation::dempster_shafer(q, {p},
                                            MassFunction::categorical(pq, implication))});
        MassFunction m = evaluate_expression_query(dsnet, parse_expression("q='t'"));
        Bitset t_single = Bitset::single(2, 0);
        REQUIRE(belief(m, t_single) == Catch::Approx(0.0).margin(kEqualityTol));
        REQUIRE(plausibility(m, t_single) == Catch::Approx(1.0).margin(kEqualityTol));
    }
}

TEST_CASE("rule validity is scored on the three-valued node") {
    BeliefNetwork net = ab_network();

    SECTION("the worked rule") {
        ParsedQuery q = parse_query("if a='t' then b='t'");
        ThreeValuedAnswer answer = validate_rule_query(net, *q.rule);
        REQUIRE(answer.fires_correct == Catch::Approx(0.63).margin(kEqualityTol));
        REQUIRE(answer.fires_wrong == Catch::Approx(0.07).margin(kEqualityTol));
        REQUIRE(answer.does_not_fire == Catch::Approx(0.30).margin(kEqualityTol));
        REQUIRE(answer.fires_correct + answer.fires_wrong + answer.does_not_fire ==
                Catch::Approx(1.0).margin(kEqualityTol));
    }
    SECTION("an unsatisfiable premise never fires") {
        ParsedQuery q = parse_query("if a='t' and not a='t' then b='t'");
        ThreeValuedAnswer answer = validate_rule_query(net, *q.rule);
        REQUIRE(answer.does_not_fire == Catch::Approx(1.0).margin(kEqualityTol));
    }
    SECTION("a premise implying the conclusion is never wrong") {
        ParsedQuery q = parse_query("if a='t' and b='t' then b='t'");
        ThreeValuedAnswer answer = validate_rule_query(net, *q.rule);
        REQUIRE(answer.fires_wrong == Catch::Approx(0.0).margin(kEqualityTol));
    }
    SECTION("random rules against brute force") {
        std::mt19937 rng(151);
        for (int i = 0; i < 40; ++i) {
            BeliefNetwork rnet = random_prob_net(rng, 4, 0.5);
            QueryExpr premise = random_expr(rng, rnet, 3);
            const Variable& cv = rnet.variables()[i % rnet.variables().size()];
            RuleQuery rule{premise, cv.name, cv.domain[i % 2]};
            ThreeValuedAnswer answer = validate_rule_query(rnet, rule);
            QueryExpr conclusion = QueryExpr::atom(rule.var, rule.value);
            QueryExpr fires_correct =
                QueryExpr::make(QueryExpr::Kind::conj, {premise, conclusion});
            QueryExpr fires_wrong = QueryExpr::make(
                QueryExpr::Kind::conj,
                {premise, QueryExpr::make(QueryExpr::Kind::neg, {conclusion})});
            REQUIRE(answer.fires_correct ==
                    Catch::Approx(brute_event_prob(rnet, fires_correct)).margin(kEqualityTol));
            REQUIRE(answer.fires_wrong ==
                    Catch::Approx(brute_event_prob(rnet, fires_wrong)).margin(kEqualityTol));
            REQUIRE(answer.does_not_fire ==
                    Catch::Approx(1.0 - brute_event_prob(rnet, premise)).margin(kEqualityTol));
            REQUIRE(answer.fires_correct + answer.fires_wrong + answer.does_not_fire ==
                    Catch::Approx(1.0).margin(kEqualityTol));
        }
    }
}

TEST_CASE("queries leave the network byte-identical") {
    BeliefNetwork net = ab_network();
    std::string before = serialize_network(net);
    evaluate_expression_query(net, parse_expression("a='t' .or. b='t'"));
    ParsedQuery q = parse_query("if a='t' then b='t'");
    validate_rule_query(net, *q.rule);
    compile_query_node(net, parse_expression("not b='f'"));
    REQUIRE(serialize_network(net) == before);
}
