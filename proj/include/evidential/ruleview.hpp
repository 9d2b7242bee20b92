#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evidential/jointree.hpp"
#include "evidential/logical.hpp"
#include "evidential/network.hpp"
#include "evidential/query.hpp"

namespace evidential {

// One IF .. THEN .. conditional of a rule beam.
struct RuleLine {
    std::vector<std::pair<std::string, std::string>> premise;  // parent atoms, canonical order
    std::pair<std::string, std::string> conclusion;            // node atom
};

// A beam of rules: the exhaustive rule rendering of one node valuation.
// Probabilistic groups are single lines weighted by the conditional
// probability; Dempster-Shafer groups chain one line per focal member and
// are weighted by the commonality of the focal set (equality to be read as
// "is containing").
struct RuleBeam {
    std::string node;
    std::vector<std::string> parents;
    NodeValuation::Kind kind = NodeValuation::Kind::probabilistic;

    struct Group {
        std::vector<RuleLine> lines;
        double weight = 0;
    };
    std::vector<Group> groups;

    std::string text() const {
        std::string out = "VALUATION " + node + " : " +
                          (kind == NodeValuation::Kind::probabilistic ? "probabilistic"
                                                                      : "dempster-shafer") +
                          "\n";
        for (const auto& group : groups) {
            for (std::size_t i = 0; i < group.lines.size(); ++i) {
                const RuleLine& line = group.lines[i];
                std::string s;
                if (i > 0) s += "AND ";
                for (std::size_t a = 0; a < line.premise.size(); ++a) {
                    s += a == 0 ? "IF " : " AND ";
                    s += line.premise[a].first + "='" + line.premise[a].second + "'";
                }
                if (!line.premise.empty()) s += " ";
                s += "THEN " + line.conclusion.first + "='" + line.conclusion.second + "'";
                if (i + 1 == group.lines.size()) s += " WITH " + format_real(group.weight);
                out += s + "\n";
            }
        }
        return out;
    }
};

// Renders the valuation of one node as a beam of rules.
inline RuleBeam render_rule_beam(const BeliefNetwork& net, const std::string& node) {
    const NodeValuation& val = net.valuation(node);
    RuleBeam beam;
    beam.node = node;
    beam.parents = val.parents();
    beam.kind = val.kind();
    const Scope& family = val.family();
    const Variable& node_var = family.variable(*family.index_of(node));

    auto premise_of = [&](std::size_t family_config) {
        std::vector<std::pair<std::string, std::string>> atoms;
        for (std::size_t i = 0; i < family.var_count(); ++i) {
            const Variable& v = family.variable(i);
            if (v.name == node) continue;
            atoms.push_back({v.name, v.domain[family.digit(family_config, i)]});
        }
        return atoms;
    };

    if (val.kind() == NodeValuation::Kind::probabilistic) {
        for (std::size_t pc = 0; pc < val.parent_config_count(); ++pc) {
            for (std::size_t v = 0; v < node_var.domain.size(); ++v) {
                std::size_t fc = val.family_index(pc, v);
                RuleBeam::Group group;
                group.lines.push_back(RuleLine{premise_of(fc), {node, node_var.domain[v]}});
                group.weight = val.prob_of(pc, v);
                beam.groups.push_back(std::move(group));
            }
        }
    } else {
        for (const auto& [set, mass] : val.ds_focals().focals()) {
            RuleBeam::Group group;
            set.for_each_bit([&](std::size_t fc) {
                const Variable& v = node_var;
                std::size_t node_pos = *family.index_of(node);
                group.lines.push_back(
                    RuleLine{premise_of(fc), {node, v.domain[family.digit(fc, node_pos)]}});
            });
            group.weight = commonality(val.ds_focals(), set);
            beam.groups.push_back(std::move(group));
        }
    }
    return beam;
}

namespace detail {

struct BeamLineParsed {
    bool continuation = false;
    std::vector<std::pair<std::string, std::string>> premise;
    std::pair<std::string, std::string> conclusion;
    std::optional<double> weight;
};

inline std::string beam_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Tokenizes one beam line of the grammar
//   [AND] [IF atom (AND atom)*] THEN atom [WITH real]
inline BeamLineParsed parse_beam_line(const std::string& line, std::size_t line_no) {
    std::istringstream in(line);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) words.push_back(w);
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError("beam line " + std::to_string(line_no) + ": " + why);
    };
    BeamLineParsed out;
    std::size_t i = 0;
    auto keyword = [&](const char* k) {
        return i < words.size() && beam_lower(words[i]) == k;
    };
    auto read_atom = [&]() {
        if (i >= words.size()) throw fail("expected atom, got end of line");
        const std::string& token = words[i];
        auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 2 >= token.size() ||
            token[eq + 1] != '\'' || token.back() != '\'')
            throw fail("malformed atom '" + token + "', expected name='value'");
        ++i;
        return std::make_pair(token.substr(0, eq), token.substr(eq + 2, token.size() - eq - 3));
    };
    if (keyword("and")) {
        out.continuation = true;
        ++i;
    }
    if (keyword("if")) {
        ++i;
        out.premise.push_back(read_atom());
        while (keyword("and")) {
            ++i;
            out.premise.push_back(read_atom());
        }
    }
    if (!keyword("then")) throw fail("expected THEN");
    ++i;
    out.conclusion = read_atom();
    if (keyword("with")) {
        ++i;
        if (i >= words.size()) throw fail("expected weight after WITH");
        char* end = nullptr;
        double v = std::strtod(words[i].c_str(), &end);
        if (!end || *end != '\0') throw fail("malformed weight '" + words[i] + "'");
        out.weight = v;
        ++i;
    }
    if (i != words.size()) throw fail("unexpected trailing token '" + words[i] + "'");
    return out;
}

}  // namespace detail

// Parses a rule beam in the canonical grammar back into a node valuation;
// the inverse of render_rule_beam. Variable domains come from the supplied
// declarations. Probabilistic beams are checked for complete table coverage
// and row stochasticity; Dempster-Shafer beams convert their commonality
// weights back to masses.
inline NodeValuation parse_rule_beam(const std::string& text,
                                     const std::vector<Variable>& variables) {
    auto find_variable = [&](const std::string& name) -> const Variable& {
        for (const auto& v : variables)
            if (v.name == name) return v;
        throw ValidateError("beam references unknown variable '" + name + "'");
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::string node;
    std::optional<NodeValuation::Kind> kind;
    std::vector<std::vector<detail::BeamLineParsed>> groups;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        std::size_t start = 0;
        while (start < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[start])))
            ++start;
        trimmed = trimmed.substr(start);
        if (trimmed.empty()) continue;
        if (!kind) {
            std::istringstream header(trimmed);
            std::string kw, name, colon, k;
            header >> kw >> name >> colon >> k;
            if (detail::beam_lower(kw) != "valuation" || colon != ":")
                throw ParseError("beam line " + std::to_string(line_no) +
                                 ": expected header 'VALUATION <node> : <kind>'");
            std::string kl = detail::beam_lower(k);
            if (kl == "probabilistic")
                kind = NodeValuation::Kind::probabilistic;
            else if (kl == "dempster-shafer" || kl == "ds")
                kind = NodeValuation::Kind::ds;
            else
                throw ParseError("beam line " + std::to_string(line_no) + ": unknown kind '" + k +
                                 "'");
            node = name;
            continue;
        }
        auto parsed = detail::parse_beam_line(trimmed, line_no);
        if (parsed.continuation) {
            if (groups.empty() || groups.back().back().weight)
                throw ParseError("beam line " + std::to_string(line_no) +
                                 ": continuation without an open group");
            groups.back().push_back(std::move(parsed));
        } else {
            if (!groups.empty() && !groups.back().back().weight)
                throw ParseError("beam line " + std::to_string(line_no) +
                                 ": previous group is missing its WITH weight");
            groups.push_back({std::move(parsed)});
        }
    }
    if (!kind) throw ParseError("beam has no header line");
    if (groups.empty()) throw ParseError("beam has no rule lines");
    if (!groups.back().back().weight) throw ParseError("final beam group is missing its WITH weight");

    // Conclusion variable must be the header node everywhere; the premise
    // variables determine the parents.
    std::set<std::string> parent_names;
    for (const auto& group : groups)
        for (const auto& l : group)
            for (const auto& [var, value] : l.premise) parent_names.insert(var);
    const Variable& node_var = find_variable(node);
    std::vector<Variable> parent_vars;
    for (const auto& name : parent_names) {
        if (name == node)
            throw ValidateError("beam premise references the node '" + node + "' itself");
        parent_vars.push_back(find_variable(name));
    }
    std::vector<Variable> family_vars = parent_vars;
    family_vars.push_back(node_var);
    Scope family = Scope::of(family_vars);

    auto config_of = [&](const detail::BeamLineParsed& l, std::size_t line_hint) {
        std::map<std::string, std::string> assignment;
        for (const auto& [var, value] : l.premise) {
            if (!assignment.emplace(var, value).second)
                throw ValidateError("beam group " + std::to_string(line_hint) +
                                    " repeats variable '" + var + "' in one premise");
        }
        if (l.conclusion.first != node)
            throw ValidateError("beam conclusion names '" + l.conclusion.first + "', expected '" +
                                node + "'");
        assignment[node] = l.conclusion.second;
        if (assignment.size() != family.var_count())
            throw ValidateError("beam group " + std::to_string(line_hint) +
                                " does not assign every parent");
        return family.config_index(assignment);
    };

    if (*kind == NodeValuation::Kind::probabilistic) {
        std::vector<std::optional<double>> table(family.frame_size());
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].size() != 1)
                throw ValidateError("probabilistic beam group " + std::to_string(g + 1) +
                                    " chains multiple conditionals");
            std::size_t c = config_of(groups[g][0], g + 1);
            if (table[c])
                throw ValidateError("probabilistic beam covers one table entry twice");
            table[c] = *groups[g][0].weight;
        }
        std::vector<double> dense(family.frame_size());
        for (std::size_t c = 0; c < table.size(); ++c) {
            if (!table[c])
                throw ValidateError("probabilistic beam misses table entry " +
                                    family.config_label(c));
            dense[c] = *table[c];
        }
        return NodeValuation::probabilistic(node_var, parent_vars, std::move(dense));
    }

    std::vector<std::pair<Bitset, double>> q_entries;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Bitset set(family.frame_size());
        for (const auto& l : groups[g]) set.set(config_of(l, g + 1));
        q_entries.push_back({set, *groups[g].back().weight});
    }
    MassFunction focals = mass_from_commonality(family, q_entries);
    return NodeValuation::dempster_shafer(node_var, parent_vars, focals);
}

// ---------------------------------------------------------------------------
// Query compilation: temporary deterministic gate nodes.

struct CompiledQuery {
    BeliefNetwork network;           // amended copy; the original is untouched
    std::string gate;                // node whose marginal answers the query
    std::vector<std::string> added;  // every temporary node, in creation order
};

namespace detail {

struct GateBuilder {
    const BeliefNetwork& base;
    std::vector<Variable> variables;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<NodeValuation> valuations;
    std::vector<std::string> added;
    std::size_t counter = 0;

    explicit GateBuilder(const BeliefNetwork& net) : base(net) {
        variables = net.variables();
        edges = net.dag().edges();
        for (const auto& v : net.variables()) valuations.push_back(net.valuation(v.name));
    }

    bool name_taken(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return true;
        return false;
    }

    std::string fresh_name() {
        while (true) {
            std::string name = "x" + std::to_string(++counter);
            if (!name_taken(name)) return name;
        }
    }

    const Variable& declared(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return v;
        throw ValidateError("unknown variable '" + name + "' in expression");
    }

    // An operand of a gate: a test on one existing variable.
    struct Operand {
        std::string var;
        std::string value;  // operand holds iff var == value
    };

    Operand compile(const QueryExpr& expr) {
        if (expr.kind == QueryExpr::Kind::atom) {
            const Variable& v = declared(expr.var);
            if (!v.has_value(expr.value))
                throw ValidateError("unknown value '" + expr.value + "' for variable '" +
                                    expr.var + "'");
            return {expr.var, expr.value};
        }
        std::vector<Operand> operands;
        for (const auto& child : expr.children) operands.push_back(compile(child));
        return {add_gate(expr.kind, operands), "t"};
    }

    // One fresh boolean node per connective cluster, parents being the
    // operand variables, table the 0/1 indicator of the connective.
    std::string add_gate(QueryExpr::Kind kind, const std::vector<Operand>& operands) {
        std::vector<std::string> parent_names;
        for (const auto& op : operands)
            if (std::find(parent_names.begin(), parent_names.end(), op.var) ==
                parent_names.end())
                parent_names.push_back(op.var);
        std::vector<Variable> parents;
        for (const auto& name : parent_names) parents.push_back(declared(name));
        Scope parent_scope = Scope::of(parents);

        std::string gate = fresh_name();
        Variable gate_var = make_variable(gate, {"t", "n"});
        NodeValuation shape =
            NodeValuation::probabilistic(gate_var, parents, uniform_gate_table(parent_scope));
        std::vector<double> table(shape.family().frame_size(), 0.0);
        for (std::size_t pc = 0; pc < parent_scope.frame_size(); ++pc) {
            bool truth;
            auto holds = [&](const Operand& op) {
                std::size_t pos = *parent_scope.index_of(op.var);
                return parent_scope.variable(pos).domain[parent_scope.digit(pc, pos)] == op.value;
            };
            switch (kind) {
                case QueryExpr::Kind::conj:
                    truth = true;
                    for (const auto& op : operands) truth = truth && holds(op);
                    break;
                case QueryExpr::Kind::disj:
                    truth = false;
                    for (const auto& op : operands) truth = truth || holds(op);
                    break;
                case QueryExpr::Kind::neg:
                    truth = !holds(operands[0]);
                    break;
                case QueryExpr::Kind::atom:
                    truth = holds(operands[0]);
                    break;
            }
            table[shape.family_index(pc, truth ? 0 : 1)] = 1.0;
        }
        install(gate_var, parents, std::move(table));
        return gate;
    }

    // The final three-valued node of a rule query: t iff premise and
    // conclusion, n iff premise and not conclusion, ? iff no premise.
    std::string add_rule_node(const std::string& premise_gate, const std::string& conclusion_var,
                              const std::string& conclusion_value) {
        const Variable& cvar = declared(conclusion_var);
        if (!cvar.has_value(conclusion_value))
            throw ValidateError("unknown value '" + conclusion_value + "' for variable '" +
                                conclusion_var + "'");
        std::vector<Variable> parents{declared(premise_gate), cvar};
        Scope parent_scope = Scope::of(parents);
        std::string gate = fresh_name();
        Variable gate_var = make_variable(gate, {"t", "n", "?"});
        NodeValuation shape =
            NodeValuation::probabilistic(gate_var, parents, uniform_gate_table_3(parent_scope));
        std::vector<double> table(shape.family().frame_size(), 0.0);
        std::size_t premise_pos = *parent_scope.index_of(premise_gate);
        std::size_t conclusion_pos = *parent_scope.index_of(conclusion_var);
        for (std::size_t pc = 0; pc < parent_scope.frame_size(); ++pc) {
            bool fires = parent_scope.variable(premise_pos)
                             .domain[parent_scope.digit(pc, premise_pos)] == "t";
            bool correct = parent_scope.variable(conclusion_pos)
                               .domain[parent_scope.digit(pc, conclusion_pos)] ==
                           conclusion_value;
            std::size_t outcome = !fires ? 2 : (correct ? 0 : 1);
            table[shape.family_index(pc, outcome)] = 1.0;
        }
        install(gate_var, parents, std::move(table));
        return gate;
    }

    void install(const Variable& gate_var, const std::vector<Variable>& parents,
                 std::vector<double> table) {
        variables.push_back(gate_var);
        for (const auto& p : parents) edges.push_back({p.name, gate_var.name});
        valuations.push_back(NodeValuation::probabilistic(gate_var, parents, std::move(table)));
        added.push_back(gate_var.name);
    }

    BeliefNetwork finish() const {
        std::vector<std::string> names;
        for (const auto& v : variables) names.push_back(v.name);
        return BeliefNetwork::build(variables, Dag::make(names, edges), valuations);
    }

    static std::vector<double> uniform_gate_table(const Scope& parent_scope) {
        return std::vector<double>(parent_scope.frame_size() * 2, 0.5);
    }
    static std::vector<double> uniform_gate_table_3(const Scope& parent_scope) {
        return std::vector<double>(parent_scope.frame_size() * 3, 1.0 / 3.0);
    }
};

}  // namespace detail

// Amends the network by the deterministic gate nodes of the expression,
// returning the new network and the top gate name. The original network
// value is never modified; dropping the amended copy restores everything.
inline CompiledQuery compile_query_node(const BeliefNetwork& net, const QueryExpr& expr) {
    detail::GateBuilder builder(net);
    detail::GateBuilder::Operand top = builder.compile(expr);
    std::string gate = top.var;
    if (builder.added.empty() || builder.added.back() != gate || top.value != "t") {
        // A bare atom compiles to an identity gate so the answer is always
        // the marginal of a fresh boolean node.
        gate = builder.add_gate(QueryExpr::Kind::atom, {top});
    }
    return CompiledQuery{builder.finish(), gate, builder.added};
}

inline CompiledQuery compile_rule_node(const BeliefNetwork& net, const RuleQuery& rule) {
    detail::GateBuilder builder(net);
    detail::GateBuilder::Operand premise = builder.compile(rule.premise);
    std::string premise_gate = premise.var;
    if (builder.added.empty() || builder.added.back() != premise_gate || premise.value != "t")
        premise_gate = builder.add_gate(QueryExpr::Kind::atom, {premise});
    std::string gate = builder.add_rule_node(premise_gate, rule.var, rule.value);
    return CompiledQuery{builder.finish(), gate, builder.added};
}

// The probability / belief of a logical event: compiles the gate nodes,
// propagates, and reads the gate marginal over {t,n}. With `given`, the
// given-expression's gate is clamped to t first.
inline MassFunction evaluate_expression_query(const BeliefNetwork& net, const QueryExpr& expr,
                                              const QueryExpr* given = nullptr) {
    detail::GateBuilder builder(net);
    detail::GateBuilder::Operand top = builder.compile(expr);
    std::string gate = top.var;
    if (builder.added.empty() || builder.added.back() != gate || top.value != "t")
        gate = builder.add_gate(QueryExpr::Kind::atom, {top});
    EvidenceSet evidence;
    if (given) {
        detail::GateBuilder::Operand g = builder.compile(*given);
        std::string given_gate = g.var;
        if (builder.added.empty() || builder.added.back() != given_gate || g.value != "t")
            given_gate = builder.add_gate(QueryExpr::Kind::atom, {g});
        evidence.add(given_gate, {"t"});
    }
    BeliefNetwork amended = builder.finish();
    try {
        return query_marginal(amended, gate, evidence);
    } catch (const ConflictError&) {
        throw ConflictError("the given event has zero plausibility");
    }
}

// How frequently the rule fires and is correct (t), fires but errs (n), or
// does not fire at all (?). For probabilistic networks the three masses are
// the exact outcome probabilities and sum to 1; for Dempster-Shafer
// networks the full marginal carries any remaining compound focals.
struct ThreeValuedAnswer {
    double fires_correct = 0;   // t
    double fires_wrong = 0;     // n
    double does_not_fire = 0;   // ?
    MassFunction marginal;      // full bpa over {t,n,?}
};

inline ThreeValuedAnswer validate_rule_query(const BeliefNetwork& net, const RuleQuery& rule) {
    CompiledQuery compiled = compile_rule_node(net, rule);
    MassFunction marginal = query_marginal(compiled.network, compiled.gate, EvidenceSet{});
    const Scope& scope = marginal.scope();
    const Variable& var = scope.variable(std::size_t{0});
    ThreeValuedAnswer out;
    out.marginal = marginal;
    out.fires_correct = marginal.mass_of(Bitset::single(scope.frame_size(), var.value_index("t")));
    out.fires_wrong = marginal.mass_of(Bitset::single(scope.frame_size(), var.value_index("n")));
    out.does_not_fire = marginal.mass_of(Bitset::single(scope.frame_size(), var.value_index("?")));
    return out;
}

}  // namespace evidential
