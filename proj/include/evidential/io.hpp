#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evidential/network.hpp"

namespace evidential {

namespace detail {

inline std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

// Canonical document text for a network: fixed key order, variables, edges
// and valuations sorted by name, reals with 12 significant digits. Two
// semantically equal networks serialize identically.
inline std::string serialize_network(const BeliefNetwork& net) {
    std::ostringstream out;
    out << "{\n  \"format\": 1,\n  \"variables\": [\n";
    const auto& vars = net.variables();
    for (std::size_t i = 0; i < vars.size(); ++i) {
        out << "    {\"name\": " << detail::json_quote(vars[i].name) << ", \"domain\": [";
        for (std::size_t j = 0; j < vars[i].domain.size(); ++j) {
            if (j) out << ", ";
            out << detail::json_quote(vars[i].domain[j]);
        }
        out << "]}" << (i + 1 < vars.size() ? "," : "") << "\n";
    }
    out << "  ],\n  \"edges\": [\n";
    const auto& edges = net.dag().edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        out << "    [" << detail::json_quote(edges[i].first) << ", "
            << detail::json_quote(edges[i].second) << "]" << (i + 1 < edges.size() ? "," : "")
            << "\n";
    }
    out << "  ],\n  \"valuations\": [\n";
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        const NodeValuation& val = net.valuation(vars[vi].name);
        out << "    {\"node\": " << detail::json_quote(val.node()) << ", \"parents\": [";
        for (std::size_t j = 0; j < val.parents().size(); ++j) {
            if (j) out << ", ";
            out << detail::json_quote(val.parents()[j]);
        }
        out << "], \"kind\": ";
        const Scope& family = val.family();
        if (val.kind() == NodeValuation::Kind::probabilistic) {
            out << "\"probabilistic\", \"table\": [\n";
            const Variable& node_var = family.variable(*family.index_of(val.node()));
            std::size_t rows = val.parent_config_count();
            for (std::size_t pc = 0; pc < rows; ++pc) {
                for (std::size_t v = 0; v < node_var.domain.size(); ++v) {
                    out << "      {\"given\": {";
                    const Scope& ps = val.parent_scope();
                    for (std::size_t p = 0; p < ps.var_count(); ++p) {
                        if (p) out << ", ";
                        out << detail::json_quote(ps.variable(p).name) << ": "
                            << detail::json_quote(ps.variable(p).domain[ps.digit(pc, p)]);
                    }
                    out << "}, \"value\": " << detail::json_quote(node_var.domain[v])
                        << ", \"p\": " << format_real(val.prob_of(pc, v)) << "}";
                    bool last = pc + 1 == rows && v + 1 == node_var.domain.size();
                    out << (last ? "" : ",") << "\n";
                }
            }
            out << "    ]}";
        } else {
            out << "\"ds\", \"focals\": [\n";
            const auto& focals = val.ds_focals().focals();
            for (std::size_t f = 0; f < focals.size(); ++f) {
                out << "      {\"m\": " << format_real(focals[f].second) << ", \"set\": [";
                bool first = true;
                focals[f].first.for_each_bit([&](std::size_t c) {
                    if (!first) out << ", ";
                    first = false;
                    out << "{";
                    for (std::size_t p = 0; p < family.var_count(); ++p) {
                        if (p) out << ", ";
                        out << detail::json_quote(family.variable(p).name) << ": "
                            << detail::json_quote(family.variable(p).domain[family.digit(c, p)]);
                    }
                    out << "}";
                });
                out << "]}" << (f + 1 < focals.size() ? "," : "") << "\n";
            }
            out << "    ]}";
        }
        out << (vi + 1 < vars.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    return out.str();
}

inline void save_network(const BeliefNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidateError("cannot write '" + path + "'");
    out << serialize_network(net);
}

struct LoadedNetwork {
    BeliefNetwork network;
    std::vector<std::string> warnings;
};

// The structural part of a document: enough to estimate valuations from
// records. Valuations are optional here.
struct NetworkStructure {
    std::vector<Variable> variables;
    Dag dag;
    bool has_valuations = false;
};

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidateError("cannot read '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("network document: ") + e.what());
    }
}

inline void check_document_shell(const nlohmann::json& doc, const std::string& path) {
    if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_number_integer() ||
        doc["format"].get<int>() != 1)
        throw ParseError("'" + path + "': expected a format-1 network document");
    if (!doc.contains("variables") || !doc["variables"].is_array())
        throw ParseError("'" + path + "': missing 'variables' array");
    if (!doc.contains("edges") || !doc["edges"].is_array())
        throw ParseError("'" + path + "': missing 'edges' array");
}

inline std::vector<Variable> read_variables(const nlohmann::json& doc) {
    std::vector<Variable> variables;
    for (const auto& v : doc["variables"]) {
        if (!v.is_object() || !v.contains("name") || !v.contains("domain"))
            throw ParseError("variable entries need 'name' and 'domain'");
        std::vector<std::string> domain;
        for (const auto& d : v["domain"]) domain.push_back(d.get<std::string>());
        variables.push_back(make_variable(v["name"].get<std::string>(), std::move(domain)));
    }
    return variables;
}

inline Dag read_dag(const nlohmann::json& doc, const std::vector<Variable>& variables) {
    std::vector<std::string> names;
    for (const auto& v : variables) names.push_back(v.name);
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2)
            throw ParseError("edges must be [parent, child] pairs");
        edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    }
    return Dag::make(std::move(names), std::move(edges));
}

}  // namespace detail

inline NetworkStructure load_structure(const std::string& path) {
    nlohmann::json doc = detail::parse_json_file(path);
    detail::check_document_shell(doc, path);
    NetworkStructure s{detail::read_variables(doc), Dag{}, doc.contains("valuations")};
    s.dag = detail::read_dag(doc, s.variables);
    return s;
}

inline LoadedNetwork load_network(const std::string& path) {
    nlohmann::json doc = detail::parse_json_file(path);
    detail::check_document_shell(doc, path);
    std::vector<Variable> variables = detail::read_variables(doc);
    Dag dag = detail::read_dag(doc, variables);
    if (!doc.contains("valuations") || !doc["valuations"].is_array())
        throw ParseError("'" + path + "': missing 'valuations' array");

    auto variable_named = [&](const std::string& name) -> const Variable& {
        for (const auto& v : variables)
            if (v.name == name) return v;
        throw ValidateError("valuation references unknown variable '" + name + "'");
    };

    LoadedNetwork out{BeliefNetwork{}, {}};
    std::vector<NodeValuation> valuations;
    for (const auto& jv : doc["valuations"]) {
        if (!jv.is_object() || !jv.contains("node") || !jv.contains("kind"))
            throw ParseError("valuation entries need 'node' and 'kind'");
        std::string node = jv["node"].get<std::string>();
        const Variable& node_var = variable_named(node);
        std::vector<Variable> parents;
        if (jv.contains("parents"))
            for (const auto& p : jv["parents"]) parents.push_back(variable_named(p.get<std::string>()));
        std::vector<Variable> family_vars = parents;
        family_vars.push_back(node_var);
        Scope family = Scope::of(family_vars);
        std::string kind = jv["kind"].get<std::string>();
        if (kind == "probabilistic") {
            if (!jv.contains("table") || !jv["table"].is_array())
                throw ParseError("probabilistic valuation for '" + node + "' needs a 'table'");
            std::vector<std::optional<double>> table(family.frame_size());
            for (const auto& row : jv["table"]) {
                if (!row.contains("given") || !row.contains("value") || !row.contains("p"))
                    throw ParseError("table rows need 'given', 'value' and 'p'");
                std::map<std::string, std::string> assignment;
                for (const auto& [key, value] : row["given"].items())
                    assignment[key] = value.get<std::string>();
                assignment[node] = row["value"].get<std::string>();
                std::size_t c = family.config_index(assignment);
                if (table[c])
                    throw ValidateError("node '" + node + "': duplicate table row for " +
                                        family.config_label(c));
                table[c] = row["p"].get<double>();
            }
            std::vector<double> dense(family.frame_size());
            for (std::size_t c = 0; c < dense.size(); ++c) {
                if (!table[c])
                    throw ValidateError("node '" + node + "': missing table row for " +
                                        family.config_label(c));
                dense[c] = *table[c];
            }
            valuations.push_back(NodeValuation::probabilistic(node_var, parents, std::move(dense)));
        } else if (kind == "ds") {
            if (!jv.contains("focals") || !jv["focals"].is_array())
                throw ParseError("ds valuation for '" + node + "' needs 'focals'");
            std::vector<MassFunction::Focal> entries;
            std::map<Bitset, int> seen;
            for (const auto& focal : jv["focals"]) {
                if (!focal.contains("m") || !focal.contains("set") || !focal["set"].is_array())
                    throw ParseError("focal entries need 'm' and 'set'");
                Bitset set(family.frame_size());
                for (const auto& member : focal["set"]) {
                    std::map<std::string, std::string> assignment;
                    for (const auto& [key, value] : member.items())
                        assignment[key] = value.get<std::string>();
                    set.set(family.config_index(assignment));
                }
                if (++seen[set] == 2)
                    out.warnings.push_back("node '" + node +
                                           "': duplicate focal sets merged");
                entries.push_back({set, focal["m"].get<double>()});
            }
            valuations.push_back(NodeValuation::dempster_shafer(
                node_var, parents, MassFunction::from_focals(family, entries)));
        } else {
            throw ParseError("unknown valuation kind '" + kind + "' for node '" + node + "'");
        }
    }
    out.network = BeliefNetwork::build(std::move(variables), std::move(dag), std::move(valuations));
    return out;
}

// ---------------------------------------------------------------------------
// Record tables (CSV with a header row) and valuation estimation.

struct RecordTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string trim_cell(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    std::string cell = s.substr(a, b - a);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
        cell = cell.substr(1, cell.size() - 2);
    return cell;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim_cell(current));
            current.clear();
        } else {
            current += c;
        }
    }
    cells.push_back(trim_cell(current));
    return cells;
}

}  // namespace detail

inline RecordTable parse_records(std::istream& in) {
    RecordTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // header comments, e.g. "# format: 1"
        auto cells = detail::split_csv_line(line);
        if (table.header.empty()) {
            for (const auto& c : cells)
                if (c.empty()) throw ParseError("record header has an empty column name");
            table.header = cells;
        } else {
            if (cells.size() != table.header.size())
                throw ParseError("record row " + std::to_string(line_no) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(table.header.size()));
            table.rows.push_back(cells);
        }
    }
    if (table.header.empty()) throw ParseError("record table has no header row");
    return table;
}

inline RecordTable load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidateError("cannot read '" + path + "'");
    return parse_records(in);
}

struct EstimateResult {
    std::vector<NodeValuation> valuations;
    std::vector<std::string> warnings;
};

// Relative conditional frequencies with optional additive smoothing:
// P(x | pa) = (count(x,pa) + s) / (count(pa) + s*|domain|). With zero
// smoothing, an unseen parent configuration yields the uniform distribution
// and a warning.
inline EstimateResult estimate_valuations(const Dag& dag, const std::vector<Variable>& variables,
                                          const RecordTable& records, double smoothing = 0.0) {
    if (smoothing < 0) throw ValidateError("smoothing must be non-negative");
    if (records.rows.empty()) throw ValidateError("record table has no rows");
    auto variable_named = [&](const std::string& name) -> const Variable& {
        for (const auto& v : variables)
            if (v.name == name) return v;
        throw ValidateError("dag node '" + name + "' has no declared variable");
    };
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < records.header.size(); ++i) column[records.header[i]] = i;
    for (const auto& node : dag.nodes())
        if (!column.count(node))
            throw ValidateError("record header does not cover dag node '" + node + "'");

    // Values resolved to domain indices once, with row/column diagnostics.
    std::map<std::string, std::vector<std::size_t>> resolved;
    for (const auto& node : dag.nodes()) {
        const Variable& var = variable_named(node);
        std::vector<std::size_t> idx;
        idx.reserve(records.rows.size());
        for (std::size_t r = 0; r < records.rows.size(); ++r) {
            const std::string& cell = records.rows[r][column[node]];
            if (!var.has_value(cell))
                throw ValidateError("record row " + std::to_string(r + 1) + ", column '" + node +
                                    "': value '" + cell + "' not in domain");
            idx.push_back(var.value_index(cell));
        }
        resolved[node] = std::move(idx);
    }

    EstimateResult result;
    for (const auto& node : dag.nodes()) {
        const Variable& node_var = variable_named(node);
        std::vector<Variable> parents;
        for (const auto& p : dag.parents(node)) parents.push_back(variable_named(p));
        Scope parent_scope = Scope::of(parents);
        NodeValuation shape = NodeValuation::probabilistic(
            node_var, parents, uniform_table(scope_union(parent_scope, Scope::of({node_var})),
                                             node_var));
        std::vector<double> counts(shape.family().frame_size(), 0.0);
        std::vector<double> parent_counts(parent_scope.frame_size(), 0.0);
        for (std::size_t r = 0; r < records.rows.size(); ++r) {
            std::size_t pc = 0;
            for (std::size_t p = 0; p < parent_scope.var_count(); ++p)
                pc += resolved[parent_scope.variable(p).name][r] * parent_scope.stride(p);
            counts[shape.family_index(pc, resolved[node][r])] += 1.0;
            parent_counts[pc] += 1.0;
        }
        std::size_t values = node_var.domain.size();
        std::vector<double> table(shape.family().frame_size(), 0.0);
        for (std::size_t pc = 0; pc < parent_scope.frame_size(); ++pc) {
            double denom = parent_counts[pc] + smoothing * static_cast<double>(values);
            if (denom <= 0) {
                result.warnings.push_back("node '" + node + "': parent configuration " +
                                          parent_scope.config_label(pc) +
                                          " unseen in the records, using the uniform distribution");
                for (std::size_t v = 0; v < values; ++v)
                    table[shape.family_index(pc, v)] = 1.0 / static_cast<double>(values);
            } else {
                for (std::size_t v = 0; v < values; ++v)
                    table[shape.family_index(pc, v)] =
                        (counts[shape.family_index(pc, v)] + smoothing) / denom;
            }
        }
        result.valuations.push_back(NodeValuation::probabilistic(node_var, parents, table));
    }
    return result;
}

}  // namespace evidential
