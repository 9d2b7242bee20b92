#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evidential/io.hpp"
#include "evidential/jointree.hpp"
#include "evidential/revision.hpp"
#include "evidential/ruleview.hpp"

namespace evidential {

// REPL / command state. Temporary query nodes never land here: queries run
// on amended copies, so between commands the network is exactly the last
// loaded or derived one. --verbose on any command turns diagnostic output
// on for the rest of the session.
struct Session {
    std::optional<BeliefNetwork> network;
    bool verbose = false;
};

namespace cli_detail {

// Splits a command line into tokens; double quotes group a token and are
// stripped, so expressions with spaces and single quotes pass through.
inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::string current;
    bool in_quotes = false;
    bool started = false;
    for (char c : line) {
        if (c == '"') {
            in_quotes = !in_quotes;
            started = true;
            continue;
        }
        if (!in_quotes && std::isspace(static_cast<unsigned char>(c))) {
            if (started || !current.empty()) {
                out.push_back(current);
                current.clear();
                started = false;
            }
            continue;
        }
        current += c;
    }
    if (in_quotes) throw UsageError("unterminated double quote");
    if (started || !current.empty()) out.push_back(current);
    return out;
}

inline BeliefNetwork& require_network(Session& session) {
    if (!session.network)
        throw UsageError("no network loaded; use 'load <file>' or pass --net <file>");
    return *session.network;
}

struct Options {
    std::vector<std::string> positional;
    std::map<std::string, std::string> flags;
    std::set<std::string> switches;
};

inline Options parse_options(const std::vector<std::string>& argv, std::size_t start,
                             const std::set<std::string>& known_flags,
                             const std::set<std::string>& known_switches = {}) {
    Options out;
    for (std::size_t i = start; i < argv.size(); ++i) {
        const std::string& a = argv[i];
        if (a.rfind("--", 0) == 0) {
            std::string name = a.substr(2);
            if (known_switches.count(name)) {
                out.switches.insert(name);
                continue;
            }
            if (!known_flags.count(name)) throw UsageError("unknown option --" + name);
            if (i + 1 >= argv.size()) throw UsageError("option --" + name + " needs a value");
            if (!out.flags.emplace(name, argv[++i]).second)
                throw UsageError("option --" + name + " given twice");
        } else {
            out.positional.push_back(a);
        }
    }
    return out;
}

inline std::vector<std::string> split_csv_names(const std::string& s) {
    std::vector<std::string> out;
    if (s == "-") return out;
    std::string current;
    for (char c : s) {
        if (c == ',') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

// Evidence derived from a --given expression: the expression's gate clamped
// to t on an amended network.
struct GivenContext {
    BeliefNetwork network;
    EvidenceSet evidence;
};

inline GivenContext with_given(const BeliefNetwork& net, const std::string& given_text) {
    QueryExpr given = parse_expression(given_text);
    CompiledQuery compiled = compile_query_node(net, given);
    GivenContext ctx{compiled.network, {}};
    ctx.evidence.add(compiled.gate, {"t"});
    return ctx;
}

inline void print_diagnostic(std::ostream& out, const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << "\n";
}

inline void print_marginal(std::ostream& out, const BeliefNetwork& net, const std::string& var,
                           const MassFunction& marginal) {
    const Variable& v = net.variable(var);
    if (net.probabilistic() && marginal.bayesian()) {
        for (std::size_t i = 0; i < v.domain.size(); ++i) {
            Bitset single = Bitset::single(marginal.scope().frame_size(), i);
            out << "P(" << var << "=" << v.domain[i] << ") = " << format_real(marginal.mass_of(single))
                << "\n";
        }
    } else {
        out << marginal.render();
        for (std::size_t i = 0; i < v.domain.size(); ++i) {
            Bitset single = Bitset::single(marginal.scope().frame_size(), i);
            out << var << "=" << v.domain[i] << ": Bel = " << format_real(belief(marginal, single))
                << ", Pl = " << format_real(plausibility(marginal, single)) << "\n";
        }
    }
}

inline int run_command(Session& session, const std::vector<std::string>& argv_in,
                       std::ostream& out) {
    // --verbose anywhere turns session diagnostics on and is stripped here.
    std::vector<std::string> argv;
    for (const auto& a : argv_in) {
        if (a == "--verbose")
            session.verbose = true;
        else
            argv.push_back(a);
    }
    if (argv.empty()) return 0;
    const std::string& cmd = argv[0];

    if (cmd == "load") {
        auto opt = parse_options(argv, 1, {});
        if (opt.positional.size() != 1) throw UsageError("usage: load <network-file>");
        LoadedNetwork loaded = load_network(opt.positional[0]);
        for (const auto& w : loaded.warnings) out << "warning: " << w << "\n";
        session.network = std::move(loaded.network);
        out << "loaded network: variables=" << session.network->variables().size()
            << " edges=" << session.network->dag().edges().size() << "\n";
        return 0;
    }
    if (cmd == "save") {
        auto opt = parse_options(argv, 1, {"net"});
        if (opt.positional.size() != 1) throw UsageError("usage: save <network-file>");
        if (opt.flags.count("net")) session.network = load_network(opt.flags.at("net")).network;
        save_network(require_network(session), opt.positional[0]);
        out << "saved: " << opt.positional[0] << "\n";
        return 0;
    }

    auto load_net_flag = [&](const Options& opt) {
        if (opt.flags.count("net")) session.network = load_network(opt.flags.at("net")).network;
    };

    if (cmd == "show-rules") {
        auto opt = parse_options(argv, 1, {"net"});
        load_net_flag(opt);
        if (opt.positional.size() != 1) throw UsageError("usage: show-rules <node>");
        out << render_rule_beam(require_network(session), opt.positional[0]).text();
        return 0;
    }
    if (cmd == "marginal") {
        auto opt = parse_options(argv, 1, {"net", "given"});
        load_net_flag(opt);
        if (opt.positional.size() != 1) throw UsageError("usage: marginal <var> [--given \"<expr>\"]");
        const BeliefNetwork& net = require_network(session);
        const std::string& var = opt.positional[0];
        if (!net.has_variable(var)) throw ValidateError("unknown variable '" + var + "'");
        MassFunction marginal = [&] {
            if (opt.flags.count("given")) {
                GivenContext ctx = with_given(net, opt.flags.at("given"));
                if (session.verbose)
                    print_diagnostic(out, dump(network_join_tree(ctx.network, ctx.evidence,
                                                                 ctx.network.scope_of({var}))));
                return query_marginal(ctx.network, var, ctx.evidence);
            }
            if (session.verbose)
                print_diagnostic(
                    out, dump(network_join_tree(net, EvidenceSet{}, net.scope_of({var}))));
            return query_marginal(net, var, EvidenceSet{});
        }();
        print_marginal(out, net, var, marginal);
        return 0;
    }
    if (cmd == "query") {
        auto opt = parse_options(argv, 1, {"net", "given"});
        load_net_flag(opt);
        if (opt.positional.size() != 1) throw UsageError("usage: query \"<expr>\" [--given \"<expr>\"]");
        const BeliefNetwork& net = require_network(session);
        QueryExpr expr = parse_expression(opt.positional[0]);
        std::optional<QueryExpr> given;
        if (opt.flags.count("given")) given = parse_expression(opt.flags.at("given"));
        if (session.verbose) {
            CompiledQuery compiled = compile_query_node(net, expr);
            BeliefNetwork shown = compiled.network;
            EvidenceSet ev;
            if (given) {
                CompiledQuery g = compile_query_node(shown, *given);
                shown = g.network;
                ev.add(g.gate, {"t"});
            }
            print_diagnostic(out, "gate node: " + compiled.gate);
            print_diagnostic(out,
                             dump(network_join_tree(shown, ev, shown.scope_of({compiled.gate}))));
        }
        MassFunction marginal = evaluate_expression_query(net, expr, given ? &*given : nullptr);
        Bitset t_single = Bitset::single(marginal.scope().frame_size(),
                                         marginal.scope().variable(std::size_t{0}).value_index("t"));
        if (net.probabilistic()) {
            out << "P = " << format_real(marginal.mass_of(t_single)) << "\n";
        } else {
            out << "Bel = " << format_real(belief(marginal, t_single)) << "\n";
            out << "Pl = " << format_real(plausibility(marginal, t_single)) << "\n";
        }
        return 0;
    }
    if (cmd == "validate-rule") {
        auto opt = parse_options(argv, 1, {"net"});
        load_net_flag(opt);
        if (opt.positional.size() != 1) throw UsageError("usage: validate-rule \"if <expr> then <atom>\"");
        const BeliefNetwork& net = require_network(session);
        ParsedQuery parsed = parse_query(opt.positional[0]);
        if (!parsed.rule) throw UsageError("validate-rule expects an 'if .. then ..' query");
        if (session.verbose) {
            CompiledQuery compiled = compile_rule_node(net, *parsed.rule);
            print_diagnostic(out, "rule node: " + compiled.gate);
            print_diagnostic(out, dump(network_join_tree(compiled.network, EvidenceSet{},
                                                         compiled.network.scope_of(
                                                             {compiled.gate}))));
        }
        ThreeValuedAnswer answer = validate_rule_query(net, *parsed.rule);
        out << "P(t) = " << format_real(answer.fires_correct) << "\n";
        out << "P(n) = " << format_real(answer.fires_wrong) << "\n";
        out << "P(?) = " << format_real(answer.does_not_fire) << "\n";
        if (!net.probabilistic()) print_diagnostic(out, "marginal bpa:\n" + answer.marginal.render());
        return 0;
    }
    if (cmd == "mpe") {
        auto opt = parse_options(argv, 1, {"net", "given", "hypothesize", "explain"},
                                 {"normalized"});
        load_net_flag(opt);
        if (!opt.positional.empty()) throw UsageError("mpe takes only options");
        const BeliefNetwork& net = require_network(session);
        RevisionMode mode = RevisionMode::conditioning();
        if (opt.flags.count("hypothesize")) {
            const std::string& clamp = opt.flags.at("hypothesize");
            auto eq = clamp.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 >= clamp.size())
                throw UsageError("--hypothesize expects var=value");
            mode = RevisionMode::hypothesizing(clamp.substr(0, eq), clamp.substr(eq + 1));
        } else if (opt.flags.count("explain")) {
            mode = RevisionMode::explanatory(opt.flags.at("explain"));
        }
        BeliefNetwork target = net;
        EvidenceSet evidence;
        if (opt.flags.count("given")) {
            GivenContext ctx = with_given(net, opt.flags.at("given"));
            target = std::move(ctx.network);
            evidence = std::move(ctx.evidence);
        }
        Explanation explanation = revise(target, mode, evidence);
        if (session.verbose)
            print_diagnostic(out, "ties: " + std::to_string(explanation.ties.size()));

        // Derived score: beta divided by the sum-product probability of all
        // clamps, the chain product of their conditional marginals.
        std::optional<double> normalized;
        if (opt.switches.count("normalized")) {
            if (!target.probabilistic())
                throw ValidateError("--normalized needs a probabilistic network");
            EvidenceSet clamps = evidence;
            if (mode.kind == RevisionMode::Kind::hypothesizing)
                clamps.add(mode.variable, {mode.value});
            double z = 1.0;
            EvidenceSet seen;
            for (const auto& [var, values] : clamps.assignments) {
                MassFunction marginal = query_marginal(target, var, seen);
                const Variable& v = target.variable(var);
                double p = 0;
                for (const auto& value : values)
                    p += marginal.mass_of(Bitset::single(marginal.scope().frame_size(),
                                                         v.value_index(value)));
                z *= p;
                seen.add(var, values);
            }
            normalized = explanation.score / z;
        }

        // Render over the original variables only; gate nodes stay internal.
        std::string line;
        bool point = true;
        for (const auto& v : net.variables()) {
            auto value = explanation.value_of(v.name);
            if (!value) {
                point = false;
                break;
            }
            line += v.name + "=" + *value + " ";
        }
        if (point)
            out << line << "beta=" << format_real(explanation.score);
        else
            out << explanation.render();
        if (normalized) out << " normalized=" << format_real(*normalized);
        out << "\n";
        return 0;
    }
    if (cmd == "dsep") {
        auto opt = parse_options(argv, 1, {"net"});
        load_net_flag(opt);
        if (opt.positional.size() != 3)
            throw UsageError("usage: dsep <J> <K> <L> (comma-separated node lists, '-' for empty)");
        const BeliefNetwork& net = require_network(session);
        bool separated = d_separated(net.dag(), split_csv_names(opt.positional[0]),
                                     split_csv_names(opt.positional[1]),
                                     split_csv_names(opt.positional[2]));
        out << "d-separated: " << (separated ? "true" : "false") << "\n";
        return 0;
    }
    if (cmd == "estimate") {
        auto opt = parse_options(argv, 1, {"data", "dag", "smoothing", "out"});
        if (!opt.positional.empty()) throw UsageError("estimate takes only options");
        if (!opt.flags.count("data") || !opt.flags.count("dag") || !opt.flags.count("out"))
            throw UsageError("usage: estimate --data <csv> --dag <net> [--smoothing s] --out <net>");
        double smoothing = 0.0;
        if (opt.flags.count("smoothing")) {
            char* end = nullptr;
            smoothing = std::strtod(opt.flags.at("smoothing").c_str(), &end);
            if (!end || *end != '\0') throw UsageError("--smoothing expects a number");
        }
        NetworkStructure structure = load_structure(opt.flags.at("dag"));
        RecordTable records = load_records(opt.flags.at("data"));
        EstimateResult estimated =
            estimate_valuations(structure.dag, structure.variables, records, smoothing);
        for (const auto& w : estimated.warnings) out << "warning: " << w << "\n";
        BeliefNetwork net =
            BeliefNetwork::build(structure.variables, structure.dag, estimated.valuations);
        save_network(net, opt.flags.at("out"));
        out << "estimated valuations for " << structure.dag.nodes().size()
            << " nodes: " << opt.flags.at("out") << "\n";
        return 0;
    }
    throw UsageError("unknown command '" + cmd + "'");
}

}  // namespace cli_detail

// Executes one command; errors become one-line messages with a stable code
// prefix. Exit status: 0 success, 1 domain error, 2 usage error.
inline int execute_command(Session& session, const std::vector<std::string>& argv,
                           std::ostream& out, std::ostream& err) {
    try {
        return cli_detail::run_command(session, argv, out);
    } catch (const Error& e) {
        err << e.prefix() << ": " << e.what() << "\n";
        return e.code() == ErrorCode::usage ? 2 : 1;
    } catch (const std::exception& e) {
        err << "E_VALIDATE: " << e.what() << "\n";
        return 1;
    }
}

// Reads one command per line (the argv grammar without the program name),
// echoing results; errors are reported inline and do not end the loop.
// 'quit' and end of input exit with status 0.
inline int repl_loop(Session& session, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> argv;
        try {
            argv = cli_detail::tokenize(line);
        } catch (const Error& e) {
            out << e.prefix() << ": " << e.what() << "\n";
            continue;
        }
        if (argv.empty()) continue;
        if (argv[0] == "quit") return 0;
        execute_command(session, argv, out, out);
    }
    return 0;
}

}  // namespace evidential
