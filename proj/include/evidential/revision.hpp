#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evidential/jointree.hpp"
#include "evidential/maxprod.hpp"
#include "evidential/network.hpp"

namespace evidential {

// The three ways of asking for a best explanation.
struct RevisionMode {
    enum class Kind { explanatory, hypothesizing, conditioning };

    Kind kind = Kind::conditioning;
    std::string variable;  // explanatory / hypothesizing root
    std::string value;     // hypothesizing clamp

    static RevisionMode explanatory(std::string variable) {
        return {Kind::explanatory, std::move(variable), {}};
    }
    static RevisionMode hypothesizing(std::string variable, std::string value) {
        return {Kind::hypothesizing, std::move(variable), std::move(value)};
    }
    // "what will happen if e?": the clamp itself arrives as the evidence set.
    static RevisionMode conditioning() { return {Kind::conditioning, {}, {}}; }
};

// A best explanation: the maximizing set of configurations over all network
// variables (a single configuration whenever every witness is pointwise),
// its unnormalized score, and the full tie set.
struct Explanation {
    Scope scope;
    Bitset configs;
    double score = 0;
    std::vector<Bitset> ties;  // every maximizing set, ascending; includes configs

    bool point() const { return configs.count() == 1; }

    std::optional<std::string> value_of(const std::string& variable) const {
        auto pos = scope.index_of(variable);
        if (!pos) return std::nullopt;
        std::optional<std::size_t> digit;
        bool mixed = false;
        configs.for_each_bit([&](std::size_t c) {
            std::size_t d = scope.digit(c, *pos);
            if (!digit)
                digit = d;
            else if (*digit != d)
                mixed = true;
        });
        if (!digit || mixed) return std::nullopt;
        return scope.variable(*pos).domain[*digit];
    }

    // "var=value" items in canonical order plus the beta score; the set form
    // is used when the explanation is not a single configuration.
    std::string render() const {
        std::string out;
        if (point()) {
            std::size_t config = 0;
            configs.for_each_bit([&](std::size_t c) { config = c; });
            for (std::size_t i = 0; i < scope.var_count(); ++i) {
                out += scope.variable(i).name + "=" +
                       scope.variable(i).domain[scope.digit(config, i)] + " ";
            }
        } else {
            out += "{";
            bool first = true;
            configs.for_each_bit([&](std::size_t c) {
                if (!first) out += ',';
                first = false;
                out += scope.config_label(c);
            });
            out += "} ";
        }
        out += "beta=" + format_real(score);
        return out;
    }
};

namespace detail {

// Collect-phase record for one tree node: the max-fused content of its
// subtree, the trace of the fold that produced it, and the traced projection
// sent toward the parent.
struct CollectRecord {
    MassFunction fused;
    std::vector<MaxCombined> steps;            // step k combines acc(k-1) with operand k
    std::vector<MassFunction> operands;        // operand 0.. (locals, then child messages)
    std::vector<std::optional<std::size_t>> operand_child;  // child node per operand
    std::optional<MaxMarginalized> to_parent;
};

inline constexpr std::size_t kTieSetCap = 4096;

// Enumerates, for a chosen focal of the fused content, every combination of
// operand focal choices attaining it (per-operand ascending).
inline void unwind_fold(const CollectRecord& record, std::size_t focal_index,
                        std::vector<std::vector<std::size_t>>& out_choices) {
    std::size_t k = record.operands.size();
    if (k == 0) return;
    std::vector<std::size_t> current(k, 0);
    // Walk backwards through the fold steps, branching over tied sources.
    struct Frame {
        std::size_t step;   // combining step index (operand step+1), 0 = done
        std::size_t index;  // focal index within accumulator(step)
    };
    std::vector<std::pair<Frame, std::vector<std::size_t>>> stack;
    stack.push_back({{k - 1, focal_index}, std::vector<std::size_t>(k, 0)});
    while (!stack.empty()) {
        auto [frame, chosen] = stack.back();
        stack.pop_back();
        if (frame.step == 0) {
            chosen[0] = frame.index;
            out_choices.push_back(std::move(chosen));
            if (out_choices.size() > kTieSetCap)
                throw CapacityError("tie set of the revision exceeds capacity");
            continue;
        }
        const MaxCombined& step = record.steps[frame.step - 1];
        for (const auto& [acc_idx, op_idx] : step.sources[frame.index]) {
            auto next = chosen;
            next[frame.step] = op_idx;
            stack.push_back({{frame.step - 1, acc_idx}, std::move(next)});
        }
    }
}

}  // namespace detail

// Belief revision by max-product propagation: clamps per the mode, collects
// traced messages toward the root, reads the maximal support off the root
// fusion and decodes the maximizing assignment by walking the recorded
// argmax witnesses outward. The score is the unnormalized maximum of the
// joint support restricted to the evidence.
inline Explanation revise(const BeliefNetwork& net, const RevisionMode& mode,
                          const EvidenceSet& evidence) {
    EvidenceSet clamps = evidence;
    if (mode.kind == RevisionMode::Kind::hypothesizing) {
        if (!net.variable(mode.variable).has_value(mode.value))
            throw ValidateError("unknown value '" + mode.value + "' for variable '" +
                                mode.variable + "'");
        clamps.add(mode.variable, {mode.value});
    }

    std::vector<MassFunction> family;
    for (const auto& v : net.variables()) family.push_back(net.valuation(v.name).to_potential());
    for (auto& bpa : evidence_bpas(net, clamps)) family.push_back(std::move(bpa));

    std::string root_variable;
    if (mode.kind == RevisionMode::Kind::conditioning) {
        root_variable = clamps.assignments.empty() ? net.variables().front().name
                                                   : clamps.assignments.begin()->first;
    } else {
        if (!net.has_variable(mode.variable))
            throw ValidateError("unknown variable '" + mode.variable + "'");
        root_variable = mode.variable;
    }

    JoinTree tree = build_join_tree(family, net.scope_of({root_variable}));

    // Collect toward the root with full tracing.
    std::vector<std::optional<std::size_t>> parent(tree.nodes.size());
    std::vector<std::size_t> preorder{tree.root};
    std::vector<char> seen(tree.nodes.size(), 0);
    seen[tree.root] = 1;
    for (std::size_t head = 0; head < preorder.size(); ++head) {
        std::size_t n = preorder[head];
        for (std::size_t w : tree.neighbors(n))
            if (!seen[w]) {
                seen[w] = 1;
                parent[w] = n;
                preorder.push_back(w);
            }
    }

    std::vector<detail::CollectRecord> records(tree.nodes.size());
    try {
        for (std::size_t i = preorder.size(); i-- > 0;) {
            std::size_t n = preorder[i];
            detail::CollectRecord& rec = records[n];
            for (const auto& input : tree.nodes[n].inputs) {
                rec.operands.push_back(input);
                rec.operand_child.push_back(std::nullopt);
            }
            for (std::size_t w : tree.neighbors(n)) {
                if (parent[n] && *parent[n] == w) continue;
                rec.operands.push_back(
                    extend_min(records[w].to_parent->result, tree.nodes[n].scope));
                rec.operand_child.push_back(w);
            }
            if (rec.operands.empty()) {
                rec.fused = MassFunction::vacuous(tree.nodes[n].scope);
            } else {
                rec.fused = rec.operands[0];
                for (std::size_t k = 1; k < rec.operands.size(); ++k) {
                    rec.steps.push_back(combine_max_traced(rec.fused, rec.operands[k]));
                    rec.fused = rec.steps.back().result;
                }
            }
            if (parent[n]) {
                Scope separator =
                    scope_intersection(tree.nodes[n].scope, tree.nodes[*parent[n]].scope);
                rec.to_parent = marginalize_max_traced(rec.fused, separator);
            }
        }
    } catch (const ConflictError&) {
        throw ConflictError("no explanation exists: evidence has zero plausibility");
    }

    // beta and the root's maximizing focals.
    const MassFunction& root_fused = records[tree.root].fused;
    double beta = 0;
    for (const auto& [set, value] : root_fused.focals()) beta = std::max(beta, value);
    std::vector<std::size_t> root_choices;
    for (std::size_t i = 0; i < root_fused.focals().size(); ++i)
        if (root_fused.focals()[i].second == beta) root_choices.push_back(i);
    if (root_choices.empty())
        throw ConflictError("no explanation exists: evidence has zero plausibility");

    // Decode: enumerate every consistent choice of per-node fused focals.
    Scope full = net.full_scope();
    std::vector<std::vector<std::uint32_t>> node_proj;  // full -> node scope
    for (const auto& node : tree.nodes) node_proj.push_back(projection_table(full, node.scope));

    std::map<Bitset, char> tie_sets;
    // A pending decode task: node plus the required focal of its fusion,
    // with the partially built per-node selection.
    struct Task {
        std::size_t node;
        std::size_t focal;
    };
    struct PathState {
        std::vector<Task> pending;
        std::map<std::size_t, Bitset> chosen;  // tree node -> fused focal
    };
    std::vector<PathState> paths;
    for (std::size_t choice : root_choices)
        paths.push_back({{{tree.root, choice}}, {}});
    while (!paths.empty()) {
        PathState state = std::move(paths.back());
        paths.pop_back();
        if (state.pending.empty()) {
            Bitset global = Bitset::ones(full.frame_size());
            for (const auto& [node, focal] : state.chosen) {
                Bitset cylinder(full.frame_size());
                for (std::size_t c = 0; c < full.frame_size(); ++c)
                    if (focal.test(node_proj[node][c])) cylinder.set(c);
                global = global & cylinder;
            }
            if (global.none())
                throw ValidateError("internal decode inconsistency: empty explanation set");
            tie_sets.emplace(global, 1);
            if (tie_sets.size() > detail::kTieSetCap)
                throw CapacityError("tie set of the revision exceeds capacity");
            continue;
        }
        Task task = state.pending.back();
        state.pending.pop_back();
        const detail::CollectRecord& rec = records[task.node];
        state.chosen.emplace(task.node, rec.fused.focals()[task.focal].first);
        if (rec.operands.empty()) {
            paths.push_back(std::move(state));
            continue;
        }
        std::vector<std::vector<std::size_t>> fold_choices;
        detail::unwind_fold(rec, task.focal, fold_choices);
        for (const auto& operand_choice : fold_choices) {
            // Per operand backed by a child message: the alternative child
            // tasks given by the tied witnesses of that message focal.
            std::vector<std::vector<Task>> alternatives;
            for (std::size_t op = 0; op < operand_choice.size(); ++op) {
                auto child = rec.operand_child[op];
                if (!child) continue;  // local input, nothing beneath it
                const detail::CollectRecord& child_rec = records[*child];
                const MaxMarginalized& msg = *child_rec.to_parent;
                // The chosen operand focal is the extension of a message
                // focal; project it back to look the witnesses up.
                Bitset operand_bits = rec.operands[op].focals()[operand_choice[op]].first;
                MassFunction projected = marginalize_max(
                    MassFunction::make(tree.nodes[task.node].scope, {{operand_bits, 1.0}}, false),
                    msg.result.scope());
                auto msg_idx = focal_index_of(msg.result, projected.focals()[0].first);
                if (!msg_idx)
                    throw ValidateError("internal decode inconsistency: unknown message focal");
                std::vector<Task> tasks;
                for (const Bitset& witness : msg.witnesses[*msg_idx])
                    tasks.push_back({*child, *focal_index_of(child_rec.fused, witness)});
                alternatives.push_back(std::move(tasks));
            }
            // Cartesian product over the tied witnesses of every child edge.
            std::vector<std::size_t> pick(alternatives.size(), 0);
            while (true) {
                PathState branch = state;
                for (std::size_t i = 0; i < alternatives.size(); ++i)
                    branch.pending.push_back(alternatives[i][pick[i]]);
                paths.push_back(std::move(branch));
                if (paths.size() > detail::kTieSetCap * 4)
                    throw CapacityError("tie set of the revision exceeds capacity");
                std::size_t i = 0;
                while (i < alternatives.size() && ++pick[i] == alternatives[i].size()) {
                    pick[i] = 0;
                    ++i;
                }
                if (i == alternatives.size()) break;
            }
        }
    }

    Explanation out;
    out.scope = full;
    out.score = beta;
    for (const auto& [set, flag] : tie_sets) out.ties.push_back(set);
    out.configs = out.ties.front();
    return out;
}

}  // namespace evidential
