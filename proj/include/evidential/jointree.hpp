#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evidential/dst.hpp"
#include "evidential/mass.hpp"
#include "evidential/maxprod.hpp"
#include "evidential/network.hpp"

namespace evidential {

enum class CombinationMode { sumProduct, maxProduct };

inline MassFunction mode_combine(CombinationMode mode, const MassFunction& a,
                                 const MassFunction& b) {
    return mode == CombinationMode::sumProduct ? combine_dempster(a, b) : combine_max(a, b);
}

inline MassFunction mode_marginalize(CombinationMode mode, const MassFunction& m,
                                     const Scope& target) {
    return mode == CombinationMode::sumProduct ? marginalize(m, target)
                                               : marginalize_max(m, target);
}

// Variables common to both scopes.
inline Scope scope_intersection(const Scope& a, const Scope& b) {
    std::vector<Variable> vars;
    for (const auto& v : a.variables())
        if (b.index_of(v.name)) vars.push_back(v);
    return Scope::of(std::move(vars));
}

// One node of a join tree: a scope plus the bodies of evidence attached to
// it. The fused local information is formed per combination mode at
// propagation time, so one tree serves both sum- and max-product passes.
// A node without inputs carries vacuous local information.
struct Hyperedge {
    Scope scope;
    std::vector<MassFunction> inputs;  // each over exactly `scope`

    MassFunction local(CombinationMode mode) const {
        if (inputs.empty()) return MassFunction::vacuous(scope);
        MassFunction fused = inputs[0];
        for (std::size_t i = 1; i < inputs.size(); ++i)
            fused = mode_combine(mode, fused, inputs[i]);
        return fused;
    }
};

// A tree of hyperedges satisfying the running-intersection property, with
// one mailbox per directed edge.
class JoinTree {
public:
    std::vector<Hyperedge> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // unordered, first < second
    std::size_t root = 0;
    std::vector<std::string> elimination_order;

    const std::vector<std::size_t>& neighbors(std::size_t n) const { return adjacency_[n]; }

    void finish_structure() {
        adjacency_.assign(nodes.size(), {});
        std::sort(edges.begin(), edges.end());
        for (auto& [a, b] : edges) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
        for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    }

    bool propagated() const { return mode_.has_value(); }
    CombinationMode propagated_mode() const { return *mode_; }

    const MassFunction& message(std::size_t from, std::size_t to) const {
        auto it = mailboxes.find({from, to});
        if (it == mailboxes.end())
            throw ValidateError("mailboxes not yet filled: propagate the tree first");
        return it->second;
    }

    // Children-before-parent order of directed edges toward the root,
    // followed by the reverse sweep away from it.
    std::vector<std::pair<std::size_t, std::size_t>> schedule() const {
        std::vector<std::pair<std::size_t, std::size_t>> collect;
        std::vector<std::optional<std::size_t>> parent(nodes.size());
        std::vector<std::size_t> order;  // preorder from root
        std::vector<char> seen(nodes.size(), 0);
        order.push_back(root);
        seen[root] = 1;
        for (std::size_t head = 0; head < order.size(); ++head) {
            std::size_t n = order[head];
            for (std::size_t w : adjacency_[n])
                if (!seen[w]) {
                    seen[w] = 1;
                    parent[w] = n;
                    order.push_back(w);
                }
        }
        for (std::size_t i = order.size(); i-- > 0;)
            if (parent[order[i]]) collect.push_back({order[i], *parent[order[i]]});
        std::vector<std::pair<std::size_t, std::size_t>> full = collect;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (parent[order[i]]) full.push_back({*parent[order[i]], order[i]});
        return full;
    }

    friend void propagate(JoinTree&, CombinationMode);
    friend MassFunction compute_message(const JoinTree&, std::size_t, std::size_t,
                                        CombinationMode,
                                        const std::map<std::pair<std::size_t, std::size_t>,
                                                       MassFunction>&);

    void invalidate() {
        mailboxes.clear();
        mode_.reset();
    }

    std::map<std::pair<std::size_t, std::size_t>, MassFunction> mailboxes;

private:
    std::vector<std::vector<std::size_t>> adjacency_;
    std::optional<CombinationMode> mode_;
};

// The message a node sends to one neighbor: its local information combined
// with every incoming message except the neighbor's own, projected onto the
// shared variables. Pure in the given mailbox state.
inline MassFunction compute_message(
    const JoinTree& tree, std::size_t from, std::size_t to, CombinationMode mode,
    const std::map<std::pair<std::size_t, std::size_t>, MassFunction>& mailboxes) {
    MassFunction fused = tree.nodes[from].local(mode);
    for (std::size_t nbr : tree.neighbors(from)) {
        if (nbr == to) continue;
        auto it = mailboxes.find({nbr, from});
        if (it == mailboxes.end())
            throw ValidateError("message inputs not yet available");
        fused = mode_combine(mode, fused, extend_min(it->second, tree.nodes[from].scope));
    }
    return mode_marginalize(mode, fused,
                            scope_intersection(tree.nodes[from].scope, tree.nodes[to].scope));
}

// Two-phase schedule: collect toward the root, then distribute outward,
// filling all 2(n-1) mailboxes. Messages do not depend on the order beyond
// availability of their inputs.
inline void propagate(JoinTree& tree, CombinationMode mode) {
    tree.invalidate();
    for (const auto& [from, to] : tree.schedule())
        tree.mailboxes[{from, to}] = compute_message(tree, from, to, mode, tree.mailboxes);
    tree.mode_ = mode;
}

// Eq.-(11)-style fusion: the node's local information combined with every
// incoming message. In sum-product mode this equals the marginal of the
// global combination on the node's scope.
inline MassFunction node_marginal(const JoinTree& tree, std::size_t n) {
    if (!tree.propagated())
        throw ValidateError("mailboxes not yet filled: propagate the tree first");
    CombinationMode mode = tree.propagated_mode();
    MassFunction fused = tree.nodes[n].local(mode);
    for (std::size_t nbr : tree.neighbors(n))
        fused = mode_combine(mode, fused, extend_min(tree.message(nbr, n), tree.nodes[n].scope));
    return fused;
}

// Deletes one variable from a family of bodies of evidence: the members that
// carry it are combined and the union scope is projected to drop it.
inline std::vector<MassFunction> eliminate_variable(const std::vector<MassFunction>& family,
                                                    const std::string& variable) {
    std::vector<MassFunction> untouched;
    std::vector<const MassFunction*> involved;
    for (const auto& m : family) {
        if (m.scope().index_of(variable))
            involved.push_back(&m);
        else
            untouched.push_back(m);
    }
    if (involved.empty())
        throw ValidateError("variable '" + variable + "' occurs in no body of evidence");
    Scope joined;
    for (const auto* m : involved) joined = scope_union(joined, m->scope());
    MassFunction fused = extend_min(*involved[0], joined);
    for (std::size_t i = 1; i < involved.size(); ++i)
        fused = combine_dempster(fused, extend_min(*involved[i], joined));
    std::vector<Variable> rest;
    for (const auto& v : joined.variables())
        if (v.name != variable) rest.push_back(v);
    untouched.push_back(marginalize(fused, Scope::of(std::move(rest))));
    return untouched;
}

// Embeds the family in a Markov tree: min-fill elimination over the
// variable-interaction graph, elimination cliques linked through their
// separators, every input attached to the first clique covering its scope.
// The tree is rooted at a node containing `root_scope`.
inline JoinTree build_join_tree(const std::vector<MassFunction>& family, const Scope& root_scope) {
    if (family.empty()) throw ValidateError("cannot build a join tree from an empty family");

    // Union of all scopes; also validates domain agreement.
    Scope all = root_scope;
    for (const auto& m : family) all = scope_union(all, m.scope());
    std::size_t n = all.var_count();
    if (n == 0) {
        JoinTree tree;
        tree.nodes.push_back(Hyperedge{Scope(), {}});
        for (const auto& m : family) tree.nodes[0].inputs.push_back(m);
        tree.root = 0;
        tree.finish_structure();
        return tree;
    }

    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    auto clique_scope = [&](const Scope& scope) {
        std::vector<std::size_t> idx;
        for (const auto& v : scope.variables()) idx.push_back(*all.index_of(v.name));
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i + 1; j < idx.size(); ++j)
                adj[idx[i]][idx[j]] = adj[idx[j]][idx[i]] = 1;
    };
    for (const auto& m : family) clique_scope(m.scope());
    clique_scope(root_scope);

    std::vector<char> removed(n, 0);
    std::vector<std::vector<std::size_t>> cliques;
    std::vector<std::string> elimination;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t best = n;
        std::size_t best_fill = ~std::size_t{0};
        for (std::size_t v = 0; v < n; ++v) {
            if (removed[v]) continue;
            std::vector<std::size_t> nbrs;
            for (std::size_t w = 0; w < n; ++w)
                if (!removed[w] && adj[v][w]) nbrs.push_back(w);
            std::size_t fill = 0;
            for (std::size_t i = 0; i < nbrs.size(); ++i)
                for (std::size_t j = i + 1; j < nbrs.size(); ++j)
                    if (!adj[nbrs[i]][nbrs[j]]) ++fill;
            if (fill < best_fill) {  // ties: smallest variable name, i.e. index
                best_fill = fill;
                best = v;
            }
        }
        std::vector<std::size_t> clique{best};
        for (std::size_t w = 0; w < n; ++w)
            if (!removed[w] && w != best && adj[best][w]) clique.push_back(w);
        std::sort(clique.begin(), clique.end());
        for (std::size_t i = 0; i < clique.size(); ++i)
            for (std::size_t j = i + 1; j < clique.size(); ++j)
                adj[clique[i]][clique[j]] = adj[clique[j]][clique[i]] = 1;
        removed[best] = 1;
        cliques.push_back(std::move(clique));
        elimination.push_back(all.variable(best).name);
    }

    JoinTree tree;
    tree.elimination_order = std::move(elimination);
    std::vector<std::set<std::size_t>> clique_sets;
    for (const auto& c : cliques) {
        std::vector<Variable> vars;
        for (std::size_t v : c) vars.push_back(all.variable(v));
        tree.nodes.push_back(Hyperedge{Scope::of(std::move(vars)), {}});
        clique_sets.emplace_back(c.begin(), c.end());
    }

    // Link each clique through its separator to the first later clique
    // containing it; chain any remaining roots to keep one spanning tree.
    std::vector<char> has_parent(cliques.size(), 0);
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        std::set<std::size_t> separator = clique_sets[i];
        separator.erase(*all.index_of(tree.elimination_order[i]));
        if (separator.empty()) continue;
        for (std::size_t j = i + 1; j < cliques.size(); ++j) {
            if (std::includes(clique_sets[j].begin(), clique_sets[j].end(), separator.begin(),
                              separator.end())) {
                tree.edges.push_back({i, j});
                has_parent[i] = 1;
                break;
            }
        }
    }
    std::optional<std::size_t> previous_root;
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        if (has_parent[i]) continue;
        if (previous_root) tree.edges.push_back({*previous_root, i});
        previous_root = i;
    }

    // Absorb any clique contained in one of its neighbors; the neighbor
    // inherits its edges. Keeps the tree thin and running intersection
    // intact.
    {
        std::vector<std::set<std::size_t>> nbrs(tree.nodes.size());
        for (const auto& [a, b] : tree.edges) {
            nbrs[a].insert(b);
            nbrs[b].insert(a);
        }
        std::vector<char> alive(tree.nodes.size(), 1);
        bool merged = true;
        while (merged) {
            merged = false;
            for (std::size_t i = 0; i < tree.nodes.size() && !merged; ++i) {
                if (!alive[i]) continue;
                for (std::size_t j : nbrs[i]) {
                    if (!tree.nodes[j].scope.contains(tree.nodes[i].scope)) continue;
                    for (std::size_t k : nbrs[i]) {
                        if (k == j) continue;
                        nbrs[k].erase(i);
                        nbrs[k].insert(j);
                        nbrs[j].insert(k);
                    }
                    nbrs[j].erase(i);
                    nbrs[i].clear();
                    alive[i] = 0;
                    merged = true;
                    break;
                }
            }
        }
        std::vector<std::size_t> remap(tree.nodes.size());
        std::vector<Hyperedge> kept;
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            if (!alive[i]) continue;
            remap[i] = kept.size();
            kept.push_back(std::move(tree.nodes[i]));
        }
        tree.edges.clear();
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (!alive[i]) continue;
            for (std::size_t j : nbrs[i])
                if (i < j) tree.edges.push_back({remap[i], remap[j]});
        }
        tree.nodes = std::move(kept);
    }

    for (const auto& m : family) {
        bool placed = false;
        for (std::size_t i = 0; i < tree.nodes.size() && !placed; ++i) {
            if (tree.nodes[i].scope.contains(m.scope())) {
                tree.nodes[i].inputs.push_back(extend_min(m, tree.nodes[i].scope));
                placed = true;
            }
        }
        if (!placed) throw ValidateError("no clique covers an input scope");
    }

    tree.root = 0;
    bool rooted = false;
    for (std::size_t i = 0; i < tree.nodes.size() && !rooted; ++i) {
        if (tree.nodes[i].scope.contains(root_scope)) {
            tree.root = i;
            rooted = true;
        }
    }
    if (!rooted) throw ValidateError("no clique covers the requested root scope");
    tree.finish_structure();
    return tree;
}

// Deterministic text form of the tree structure, for diagnostics and golden
// tests.
inline std::string dump(const JoinTree& tree) {
    std::string out = "elimination:";
    for (const auto& v : tree.elimination_order) out += " " + v;
    out += "\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        out += "node " + std::to_string(i) + ": scope=" + tree.nodes[i].scope.describe() +
               " inputs=" + std::to_string(tree.nodes[i].inputs.size());
        if (i == tree.root) out += " (root)";
        out += "\n";
    }
    for (const auto& [a, b] : tree.edges) {
        out += "edge " + std::to_string(a) + "-" + std::to_string(b) + " separator=" +
               scope_intersection(tree.nodes[a].scope, tree.nodes[b].scope).describe() + "\n";
    }
    return out;
}

// The join tree of a network's valuations plus categorical evidence bpas,
// rooted at a node containing `root_scope`. Not yet propagated.
inline JoinTree network_join_tree(const BeliefNetwork& net, const EvidenceSet& evidence,
                                  const Scope& root_scope) {
    std::vector<MassFunction> family;
    for (const auto& v : net.variables()) family.push_back(net.valuation(v.name).to_bpa());
    for (auto& bpa : evidence_bpas(net, evidence)) family.push_back(std::move(bpa));
    return build_join_tree(family, root_scope);
}

// Eq.-(9) query: the marginal of variable X under the given findings,
// computed by sum-product propagation over a tree built from the node
// valuations plus categorical evidence bpas.
inline MassFunction query_marginal(const BeliefNetwork& net, const std::string& X,
                                   const EvidenceSet& evidence) {
    if (!net.has_variable(X)) throw ValidateError("unknown variable '" + X + "'");
    Scope root_scope = net.scope_of({X});
    JoinTree tree = network_join_tree(net, evidence, root_scope);
    try {
        propagate(tree, CombinationMode::sumProduct);
    } catch (const ConflictError& e) {
        if (evidence.empty()) throw;
        throw ConflictError("evidence is totally conflicting with the network (" +
                            std::string(e.what()) + ")");
    }
    return marginalize(node_marginal(tree, tree.root), root_scope);
}

}  // namespace evidential
