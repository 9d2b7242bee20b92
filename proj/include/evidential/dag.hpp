#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evidential/errors.hpp"

namespace evidential {

// A directed acyclic graph over named nodes. Nodes and edges are kept sorted
// so every serialization and traversal is reproducible.
class Dag {
public:
    Dag() = default;

    static Dag make(std::vector<std::string> nodes,
                    std::vector<std::pair<std::string, std::string>> edges) {
        Dag d;
        std::sort(nodes.begin(), nodes.end());
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            if (nodes[i] == nodes[i + 1])
                throw ValidateError("duplicate dag node '" + nodes[i] + "'");
        d.nodes_ = std::move(nodes);
        std::sort(edges.begin(), edges.end());
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            if (edges[i] == edges[i + 1])
                throw ValidateError("duplicate dag edge " + edges[i].first + " -> " +
                                    edges[i].second);
        d.parents_.resize(d.nodes_.size());
        d.children_.resize(d.nodes_.size());
        for (const auto& [parent, child] : edges) {
            std::size_t p = d.index(parent);
            std::size_t c = d.index(child);
            if (p == c) throw ValidateError("self-loop on dag node '" + parent + "'");
            d.parents_[c].push_back(p);
            d.children_[p].push_back(c);
        }
        d.edges_ = std::move(edges);
        d.check_acyclic();
        return d;
    }

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }

    bool has_node(const std::string& name) const {
        return std::binary_search(nodes_.begin(), nodes_.end(), name);
    }

    std::size_t index(const std::string& name) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), name);
        if (it == nodes_.end() || *it != name)
            throw ValidateError("unknown dag node '" + name + "'");
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    std::vector<std::string> parents(const std::string& node) const {
        std::vector<std::string> out;
        for (std::size_t p : parents_[index(node)]) out.push_back(nodes_[p]);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::string> children(const std::string& node) const {
        std::vector<std::string> out;
        for (std::size_t c : children_[index(node)]) out.push_back(nodes_[c]);
        std::sort(out.begin(), out.end());
        return out;
    }

    // Kahn's algorithm; among ready nodes the lexicographically smallest name
    // goes first.
    std::vector<std::string> topological_order() const {
        std::vector<std::size_t> indegree(nodes_.size(), 0);
        for (std::size_t i = 0; i < nodes_.size(); ++i) indegree[i] = parents_[i].size();
        std::set<std::size_t> ready;  // node indices sort by name already
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (indegree[i] == 0) ready.insert(i);
        std::vector<std::string> order;
        while (!ready.empty()) {
            std::size_t n = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(nodes_[n]);
            for (std::size_t c : children_[n])
                if (--indegree[c] == 0) ready.insert(c);
        }
        return order;
    }

private:
    void check_acyclic() const {
        if (topological_order().size() != nodes_.size())
            throw ValidateError("dag contains a cycle");
    }

    std::vector<std::string> nodes_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;

    friend bool d_separated(const Dag&, const std::vector<std::string>&,
                            const std::vector<std::string>&, const std::vector<std::string>&);
};

// Decides whether L d-separates J from K: true iff no trail between J and K
// is active given L. A trail is active when every head-to-head node on it is
// in L or has a descendant in L and every other node avoids L. Decided by
// reachability over trail states rather than trail enumeration.
inline bool d_separated(const Dag& dag, const std::vector<std::string>& J,
                        const std::vector<std::string>& K, const std::vector<std::string>& L) {
    std::size_t n = dag.nodes_.size();
    std::vector<char> inJ(n, 0), inK(n, 0), inL(n, 0);
    auto mark = [&](const std::vector<std::string>& names, std::vector<char>& flag) {
        for (const auto& name : names) flag[dag.index(name)] = 1;
    };
    mark(J, inJ);
    mark(K, inK);
    mark(L, inL);
    for (std::size_t i = 0; i < n; ++i)
        if (inJ[i] + inK[i] + inL[i] > 1)
            throw ValidateError("d-separation requires pairwise disjoint node sets");

    // Nodes in L or with a descendant in L: ancestors-or-self of L.
    std::vector<char> anchorsL(n, 0);
    std::deque<std::size_t> work;
    for (std::size_t i = 0; i < n; ++i)
        if (inL[i]) {
            anchorsL[i] = 1;
            work.push_back(i);
        }
    while (!work.empty()) {
        std::size_t v = work.front();
        work.pop_front();
        for (std::size_t p : dag.parents_[v])
            if (!anchorsL[p]) {
                anchorsL[p] = 1;
                work.push_back(p);
            }
    }

    // State (node, arrived-from-parent?). Arriving from a child leaves the
    // node as a non-collider on any continuation; arriving from a parent and
    // leaving toward a parent makes it a head-to-head node.
    enum { fromChild = 0, fromParent = 1 };
    std::vector<std::array<char, 2>> seen(n, {0, 0});
    std::deque<std::pair<std::size_t, int>> queue;
    for (std::size_t i = 0; i < n; ++i)
        if (inJ[i]) {
            seen[i][fromChild] = 1;
            queue.push_back({i, fromChild});
        }
    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (inK[v]) return false;  // active trail found
        auto push = [&](std::size_t w, int d) {
            if (!seen[w][d]) {
                seen[w][d] = 1;
                queue.push_back({w, d});
            }
        };
        bool blocked = inL[v];
        if (dir == fromChild) {
            if (!blocked) {
                for (std::size_t w : dag.children_[v]) push(w, fromParent);
                for (std::size_t w : dag.parents_[v]) push(w, fromChild);
            }
        } else {
            if (!blocked)
                for (std::size_t w : dag.children_[v]) push(w, fromParent);
            if (anchorsL[v])
                for (std::size_t w : dag.parents_[v]) push(w, fromChild);
        }
    }
    return true;
}

}  // namespace evidential
