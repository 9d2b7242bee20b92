#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evidential/dag.hpp"
#include "evidential/dst.hpp"
#include "evidential/mass.hpp"

namespace evidential {

// Per-node knowledge: either a complete conditional probability table or a
// Dempster-Shafer focal list, both over the family scope {node} u parents.
class NodeValuation {
public:
    enum class Kind { probabilistic, ds };

    static NodeValuation probabilistic(Variable node, std::vector<Variable> parents,
                                       std::vector<double> table) {
        NodeValuation v;
        v.kind_ = Kind::probabilistic;
        v.init_scopes(std::move(node), std::move(parents));
        if (table.size() != v.family_.frame_size())
            throw ValidateError("conditional table for node '" + v.node_ + "' has " +
                                std::to_string(table.size()) + " entries, expected " +
                                std::to_string(v.family_.frame_size()));
        v.prob_ = std::move(table);
        v.validate_rows();
        return v;
    }

    static NodeValuation dempster_shafer(Variable node, std::vector<Variable> parents,
                                         MassFunction focals) {
        NodeValuation v;
        v.kind_ = Kind::ds;
        v.init_scopes(std::move(node), std::move(parents));
        if (!(focals.scope() == v.family_))
            throw ValidateError("ds valuation for node '" + v.node_ + "' must be scoped over " +
                                v.family_.describe());
        validate_mass(focals);
        v.ds_ = std::move(focals);
        return v;
    }

    Kind kind() const { return kind_; }
    const std::string& node() const { return node_; }
    const std::vector<std::string>& parents() const { return parent_names_; }
    const Scope& family() const { return family_; }
    const Scope& parent_scope() const { return parent_scope_; }
    const std::vector<double>& prob_table() const { return prob_; }
    const MassFunction& ds_focals() const { return ds_; }

    std::size_t parent_config_count() const { return parent_scope_.frame_size(); }

    // Family configuration index for (parent configuration, node value).
    std::size_t family_index(std::size_t parent_cfg, std::size_t value_idx) const {
        std::size_t idx = value_idx * family_.stride(node_pos_);
        for (std::size_t i = 0; i < parent_scope_.var_count(); ++i)
            idx += parent_scope_.digit(parent_cfg, i) * family_.stride(parent_pos_[i]);
        return idx;
    }

    double prob_of(std::size_t parent_cfg, std::size_t value_idx) const {
        return prob_[family_index(parent_cfg, value_idx)];
    }

    // True when every table entry is 0 or 1: the node is a function of its
    // parents.
    bool deterministic() const {
        if (kind_ != Kind::probabilistic) return false;
        for (double p : prob_)
            if (p > kPruneTol && p < 1.0 - kPruneTol) return false;
        return true;
    }

    // Proper unit-mass bpa over the family scope. A conditional table becomes
    // singleton focals carrying P(x|pa) / #parent-configurations; the scaling
    // is exact and reversible. A deterministic table instead becomes the
    // logical belief function on the graph of the function, which keeps
    // ignorance vacuous when combined with set-valued evidence.
    MassFunction to_bpa() const {
        if (kind_ == Kind::ds) return ds_;
        if (deterministic()) return graph_categorical();
        double weight = 1.0 / static_cast<double>(parent_config_count());
        std::vector<MassFunction::Focal> focals;
        for (std::size_t c = 0; c < prob_.size(); ++c)
            if (prob_[c] > kPruneTol)
                focals.push_back({Bitset::single(family_.frame_size(), c), prob_[c] * weight});
        if (focals.empty())
            throw ValidateError("conditional table for node '" + node_ + "' is all zero");
        return MassFunction::make(family_, std::move(focals), false);
    }

    // Raw weights for max-product propagation: conditional probabilities as
    // given, no unit-mass scaling. Scores stay comparable to products of
    // table entries.
    MassFunction to_potential() const {
        if (kind_ == Kind::ds) return ds_;
        if (deterministic()) return graph_categorical();
        std::vector<MassFunction::Focal> focals;
        for (std::size_t c = 0; c < prob_.size(); ++c)
            if (prob_[c] > kPruneTol)
                focals.push_back({Bitset::single(family_.frame_size(), c), prob_[c]});
        if (focals.empty())
            throw ValidateError("conditional table for node '" + node_ + "' is all zero");
        return MassFunction::make(family_, std::move(focals), false);
    }

    bool operator==(const NodeValuation& o) const {
        if (kind_ != o.kind_ || node_ != o.node_ || parent_names_ != o.parent_names_) return false;
        if (kind_ == Kind::probabilistic) return prob_ == o.prob_;
        return ds_.focals() == o.ds_.focals();
    }

private:
    MassFunction graph_categorical() const {
        Bitset graph(family_.frame_size());
        for (std::size_t c = 0; c < prob_.size(); ++c)
            if (prob_[c] > 0.5) graph.set(c);
        if (graph.none())
            throw ValidateError("conditional table for node '" + node_ + "' is all zero");
        return MassFunction::categorical(family_, graph);
    }

    void init_scopes(Variable node, std::vector<Variable> parents) {
        node_ = node.name;
        parent_names_.clear();
        for (const auto& p : parents) parent_names_.push_back(p.name);
        std::sort(parent_names_.begin(), parent_names_.end());
        parent_scope_ = Scope::of(parents);
        parents.push_back(std::move(node));
        family_ = Scope::of(std::move(parents));
        node_pos_ = *family_.index_of(node_);
        parent_pos_.clear();
        for (std::size_t i = 0; i < parent_scope_.var_count(); ++i)
            parent_pos_.push_back(*family_.index_of(parent_scope_.variable(i).name));
    }

    void validate_rows() const {
        const Variable& node_var = family_.variable(node_pos_);
        for (std::size_t pc = 0; pc < parent_config_count(); ++pc) {
            double row = 0;
            for (std::size_t v = 0; v < node_var.domain.size(); ++v) {
                double p = prob_[family_index(pc, v)];
                if (p < 0)
                    throw ValidateError("negative conditional probability for node '" + node_ +
                                        "'");
                row += p;
            }
            if (std::abs(row - 1.0) > kEqualityTol)
                throw ValidateError("conditional distribution for node '" + node_ +
                                    "' given parent configuration " +
                                    parent_scope_.config_label(pc) + " sums to " +
                                    format_real(row));
        }
    }

    Kind kind_ = Kind::probabilistic;
    std::string node_;
    std::vector<std::string> parent_names_;
    Scope family_;
    Scope parent_scope_;
    std::size_t node_pos_ = 0;
    std::vector<std::size_t> parent_pos_;
    std::vector<double> prob_;
    MassFunction ds_;
};

// Current findings: each variable restricted to a nonempty subset of its
// domain (a single value in the common case).
struct EvidenceSet {
    std::map<std::string, std::vector<std::string>> assignments;

    bool empty() const { return assignments.empty(); }

    void add(const std::string& var, std::vector<std::string> values) {
        if (values.empty()) throw ValidateError("evidence for '" + var + "' has no values");
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (!assignments.emplace(var, std::move(values)).second)
            throw ValidateError("duplicate evidence for variable '" + var + "'");
    }
};

// A dag plus one valuation per node; the combination of the valuations is
// the underlying joint distribution.
class BeliefNetwork {
public:
    static BeliefNetwork build(std::vector<Variable> variables, Dag dag,
                               std::vector<NodeValuation> valuations) {
        BeliefNetwork net;
        std::sort(variables.begin(), variables.end(),
                  [](const Variable& a, const Variable& b) { return a.name < b.name; });
        for (std::size_t i = 0; i + 1 < variables.size(); ++i)
            if (variables[i].name == variables[i + 1].name)
                throw ValidateError("duplicate variable '" + variables[i].name + "'");
        for (const auto& v : variables) make_variable(v.name, v.domain);  // revalidate labels
        net.variables_ = std::move(variables);

        std::vector<std::string> names;
        for (const auto& v : net.variables_) names.push_back(v.name);
        if (dag.nodes() != names)
            throw ValidateError("dag nodes do not match the declared variables");
        net.dag_ = std::move(dag);

        for (auto& val : valuations) {
            const std::string& node = val.node();
            if (!net.dag_.has_node(node))
                throw ValidateError("valuation for unknown node '" + node + "'");
            if (val.parents() != net.dag_.parents(node))
                throw ValidateError("valuation parents for node '" + node +
                                    "' do not match the dag");
            check_scope_matches(net, val.family());
            if (!net.valuations_.emplace(node, std::move(val)).second)
                throw ValidateError("node '" + node + "' has more than one valuation");
        }
        for (const auto& name : names)
            if (!net.valuations_.count(name))
                throw ValidateError("node '" + name + "' has no valuation");
        return net;
    }

    const std::vector<Variable>& variables() const { return variables_; }
    const Dag& dag() const { return dag_; }

    const Variable& variable(const std::string& name) const {
        for (const auto& v : variables_)
            if (v.name == name) return v;
        throw ValidateError("unknown variable '" + name + "'");
    }

    bool has_variable(const std::string& name) const {
        for (const auto& v : variables_)
            if (v.name == name) return true;
        return false;
    }

    const NodeValuation& valuation(const std::string& node) const {
        auto it = valuations_.find(node);
        if (it == valuations_.end()) throw ValidateError("unknown node '" + node + "'");
        return it->second;
    }

    // Probabilistic iff every valuation is a conditional table.
    bool probabilistic() const {
        for (const auto& [name, val] : valuations_)
            if (val.kind() != NodeValuation::Kind::probabilistic) return false;
        return true;
    }

    Scope full_scope() const { return Scope::of(variables_); }

    Scope scope_of(const std::vector<std::string>& names) const {
        std::vector<Variable> vars;
        for (const auto& n : names) vars.push_back(variable(n));
        return Scope::of(std::move(vars));
    }

private:
    static void check_scope_matches(const BeliefNetwork& net, const Scope& scope) {
        for (const auto& v : scope.variables()) {
            const Variable& declared = net.variable(v.name);
            if (declared.domain != v.domain)
                throw ValidateError("valuation domain for variable '" + v.name +
                                    "' does not match its declaration");
        }
    }

    std::vector<Variable> variables_;
    Dag dag_;
    std::map<std::string, NodeValuation> valuations_;
};

// Categorical bpas representing the findings of an evidence set.
inline std::vector<MassFunction> evidence_bpas(const BeliefNetwork& net, const EvidenceSet& e) {
    std::vector<MassFunction> out;
    for (const auto& [name, values] : e.assignments) {
        const Variable& var = net.variable(name);
        Scope scope = Scope::of({var});
        Bitset set(scope.frame_size());
        for (const auto& value : values) set.set(var.value_index(value));
        out.push_back(MassFunction::categorical(scope, set));
    }
    return out;
}

// The underlying joint distribution of the network. Probabilistic networks
// take the configuration-wise product of their table entries; anything else
// combines the minimally extended node bpas.
inline MassFunction joint_distribution(const BeliefNetwork& net) {
    Scope full = net.full_scope();
    if (net.probabilistic()) {
        std::vector<const NodeValuation*> vals;
        std::vector<std::vector<std::uint32_t>> proj;
        for (const auto& v : net.variables()) {
            vals.push_back(&net.valuation(v.name));
            proj.push_back(projection_table(full, vals.back()->family()));
        }
        std::vector<MassFunction::Focal> focals;
        for (std::size_t c = 0; c < full.frame_size(); ++c) {
            double p = 1.0;
            for (std::size_t i = 0; i < vals.size(); ++i) p *= vals[i]->prob_table()[proj[i][c]];
            if (p > 0) focals.push_back({Bitset::single(full.frame_size(), c), p});
        }
        if (focals.empty())
            throw ConflictError("network assigns zero probability to every configuration");
        return MassFunction::make(full, std::move(focals), false);
    }
    std::optional<MassFunction> joint;
    for (const auto& v : net.variables()) {
        MassFunction extended = extend_min(net.valuation(v.name).to_bpa(), full);
        joint = joint ? combine_dempster(*joint, extended) : extended;
    }
    return *joint;
}

// Pseudo-conditioning: BEL decombined by its own marginal on h, the
// node-valuation operator of belief networks. For probability functions it
// is ordinary conditioning (up to the unit-mass scaling of the result).
inline MassFunction pseudo_condition(const MassFunction& bel, const Scope& h) {
    if (!bel.scope().contains(h))
        throw ValidateError("pseudo-conditioning scope " + h.describe() +
                            " is not contained in " + bel.scope().describe());
    return decombine(bel, extend_min(marginalize(bel, h), bel.scope()));
}

struct FactorizeResult {
    std::vector<NodeValuation> valuations;
    std::vector<std::string> warnings;
};

inline std::vector<double> uniform_table(const Scope& family, const Variable& node) {
    return std::vector<double>(family.frame_size(), 1.0 / static_cast<double>(node.domain.size()));
}

namespace detail {

// Checks Q_b = scalar * Q_a (positive scalar) on the union of both supports.
inline bool commonality_proportional(const MassFunction& a, const MassFunction& b, double tol) {
    std::vector<MassFunction::Focal> all = a.focals();
    all.insert(all.end(), b.focals().begin(), b.focals().end());
    auto family = downset(all, a.scope().frame_size(), kSparseFamilyCap);
    if (!family) throw CapacityError("commonality comparison exceeds family capacity");
    const Bitset* ref = nullptr;
    double best = 0;
    for (const Bitset& set : *family) {
        if (set.none()) continue;
        double qa = std::abs(commonality(a, set));
        if (qa > best) {
            best = qa;
            ref = &set;
        }
    }
    if (!ref) return b.focals().empty();
    double ratio = commonality(b, *ref) / commonality(a, *ref);
    if (ratio <= 0) return false;
    for (const Bitset& set : *family) {
        if (set.none()) continue;
        double qa = commonality(a, set);
        double qb = commonality(b, set);
        if (std::abs(qb - ratio * qa) > tol * std::max(1.0, std::abs(ratio))) return false;
    }
    return true;
}

}  // namespace detail

// Splits a joint distribution into per-node valuations along the dag:
// valuation(i) = pseudo_condition(joint projected to the family of i, the
// parents of i). When the dag is not an I-map of the joint the recombination
// differs from the input; that is reported as a warning, not an error.
inline FactorizeResult factorize_joint(const MassFunction& joint, const Dag& dag) {
    const Scope& full = joint.scope();
    {
        std::vector<std::string> names;
        for (const auto& v : full.variables()) names.push_back(v.name);
        if (names != dag.nodes())
            throw ValidateError("joint scope does not match the dag nodes");
    }
    FactorizeResult result;
    bool bayesian = joint.bayesian();
    for (const auto& node : dag.nodes()) {
        const Variable& node_var = full.variable(full.index_of(node).value());
        std::vector<Variable> parent_vars;
        for (const auto& p : dag.parents(node))
            parent_vars.push_back(full.variable(full.index_of(p).value()));
        Scope parent_scope = Scope::of(parent_vars);
        std::vector<Variable> family_vars = parent_vars;
        family_vars.push_back(node_var);
        Scope family = Scope::of(family_vars);

        MassFunction conditional = pseudo_condition(marginalize(joint, family), parent_scope);
        if (bayesian && conditional.bayesian()) {
            NodeValuation shape = NodeValuation::probabilistic(
                node_var, parent_vars, uniform_table(family, node_var));
            std::vector<double> table(family.frame_size(), 0.0);
            std::size_t values = node_var.domain.size();
            for (std::size_t pc = 0; pc < shape.parent_config_count(); ++pc) {
                double row = 0;
                for (std::size_t v = 0; v < values; ++v)
                    row += conditional.mass_of(
                        Bitset::single(family.frame_size(), shape.family_index(pc, v)));
                if (row <= kPruneTol) {
                    result.warnings.push_back("node '" + node +
                                              "': parent configuration " +
                                              parent_scope.config_label(pc) +
                                              " has zero mass, using the uniform distribution");
                    for (std::size_t v = 0; v < values; ++v)
                        table[shape.family_index(pc, v)] = 1.0 / static_cast<double>(values);
                } else {
                    for (std::size_t v = 0; v < values; ++v)
                        table[shape.family_index(pc, v)] =
                            conditional.mass_of(Bitset::single(family.frame_size(),
                                                               shape.family_index(pc, v))) /
                            row;
                }
            }
            result.valuations.push_back(
                NodeValuation::probabilistic(node_var, parent_vars, std::move(table)));
        } else {
            result.valuations.push_back(
                NodeValuation::dempster_shafer(node_var, parent_vars, conditional));
        }
    }

    // I-map check: recombining the valuations must reproduce the joint's
    // commonalities up to a positive scalar.
    std::optional<MassFunction> recombined;
    for (const auto& val : result.valuations) {
        MassFunction extended = extend_min(val.to_bpa(), full);
        recombined = recombined ? combine_dempster(*recombined, extended) : extended;
    }
    if (!detail::commonality_proportional(joint, *recombined, kEqualityTol))
        result.warnings.push_back(
            "dag is not an I-map of the joint: recombined valuations differ from it");
    return result;
}

}  // namespace evidential
