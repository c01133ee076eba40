#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pel/network.hpp"
#include "pel/types.hpp"

namespace pel {

/// Largest number of parent instantiations a single decision may have before
/// solve_id refuses.
inline constexpr std::size_t kMaxDecisionRows = std::size_t(1) << 16;

/// Single-decision-maker influence diagram: chance variables with tabular
/// CPDs, totally ordered decisions whose parents are the information
/// available when deciding, and additive real-valued utility nodes.
class InfluenceDiagram {
public:
    struct Node {
        std::string name;
        std::vector<std::string> domain;
        bool is_decision = false;
        std::vector<int> parents;  // CPD parents (chance) or informational parents (decision)
        std::vector<std::vector<double>> cpd;  // chance only
        bool has_cpd = false;
    };
    struct Utility {
        std::string name;
        std::vector<int> parents;
        std::vector<double> table;  // mixed-radix over parents, first most significant
    };

    int add_chance(const std::string& name, const std::vector<std::string>& domain);
    /// Decisions are ordered by insertion: the first add_decision is D1.
    int add_decision(const std::string& name, const std::vector<std::string>& domain,
                     const std::vector<std::string>& parents);
    void set_cpd(const std::string& name, const std::vector<std::string>& parents,
                 const std::vector<std::vector<double>>& table);
    void add_utility(const std::string& name, const std::vector<std::string>& parents,
                     const std::vector<double>& table);
    /// Replaces an existing utility's parents and table.
    void set_utility(const std::string& name, const std::vector<std::string>& parents,
                     const std::vector<double>& table);

    /// Adds a discrete root chance variable with the given prior, appends it
    /// to the parent list of each affected utility (their tables must then be
    /// re-supplied via set_utility) and to every decision's parents.
    int add_preference_node(const std::string& name, const std::vector<std::string>& domain,
                            const std::vector<double>& prior,
                            const std::vector<std::string>& affected_utilities);

    /// Structure and CPD diagnostics. Missing no-forgetting arcs are
    /// warnings (they are completed mechanically, not rejected); everything
    /// else is an error.
    std::vector<Diagnostic> validate() const;

    /// Copy with the implicit no-forgetting arcs added: for i < j, Pa(Dj)
    /// gains Di and Pa(Di) in declaration order. `added`, when given,
    /// receives one "X -> D" entry per arc.
    InfluenceDiagram completed_no_forgetting(std::vector<std::string>* added = nullptr) const;

    int find(const std::string& name) const;  // -1 when absent
    int require(const std::string& name) const;
    const Node& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<int>& decision_order() const { return decisions_; }
    const std::vector<Utility>& utilities() const { return utilities_; }

    std::size_t parent_rows(const std::vector<int>& parents) const;

private:
    void check_new_name(const std::string& name) const;
    std::vector<int> resolve(const std::vector<std::string>& names) const;

    std::vector<Node> nodes_;
    std::vector<int> decisions_;
    std::vector<Utility> utilities_;
};

/// Mapping from each instantiation of a decision's (completed) parents to the
/// chosen action index. Rows are mixed-radix over the parents, first most
/// significant.
struct DecisionRule {
    std::string decision;
    std::vector<std::string> parents;
    std::vector<int> actions;
};

struct Policy {
    std::vector<DecisionRule> rules;  // one per decision, in decision order
    double meu = 0.0;
};

/// Backward induction via factor-based expected-utility maximization.
/// Decisions are solved in reverse order; ties and zero-probability parent
/// instantiations take the earliest action label.
Policy solve_id(const InfluenceDiagram& id);

/// Expected total utility of the diagram under the policy, computed by
/// converting to a network and marginalizing each utility's parents.
double expected_utility(const InfluenceDiagram& id, const Policy& policy);

/// Bayesian network with each decision turned into a deterministic chance
/// variable following its rule; utility bookkeeping is dropped.
Network id_to_bn(const InfluenceDiagram& id, const Policy& policy);

}  // namespace pel
