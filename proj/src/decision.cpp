#include "pel/decision.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pel/inference.hpp"

namespace pel {

void InfluenceDiagram::check_new_name(const std::string& name) const {
    if (find(name) >= 0)
        throw Error(ErrorCode::name_clash, "node '" + name + "' already exists");
    for (const auto& u : utilities_)
        if (u.name == name)
            throw Error(ErrorCode::name_clash, "utility '" + name + "' already exists");
}

std::vector<int> InfluenceDiagram::resolve(const std::vector<std::string>& names) const {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(require(n));
    return out;
}

int InfluenceDiagram::find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return static_cast<int>(i);
    return -1;
}

int InfluenceDiagram::require(const std::string& name) const {
    int i = find(name);
    if (i < 0) throw Error(ErrorCode::unknown_variable, "no node named '" + name + "'");
    return i;
}

int InfluenceDiagram::add_chance(const std::string& name,
                                 const std::vector<std::string>& domain) {
    check_new_name(name);
    if (domain.empty())
        throw Error(ErrorCode::empty_domain, "node '" + name + "' has an empty domain");
    nodes_.push_back(Node{name, domain, false, {}, {}, false});
    return static_cast<int>(nodes_.size()) - 1;
}

int InfluenceDiagram::add_decision(const std::string& name,
                                   const std::vector<std::string>& domain,
                                   const std::vector<std::string>& parents) {
    check_new_name(name);
    if (domain.empty())
        throw Error(ErrorCode::empty_domain, "decision '" + name + "' has an empty domain");
    std::vector<int> resolved = resolve(parents);
    nodes_.push_back(Node{name, domain, true, std::move(resolved), {}, false});
    decisions_.push_back(static_cast<int>(nodes_.size()) - 1);
    return static_cast<int>(nodes_.size()) - 1;
}

std::size_t InfluenceDiagram::parent_rows(const std::vector<int>& parents) const {
    std::size_t rows = 1;
    for (int p : parents) rows *= node(p).domain.size();
    return rows;
}

void InfluenceDiagram::set_cpd(const std::string& name, const std::vector<std::string>& parents,
                               const std::vector<std::vector<double>>& table) {
    int index = require(name);
    Node& n = nodes_[static_cast<std::size_t>(index)];
    if (n.is_decision)
        throw Error(ErrorCode::validation_failed,
                    "decision '" + name + "' takes no CPD; it is derived by solving");
    n.parents = resolve(parents);
    n.cpd = table;
    n.has_cpd = true;
}

void InfluenceDiagram::add_utility(const std::string& name,
                                   const std::vector<std::string>& parents,
                                   const std::vector<double>& table) {
    check_new_name(name);
    utilities_.push_back(Utility{name, resolve(parents), table});
}

void InfluenceDiagram::set_utility(const std::string& name,
                                   const std::vector<std::string>& parents,
                                   const std::vector<double>& table) {
    for (auto& u : utilities_) {
        if (u.name == name) {
            u.parents = resolve(parents);
            u.table = table;
            return;
        }
    }
    throw Error(ErrorCode::unknown_utility, "no utility named '" + name + "'");
}

int InfluenceDiagram::add_preference_node(const std::string& name,
                                          const std::vector<std::string>& domain,
                                          const std::vector<double>& prior,
                                          const std::vector<std::string>& affected_utilities) {
    std::vector<Utility*> affected;
    for (const auto& uname : affected_utilities) {
        Utility* hit = nullptr;
        for (auto& u : utilities_)
            if (u.name == uname) hit = &u;
        if (!hit) throw Error(ErrorCode::unknown_utility, "no utility named '" + uname + "'");
        affected.push_back(hit);
    }
    int index = add_chance(name, domain);
    set_cpd(name, {}, {prior});

    // The preference variable conditions the affected utilities (their tables
    // must be re-supplied) and is known to the decision maker at every
    // decision.
    for (Utility* u : affected) u->parents.push_back(index);
    for (int d : decisions_) nodes_[static_cast<std::size_t>(d)].parents.push_back(index);
    return index;
}

std::vector<Diagnostic> InfluenceDiagram::validate() const {
    std::vector<Diagnostic> diags;

    for (const auto& n : nodes_) {
        if (n.is_decision) continue;
        if (!n.has_cpd) {
            diags.push_back({Diagnostic::Severity::error, "missing-cpd",
                             "chance node '" + n.name + "' has no CPD"});
            continue;
        }
        std::size_t expected = parent_rows(n.parents);
        if (n.cpd.size() != expected) {
            diags.push_back({Diagnostic::Severity::error, "row-count-mismatch",
                             "cpd for '" + n.name + "' has " + std::to_string(n.cpd.size()) +
                                 " rows, expected " + std::to_string(expected)});
            continue;
        }
        for (const auto& row : n.cpd) {
            if (row.size() != n.domain.size()) {
                diags.push_back({Diagnostic::Severity::error, "row-count-mismatch",
                                 "cpd row width mismatch for '" + n.name + "'"});
                break;
            }
            double sum = 0.0;
            bool bad_entry = false;
            for (double x : row) {
                if (x < 0.0 || x > 1.0) bad_entry = true;
                sum += x;
            }
            if (bad_entry)
                diags.push_back({Diagnostic::Severity::error, "negative-entry",
                                 "cpd entry outside [0,1] for '" + n.name + "'"});
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                diags.push_back({Diagnostic::Severity::error, "row-not-normalized",
                                 "cpd row for '" + n.name + "' sums to " + std::to_string(sum)});
                break;
            }
        }
    }

    for (const auto& u : utilities_) {
        std::size_t expected = parent_rows(u.parents);
        if (u.table.size() != expected)
            diags.push_back({Diagnostic::Severity::error, "utility-size",
                             "utility '" + u.name + "' has " + std::to_string(u.table.size()) +
                                 " entries, expected " + std::to_string(expected)});
    }

    // Cycle check over variable edges (utilities cannot have children by
    // construction).
    std::vector<std::vector<int>> children(nodes_.size());
    std::vector<int> pending(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (int p : nodes_[i].parents) {
            children[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
            ++pending[i];
        }
    }
    std::vector<int> order;
    std::vector<int> topo_position(nodes_.size(), -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (pending[i] == 0) order.push_back(static_cast<int>(i));
    for (std::size_t head = 0; head < order.size(); ++head)
        for (int c : children[static_cast<std::size_t>(order[head])])
            if (--pending[static_cast<std::size_t>(c)] == 0) order.push_back(c);
    if (order.size() != nodes_.size()) {
        diags.push_back({Diagnostic::Severity::error, "cycle", "diagram contains a cycle"});
        return diags;
    }
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        topo_position[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);

    // Decision total order must be consistent with the graph: no later
    // decision may be an ancestor of an earlier one.
    std::vector<std::set<int>> ancestors(nodes_.size());
    for (int v : order)
        for (int p : nodes_[static_cast<std::size_t>(v)].parents) {
            ancestors[static_cast<std::size_t>(v)].insert(p);
            ancestors[static_cast<std::size_t>(v)].insert(
                ancestors[static_cast<std::size_t>(p)].begin(),
                ancestors[static_cast<std::size_t>(p)].end());
        }
    for (std::size_t i = 0; i < decisions_.size(); ++i)
        for (std::size_t j = i + 1; j < decisions_.size(); ++j)
            if (ancestors[static_cast<std::size_t>(decisions_[i])].count(decisions_[j]))
                diags.push_back({Diagnostic::Severity::error, "decision-order",
                                 "decision '" + node(decisions_[j]).name +
                                     "' precedes '" + node(decisions_[i]).name +
                                     "' in the graph but is declared later"});

    for (std::size_t i = 0; i < decisions_.size(); ++i) {
        for (std::size_t j = i + 1; j < decisions_.size(); ++j) {
            const Node& earlier = node(decisions_[i]);
            const Node& later = node(decisions_[j]);
            std::set<int> later_parents(later.parents.begin(), later.parents.end());
            std::vector<std::string> missing;
            if (!later_parents.count(decisions_[i])) missing.push_back(earlier.name);
            for (int p : earlier.parents)
                if (!later_parents.count(p)) missing.push_back(node(p).name);
            for (const auto& name : missing)
                diags.push_back({Diagnostic::Severity::warning, "no-forgetting",
                                 "decision '" + later.name + "' is missing remembered parent '" +
                                     name + "'"});
        }
    }
    return diags;
}

InfluenceDiagram InfluenceDiagram::completed_no_forgetting(
    std::vector<std::string>* added) const {
    InfluenceDiagram out = *this;
    for (std::size_t j = 1; j < out.decisions_.size(); ++j) {
        Node& later = out.nodes_[static_cast<std::size_t>(out.decisions_[j])];
        std::set<int> present(later.parents.begin(), later.parents.end());
        for (std::size_t i = 0; i < j; ++i) {
            int earlier_index = out.decisions_[i];
            const Node& earlier = out.nodes_[static_cast<std::size_t>(earlier_index)];
            auto append = [&](int p) {
                if (present.insert(p).second) {
                    later.parents.push_back(p);
                    if (added)
                        added->push_back(out.node(p).name + " -> " + later.name);
                }
            };
            append(earlier_index);
            for (int p : earlier.parents) append(p);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

/// Network skeleton shared by solving and conversion: every diagram variable
/// becomes a network variable in declaration order; chance CPDs are copied.
/// Decisions receive the CPDs provided by `decision_cpd`, either over their
/// informational parents or (for unsolved placeholders) with no parents.
template <typename DecisionCpdFn>
Network realize_network(const InfluenceDiagram& id, bool decisions_parentless,
                        DecisionCpdFn&& decision_cpd) {
    Network net;
    std::vector<VarId> ids;
    ids.reserve(id.nodes().size());
    for (const auto& n : id.nodes()) ids.push_back(net.add_variable(n.name, n.domain));
    for (std::size_t i = 0; i < id.nodes().size(); ++i) {
        const auto& n = id.nodes()[i];
        std::vector<VarId> parents;
        if (!n.is_decision || !decisions_parentless) {
            parents.reserve(n.parents.size());
            for (int p : n.parents) parents.push_back(ids[static_cast<std::size_t>(p)]);
        }
        if (n.is_decision)
            net.set_cpd(ids[i], parents, decision_cpd(static_cast<int>(i)));
        else
            net.set_cpd(ids[i], parents, n.cpd);
    }
    return net;
}

std::vector<std::vector<double>> uniform_rows(std::size_t rows, std::size_t width) {
    return std::vector<std::vector<double>>(
        rows, std::vector<double>(width, 1.0 / static_cast<double>(width)));
}

void require_clean(const InfluenceDiagram& id) {
    auto diags = id.validate();
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::error)
            throw Error(ErrorCode::validation_failed, d.message);
}

double utility_expectation(const Network& net, const InfluenceDiagram& id,
                           const InfluenceDiagram::Utility& utility, const Evidence& evidence) {
    if (utility.parents.empty()) return utility.table.empty() ? 0.0 : utility.table[0];

    std::set<VarId> targets;
    std::vector<VarId> parent_ids;
    std::vector<int> sizes;
    for (int p : utility.parents) {
        VarId v = net.require(id.node(p).name);
        parent_ids.push_back(v);
        sizes.push_back(net.domain_size(v));
        targets.insert(v);
    }
    // Evidence variables may appear among the utility parents; query forbids
    // the overlap, so fix them and marginalize only the free ones.
    std::vector<std::optional<int>> fixed(parent_ids.size());
    std::set<VarId> free_targets;
    for (std::size_t i = 0; i < parent_ids.size(); ++i) {
        if (auto v = evidence.value(parent_ids[i]))
            fixed[i] = *v;
        else
            free_targets.insert(parent_ids[i]);
    }

    Factor marginal = free_targets.empty() ? Factor::constant(1.0)
                                           : query(net, free_targets, evidence);
    double expectation = 0.0;
    std::size_t rows = utility.table.size();
    for (std::size_t row = 0; row < rows; ++row) {
        std::vector<int> values = parent_row_instantiation(sizes, row);
        bool consistent = true;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (fixed[i] && *fixed[i] != values[i]) consistent = false;
        if (!consistent) continue;

        double p = 1.0;
        if (!free_targets.empty()) {
            const auto& scope = marginal.scope();
            std::vector<int> cell(scope.size());
            for (std::size_t s = 0; s < scope.size(); ++s) {
                auto at = std::find(parent_ids.begin(), parent_ids.end(), scope[s]);
                cell[s] = values[static_cast<std::size_t>(at - parent_ids.begin())];
            }
            p = marginal.at(cell);
        }
        expectation += p * utility.table[row];
    }
    return expectation;
}

}  // namespace

Policy solve_id(const InfluenceDiagram& raw) {
    InfluenceDiagram id = raw.completed_no_forgetting();
    require_clean(id);

    const auto& decisions = id.decision_order();
    for (int d : decisions)
        if (id.parent_rows(id.node(d).parents) > kMaxDecisionRows)
            throw Error(ErrorCode::infeasible_size,
                        "decision '" + id.node(d).name + "' has too many parent instantiations");

    // Working network: unsolved decisions are parentless uniform placeholders.
    // Conditioning on a decision's full information set makes the placeholder
    // distribution cancel, so the derived rules do not depend on it.
    Network net = realize_network(id, true, [&](int index) {
        return uniform_rows(1, id.node(index).domain.size());
    });

    Policy policy;
    policy.rules.resize(decisions.size());

    for (std::size_t k = decisions.size(); k-- > 0;) {
        int decision = decisions[k];
        const auto& dnode = id.node(decision);
        VarId decision_var = net.require(dnode.name);

        std::vector<VarId> parent_ids;
        std::vector<int> sizes;
        for (int p : dnode.parents) {
            parent_ids.push_back(net.require(id.node(p).name));
            sizes.push_back(static_cast<int>(id.node(p).domain.size()));
        }
        std::size_t rows = id.parent_rows(dnode.parents);
        const int n_actions = static_cast<int>(dnode.domain.size());

        DecisionRule rule;
        rule.decision = dnode.name;
        for (int p : dnode.parents) rule.parents.push_back(id.node(p).name);
        rule.actions.assign(rows, 0);

        for (std::size_t row = 0; row < rows; ++row) {
            std::vector<int> values = parent_row_instantiation(sizes, row);
            int best = 0;
            double best_eu = 0.0;
            bool reachable = false;
            for (int action = 0; action < n_actions; ++action) {
                Evidence evidence;
                for (std::size_t i = 0; i < parent_ids.size(); ++i)
                    evidence.set(parent_ids[i], values[i]);
                evidence.set(decision_var, action);
                double eu = 0.0;
                try {
                    for (const auto& u : id.utilities())
                        eu += utility_expectation(net, id, u, evidence);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::zero_probability_evidence) throw;
                    continue;  // this observation history cannot occur
                }
                // Strictly-better-with-slack comparison keeps ties (and float
                // noise between mathematically equal alternatives) on the
                // earliest action label.
                if (!reachable || eu > best_eu + 1e-12 * (1.0 + std::abs(best_eu))) {
                    best = action;
                    best_eu = eu;
                    reachable = true;
                }
            }
            rule.actions[row] = best;
        }

        // Realize the rule so earlier decisions see optimal future behavior.
        std::vector<std::vector<double>> cpd_rows;
        cpd_rows.reserve(rows);
        for (std::size_t row = 0; row < rows; ++row) {
            std::vector<double> r(static_cast<std::size_t>(n_actions), 0.0);
            r[static_cast<std::size_t>(rule.actions[row])] = 1.0;
            cpd_rows.push_back(std::move(r));
        }
        net.set_cpd(decision_var, parent_ids, cpd_rows);
        policy.rules[k] = std::move(rule);
    }

    policy.meu = expected_utility(id, policy);
    return policy;
}

namespace {

/// Matches rules to decisions on the completed diagram; throws
/// incomplete-policy when a rule is missing or its domain disagrees.
const DecisionRule& rule_for(const InfluenceDiagram& id, const Policy& policy, int decision) {
    const auto& dnode = id.node(decision);
    for (const auto& rule : policy.rules) {
        if (rule.decision != dnode.name) continue;
        std::vector<std::string> expected;
        for (int p : dnode.parents) expected.push_back(id.node(p).name);
        if (rule.parents != expected)
            throw Error(ErrorCode::incomplete_policy,
                        "rule for '" + dnode.name + "' covers different parents");
        if (rule.actions.size() != id.parent_rows(dnode.parents))
            throw Error(ErrorCode::incomplete_policy,
                        "rule for '" + dnode.name + "' has the wrong number of rows");
        for (int a : rule.actions)
            if (a < 0 || a >= static_cast<int>(dnode.domain.size()))
                throw Error(ErrorCode::incomplete_policy,
                            "rule for '" + dnode.name + "' picks an unknown action");
        return rule;
    }
    throw Error(ErrorCode::incomplete_policy, "no rule for decision '" + dnode.name + "'");
}

}  // namespace

Network id_to_bn(const InfluenceDiagram& raw, const Policy& policy) {
    InfluenceDiagram id = raw.completed_no_forgetting();
    require_clean(id);
    return realize_network(id, false, [&](int index) {
        const auto& dnode = id.node(index);
        const DecisionRule& rule = rule_for(id, policy, index);
        std::vector<std::vector<double>> rows;
        rows.reserve(rule.actions.size());
        for (int action : rule.actions) {
            std::vector<double> r(dnode.domain.size(), 0.0);
            r[static_cast<std::size_t>(action)] = 1.0;
            rows.push_back(std::move(r));
        }
        return rows;
    });
}

double expected_utility(const InfluenceDiagram& raw, const Policy& policy) {
    InfluenceDiagram id = raw.completed_no_forgetting();
    Network net = id_to_bn(id, policy);
    double eu = 0.0;
    for (const auto& u : id.utilities()) eu += utility_expectation(net, id, u, Evidence{});
    return eu;
}

}  // namespace pel
