#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "pel/decision.hpp"
#include "pel/inference.hpp"
#include "pel/network.hpp"
#include "pel/pel_model.hpp"

/// Asserts that the expression throws pel::Error with the given code.
#define CHECK_PEL_ERROR(expr, expected_code)                                \
    do {                                                                    \
        bool thrown_ = false;                                               \
        try {                                                               \
            (void)(expr);                                                   \
        } catch (const pel::Error& e_) {                                    \
            thrown_ = true;                                                 \
            CHECK(e_.code() == pel::ErrorCode::expected_code);              \
        }                                                                   \
        CHECK_MESSAGE(thrown_, #expr " should have thrown " #expected_code); \
    } while (0)

namespace pel::testing {

/// X ~ [0.5, 0.5]; Y | X with rows [[0.9, 0.1], [0.2, 0.8]].
inline Network xy_network() {
    Network net;
    VarId x = net.add_variable("X", {"0", "1"});
    VarId y = net.add_variable("Y", {"0", "1"});
    net.set_cpd(x, {}, {{0.5, 0.5}});
    net.set_cpd(y, {x}, {{0.9, 0.1}, {0.2, 0.8}});
    return net;
}

// ---------------------------------------------------------------------------
// Independent d-separation oracle: moralized ancestral graph reachability.

inline bool moral_d_separated(const Network& net, const std::set<VarId>& from,
                              const std::set<VarId>& to, const std::set<VarId>& given) {
    // Ancestral closure of from ∪ to ∪ given.
    std::set<VarId> keep;
    std::deque<VarId> frontier;
    auto push = [&](VarId v) {
        if (keep.insert(v).second) frontier.push_back(v);
    };
    for (VarId v : from) push(v);
    for (VarId v : to) push(v);
    for (VarId v : given) push(v);
    while (!frontier.empty()) {
        VarId v = frontier.front();
        frontier.pop_front();
        for (VarId p : net.parents(v)) push(p);
    }

    // Moralize: undirected parent-child edges plus marriages between
    // co-parents, restricted to the ancestral set.
    std::map<VarId, std::set<VarId>> adj;
    for (VarId v : keep) {
        const auto& parents = net.parents(v);
        for (VarId p : parents) {
            adj[v].insert(p);
            adj[p].insert(v);
        }
        for (std::size_t i = 0; i < parents.size(); ++i)
            for (std::size_t j = i + 1; j < parents.size(); ++j) {
                adj[parents[i]].insert(parents[j]);
                adj[parents[j]].insert(parents[i]);
            }
    }

    // BFS avoiding the conditioning set.
    std::set<VarId> seen;
    std::deque<VarId> queue;
    for (VarId v : from)
        if (!given.count(v)) {
            seen.insert(v);
            queue.push_back(v);
        }
    while (!queue.empty()) {
        VarId v = queue.front();
        queue.pop_front();
        if (to.count(v) && !from.count(v)) return false;
        for (VarId n : adj[v]) {
            if (given.count(n) || !keep.count(n)) continue;
            if (seen.insert(n).second) queue.push_back(n);
        }
    }
    // A query node shared between `from` and `to` (and unconditioned) is
    // trivially dependent on itself.
    for (VarId v : to)
        if (from.count(v) && !given.count(v)) return false;
    return true;
}

/// All DAGs on n labelled nodes, as parent lists, by orienting every
/// unordered pair {i<j} as none / i->j / j->i and keeping the acyclic ones.
inline std::vector<std::vector<std::vector<int>>> all_dags(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    std::vector<std::vector<std::vector<int>>> dags;
    std::vector<int> choice(pairs.size(), 0);
    while (true) {
        std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            if (choice[e] == 1) parents[static_cast<std::size_t>(pairs[e].second)]
                .push_back(pairs[e].first);
            if (choice[e] == 2) parents[static_cast<std::size_t>(pairs[e].first)]
                .push_back(pairs[e].second);
        }
        // Kahn check.
        std::vector<int> pending(static_cast<std::size_t>(n), 0);
        std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v)
            for (int p : parents[static_cast<std::size_t>(v)]) {
                children[static_cast<std::size_t>(p)].push_back(v);
                ++pending[static_cast<std::size_t>(v)];
            }
        std::deque<int> ready;
        for (int v = 0; v < n; ++v)
            if (pending[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
        int emitted = 0;
        while (!ready.empty()) {
            int v = ready.front();
            ready.pop_front();
            ++emitted;
            for (int c : children[static_cast<std::size_t>(v)])
                if (--pending[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
        }
        if (emitted == n) dags.push_back(std::move(parents));

        std::size_t e = 0;
        for (; e < pairs.size(); ++e) {
            if (++choice[e] < 3) break;
            choice[e] = 0;
        }
        if (e == pairs.size()) break;
    }
    return dags;
}

/// Network with uniform binary CPDs over the given parent lists (structure
/// is all that matters for d-separation).
inline Network network_from_parents(const std::vector<std::vector<int>>& parents) {
    Network net;
    std::vector<VarId> ids;
    for (std::size_t v = 0; v < parents.size(); ++v)
        ids.push_back(net.add_variable("N" + std::to_string(v), {"0", "1"}));
    for (std::size_t v = 0; v < parents.size(); ++v) {
        std::vector<VarId> ps;
        for (int p : parents[v]) ps.push_back(ids[static_cast<std::size_t>(p)]);
        std::size_t rows = std::size_t(1) << ps.size();
        net.set_cpd(ids[v], ps,
                    std::vector<std::vector<double>>(rows, {0.5, 0.5}));
    }
    return net;
}

// ---------------------------------------------------------------------------
// Randomized model generation (seeded; all draws deterministic).

inline Network random_network(std::mt19937& rng, int max_vars = 7) {
    std::uniform_int_distribution<int> var_count(2, max_vars);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> weight(0.05, 0.95);

    int n = var_count(rng);
    Network net;
    std::vector<VarId> ids;
    for (int v = 0; v < n; ++v) ids.push_back(net.add_variable("X" + std::to_string(v), {"0", "1"}));
    for (int v = 0; v < n; ++v) {
        std::vector<VarId> parents;
        for (int p = 0; p < v && parents.size() < 3; ++p)
            if (unit(rng) < 0.35) parents.push_back(ids[static_cast<std::size_t>(p)]);
        std::size_t rows = std::size_t(1) << parents.size();
        std::vector<std::vector<double>> table;
        for (std::size_t r = 0; r < rows; ++r) {
            double a = weight(rng), b = weight(rng);
            table.push_back({a / (a + b), b / (a + b)});
        }
        net.set_cpd(ids[static_cast<std::size_t>(v)], parents, table);
    }
    return net;
}

inline ObservationSchedule random_schedule(std::mt19937& rng, const Network& net,
                                           int max_agents = 2, int max_stages = 2,
                                           bool nonempty_first_stage = false) {
    std::uniform_int_distribution<int> agent_count(1, max_agents);
    std::uniform_int_distribution<int> stage_count(1, max_stages);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    static const char* names[] = {"a", "b"};

    ObservationSchedule schedule;
    int agents = agent_count(rng);
    for (int a = 0; a < agents; ++a) {
        int stages = stage_count(rng);
        // Draw the final stage, then thin it backwards so recall holds.
        std::set<VarId> last;
        for (const auto& var : net.variables())
            if (unit(rng) < 0.4) last.insert(var.id);
        std::vector<std::set<VarId>> sets(static_cast<std::size_t>(stages));
        sets.back() = last;
        for (int s = stages - 2; s >= 0; --s) {
            std::set<VarId> smaller;
            for (VarId v : sets[static_cast<std::size_t>(s + 1)])
                if (unit(rng) < 0.6) smaller.insert(v);
            sets[static_cast<std::size_t>(s)] = std::move(smaller);
        }
        if (nonempty_first_stage && sets.front().empty())
            sets.front().insert(net.variables().front().id);
        for (int s = 1; s < stages; ++s)
            for (VarId v : sets[static_cast<std::size_t>(s - 1)])
                sets[static_cast<std::size_t>(s)].insert(v);
        schedule.set_agent(names[a], std::move(sets));
    }
    return schedule;
}

/// Random formula over the model's variables and agents; at most
/// `belief_budget` belief operators, nesting depth at most `depth`.
inline Formula random_formula(std::mt19937& rng, const Network& net,
                              const ObservationSchedule& schedule, int depth,
                              int& belief_budget) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_atom = [&]() {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(net.num_variables()) - 1);
        const Variable* var = nullptr;
        do {
            var = &net.variables()[static_cast<std::size_t>(pick(rng))];
        } while (var->name == kTrueVariableName);
        std::uniform_int_distribution<int> value(0, static_cast<int>(var->domain.size()) - 1);
        return Formula::atom(var->name, var->domain[static_cast<std::size_t>(value(rng))]);
    };

    double roll = unit(rng);
    if (depth <= 0 || roll < 0.35) return random_atom();
    if (roll < 0.55)
        return Formula::negation(random_formula(rng, net, schedule, depth - 1, belief_budget));
    if (roll < 0.75 || belief_budget <= 0) {
        Formula lhs = random_formula(rng, net, schedule, depth - 1, belief_budget);
        Formula rhs = random_formula(rng, net, schedule, depth - 1, belief_budget);
        return Formula::disjunction(std::move(lhs), std::move(rhs));
    }

    --belief_budget;
    std::uniform_int_distribution<int> agent_pick(0,
                                                  static_cast<int>(schedule.agents().size()) - 1);
    auto it = schedule.agents().begin();
    std::advance(it, agent_pick(rng));
    std::uniform_int_distribution<int> stage_pick(1, static_cast<int>(it->second.size()));
    int stage = stage_pick(rng);
    // Coarse threshold grid keeps conditionals generically far from the
    // decision boundary, so float noise cannot flip fast vs oracle.
    std::uniform_int_distribution<int> grid(0, 20);
    double threshold = grid(rng) / 20.0;
    Formula body = random_formula(rng, net, schedule, depth - 1, belief_budget);
    if (unit(rng) < 0.5)
        return Formula::belief(it->first, stage, threshold, std::move(body));
    Formula condition = random_formula(rng, net, schedule, depth - 1, belief_budget);
    return Formula::belief_cond(it->first, stage, threshold, std::move(body),
                                std::move(condition));
}

// ---------------------------------------------------------------------------
// Influence-diagram oracles: brute-force expected utility and exhaustive
// policy enumeration, independent of the factor machinery.

inline double brute_expected_utility(const InfluenceDiagram& id, const Policy& policy) {
    const auto& nodes = id.nodes();
    std::vector<int> sizes;
    sizes.reserve(nodes.size());
    for (const auto& n : nodes) sizes.push_back(static_cast<int>(n.domain.size()));

    std::vector<const DecisionRule*> rule_of(nodes.size(), nullptr);
    for (const auto& rule : policy.rules)
        rule_of[static_cast<std::size_t>(id.require(rule.decision))] = &rule;

    std::vector<int> values(nodes.size(), 0);
    double eu = 0.0;
    while (true) {
        double p = 1.0;
        for (std::size_t v = 0; v < nodes.size() && p > 0.0; ++v) {
            const auto& n = nodes[v];
            std::vector<int> parent_sizes, parent_values;
            for (int parent : n.parents) {
                parent_sizes.push_back(sizes[static_cast<std::size_t>(parent)]);
                parent_values.push_back(values[static_cast<std::size_t>(parent)]);
            }
            std::size_t row = parent_row_index(parent_sizes, parent_values);
            if (n.is_decision)
                p *= rule_of[v]->actions[row] == values[v] ? 1.0 : 0.0;
            else
                p *= n.cpd[row][static_cast<std::size_t>(values[v])];
        }
        if (p > 0.0) {
            double utility = 0.0;
            for (const auto& u : id.utilities()) {
                std::vector<int> parent_sizes, parent_values;
                for (int parent : u.parents) {
                    parent_sizes.push_back(sizes[static_cast<std::size_t>(parent)]);
                    parent_values.push_back(values[static_cast<std::size_t>(parent)]);
                }
                utility += u.table[parent_row_index(parent_sizes, parent_values)];
            }
            eu += p * utility;
        }
        std::size_t d = nodes.size();
        while (d-- > 0) {
            if (++values[d] < sizes[d]) break;
            values[d] = 0;
        }
        if (d == static_cast<std::size_t>(-1)) break;
    }
    return eu;
}

/// Total number of deterministic policies of the (completed) diagram.
inline double policy_space_size(const InfluenceDiagram& id) {
    double total = 1.0;
    for (int d : id.decision_order()) {
        const auto& n = id.node(d);
        double rows = static_cast<double>(id.parent_rows(n.parents));
        total *= std::pow(static_cast<double>(n.domain.size()), rows);
    }
    return total;
}

/// Exhaustive policy search; returns the best expected utility found.
inline double best_policy_by_enumeration(const InfluenceDiagram& id) {
    struct Slot {
        int decision;
        std::size_t rows;
        int actions;
    };
    std::vector<Slot> slots;
    std::vector<DecisionRule> rules;
    for (int d : id.decision_order()) {
        const auto& n = id.node(d);
        Slot s{d, id.parent_rows(n.parents), static_cast<int>(n.domain.size())};
        DecisionRule rule;
        rule.decision = n.name;
        for (int p : n.parents) rule.parents.push_back(id.node(p).name);
        rule.actions.assign(s.rows, 0);
        slots.push_back(s);
        rules.push_back(std::move(rule));
    }

    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        Policy policy;
        policy.rules = rules;
        best = std::max(best, brute_expected_utility(id, policy));

        // Odometer over every (decision, row) action choice.
        std::size_t s = 0;
        bool done = true;
        for (; s < slots.size(); ++s) {
            bool carried = false;
            for (std::size_t r = 0; r < slots[s].rows; ++r) {
                if (++rules[s].actions[r] < slots[s].actions) {
                    carried = true;
                    break;
                }
                rules[s].actions[r] = 0;
            }
            if (carried) {
                done = false;
                break;
            }
        }
        if (done) break;
    }
    return best;
}

/// Random single- or two-decision diagram whose exhaustive policy space stays
/// below `max_policies`.
inline InfluenceDiagram random_influence_diagram(std::mt19937& rng,
                                                 double max_policies = 3000.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> value(-5.0, 5.0);

    for (;;) {
        InfluenceDiagram id;
        std::uniform_int_distribution<int> chance_count(1, 4);
        std::uniform_int_distribution<int> decision_count(1, 2);
        std::uniform_int_distribution<int> action_count(2, 3);

        int n_chance = chance_count(rng);
        int n_decisions = decision_count(rng);

        // Interleave: a prefix of chance nodes, D1, more chance, D2, the rest.
        std::vector<std::string> order;
        std::vector<bool> is_decision;
        int placed_chance = 0;
        std::uniform_int_distribution<int> split(0, n_chance);
        std::vector<int> breaks;
        for (int d = 0; d < n_decisions; ++d) breaks.push_back(split(rng));
        std::sort(breaks.begin(), breaks.end());
        int next_break = 0;
        while (placed_chance < n_chance || next_break < n_decisions) {
            if (next_break < n_decisions && breaks[static_cast<std::size_t>(next_break)] <=
                                                placed_chance) {
                order.push_back("D" + std::to_string(next_break + 1));
                is_decision.push_back(true);
                ++next_break;
            } else {
                order.push_back("c" + std::to_string(placed_chance));
                is_decision.push_back(false);
                ++placed_chance;
            }
        }

        std::vector<std::string> placed;
        std::vector<std::string> decisions_placed;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (is_decision[i]) {
                int actions = action_count(rng);
                std::vector<std::string> domain;
                for (int a = 0; a < actions; ++a) domain.push_back("act" + std::to_string(a));
                // Keep informational parents tiny; no-forgetting completion
                // adds the mandatory ones.
                std::vector<std::string> parents;
                std::vector<std::string> candidates;
                for (const auto& name : placed)
                    if (name[0] == 'c') candidates.push_back(name);
                if (!candidates.empty() && unit(rng) < 0.7)
                    parents.push_back(candidates[static_cast<std::size_t>(
                        std::uniform_int_distribution<int>(
                            0, static_cast<int>(candidates.size()) - 1)(rng))]);
                id.add_decision(order[i], domain, parents);
                decisions_placed.push_back(order[i]);
            } else {
                id.add_chance(order[i], {"0", "1"});
                std::vector<std::string> parents;
                for (const auto& name : placed)
                    if (parents.size() < 2 && unit(rng) < 0.3) parents.push_back(name);
                std::vector<int> parent_sizes;
                for (const auto& p : parents)
                    parent_sizes.push_back(
                        static_cast<int>(id.node(id.require(p)).domain.size()));
                std::size_t rows = 1;
                for (int s : parent_sizes) rows *= static_cast<std::size_t>(s);
                std::vector<std::vector<double>> table;
                for (std::size_t r = 0; r < rows; ++r) {
                    double a = unit(rng) + 0.05, b = unit(rng) + 0.05;
                    table.push_back({a / (a + b), b / (a + b)});
                }
                id.set_cpd(order[i], parents, table);
            }
            placed.push_back(order[i]);
        }

        std::uniform_int_distribution<int> utility_count(1, 2);
        int n_utilities = utility_count(rng);
        for (int u = 0; u < n_utilities; ++u) {
            std::vector<std::string> parents;
            for (const auto& name : placed)
                if (parents.size() < 3 && unit(rng) < 0.4) parents.push_back(name);
            std::vector<int> parent_sizes;
            for (const auto& p : parents)
                parent_sizes.push_back(static_cast<int>(id.node(id.require(p)).domain.size()));
            std::size_t rows = 1;
            for (int s : parent_sizes) rows *= static_cast<std::size_t>(s);
            std::vector<double> table;
            for (std::size_t r = 0; r < rows; ++r) table.push_back(value(rng));
            id.add_utility("U" + std::to_string(u), parents, table);
        }

        InfluenceDiagram completed = id.completed_no_forgetting();
        if (policy_space_size(completed) <= max_policies) return id;
    }
}

}  // namespace pel::testing
