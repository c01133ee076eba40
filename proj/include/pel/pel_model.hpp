#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pel/formula.hpp"
#include "pel/inference.hpp"
#include "pel/network.hpp"
#include "pel/types.hpp"

namespace pel {

/// Slack for threshold comparisons: a belief holds when the conditional
/// probability is >= r - kThresholdSlack. Applied identically by the
/// brute-force semantics and by indicator construction so the two paths
/// cannot disagree at threshold boundaries.
inline constexpr double kThresholdSlack = 1e-12;

/// Per-agent observation stages. Stage i holds the variables the agent has
/// observed by stage i; perfect recall requires the sets to grow with i.
class ObservationSchedule {
public:
    void set_agent(const std::string& agent, std::vector<std::set<VarId>> stages);

    bool has_agent(const std::string& agent) const { return agents_.count(agent) != 0; }
    int stage_count(const std::string& agent) const;
    /// 1-based stage access.
    const std::set<VarId>& observations(const std::string& agent, int stage) const;
    std::set<VarId>& observations_mutable(const std::string& agent, int stage);
    const std::map<std::string, std::vector<std::set<VarId>>>& agents() const { return agents_; }

private:
    std::map<std::string, std::vector<std::set<VarId>>> agents_;
};

/// A Bayesian network together with observation schedules and the registry
/// of formula indicator nodes. Mutating operations (create_node,
/// add_observation_uncertainty) are single-writer; between mutations all
/// query operations are pure and may run concurrently.
class PelModel {
public:
    struct Options {
        std::size_t state_cap = kDefaultStateCap;
        // CreateNode refuses indicators with more relevant parents than this.
        std::size_t max_indicator_parents = 16;
        // Compute indicator CPDs from one joint query per belief node instead
        // of one query per parent instantiation. Must give identical CPDs.
        bool batched_indicator_queries = false;
        // Skip relevance pruning and parent indicators on the whole
        // observation set (diagnostic mode; query results must not change).
        bool use_full_observation_parents = false;
    };

    PelModel(Network network, ObservationSchedule schedule);
    PelModel(Network network, ObservationSchedule schedule, Options options);

    const Network& network() const { return network_; }
    const ObservationSchedule& schedule() const { return schedule_; }
    const Options& options() const { return options_; }

    /// Ensures an indicator node eta[f] exists and returns its id. Idempotent:
    /// a formula that is already registered returns the existing node.
    VarId create_node(const Formula& formula);

    /// Evidence {eta[f] = true}; throws inconsistent-assertion when the
    /// formula has probability zero.
    Evidence assert_formula(const Formula& formula);
    /// Joint assertion of several formulas; the combination must have
    /// positive probability.
    Evidence assert_formulas(const std::vector<Formula>& formulas);

    /// Pr(eta[f] = true | evidence) on the augmented network.
    double query_formula(const Formula& formula, const Evidence& evidence = {});

    /// Brute-force satisfaction at a single world state (the semantics
    /// oracle; enumerates the joint, exponential in network size).
    bool eval_state(const Formula& formula, const WorldState& state) const;

    /// Total prior probability of states satisfying the formula, by
    /// enumeration. With evidence, the conditional total given the states
    /// compatible with the evidence.
    double formula_probability_oracle(const Formula& formula,
                                      const Evidence& evidence = {}) const;

    /// Adds Observes/ObservedValue nodes modelling uncertainty about whether
    /// `agent` observed `variable` at `stage`, and rewrites the observation
    /// sets accordingly. Returns (observes id, observed-value id).
    std::pair<VarId, VarId> add_observation_uncertainty(
        const std::string& agent, int stage, VarId variable,
        const std::vector<VarId>& observes_parents,
        const std::vector<std::vector<double>>& observes_cpd);

    /// Network validation plus schedule checks (existing variables, perfect
    /// recall). Empty means the model is well-formed.
    std::vector<Diagnostic> validate() const;

    /// Relevant-observation sets of every belief subformula, outermost first:
    /// (printed subformula, relevant variable names).
    std::vector<std::pair<std::string, std::vector<std::string>>> explain(const Formula& formula);

    const std::map<std::string, VarId>& indicators() const { return indicators_; }
    std::optional<VarId> indicator_for(const Formula& formula) const;

    /// Number of belief-indicator CPD constructions so far; each one costs a
    /// single batch of BN inference, so the count is linear in the number of
    /// distinct belief subformulas ever created.
    std::uint64_t inference_batches() const { return inference_batches_; }
    void reset_instrumentation() { inference_batches_ = 0; }

private:
    void bind_check(const Formula& formula) const;
    VarId create_node_unchecked(const Formula& formula);
    VarId make_indicator(const std::string& key, const std::vector<VarId>& parents,
                         const std::vector<std::vector<double>>& table);
    std::set<VarId> belief_parent_set(const Formula& formula, VarId body_id,
                                      VarId condition_id) const;
    std::vector<std::vector<double>> belief_cpd_rows(const Formula& formula, VarId body_id,
                                                     VarId condition_id,
                                                     const std::vector<VarId>& parents);

    Network network_;
    ObservationSchedule schedule_;
    Options options_;
    std::map<std::string, VarId> indicators_;
    std::uint64_t inference_batches_ = 0;
};

/// Free-function spellings matching the operation names used elsewhere.
std::vector<Diagnostic> validate_model(const PelModel& model);

}  // namespace pel
