#include "pel/pel_model.hpp"

#include <algorithm>
#include <cmath>

namespace pel {

void ObservationSchedule::set_agent(const std::string& agent,
                                    std::vector<std::set<VarId>> stages) {
    if (agent.empty())
        throw Error(ErrorCode::unknown_agent, "agent name must be non-empty");
    if (stages.empty())
        throw Error(ErrorCode::stage_out_of_range,
                    "agent '" + agent + "' needs at least one stage");
    agents_[agent] = std::move(stages);
}

int ObservationSchedule::stage_count(const std::string& agent) const {
    auto it = agents_.find(agent);
    if (it == agents_.end())
        throw Error(ErrorCode::unknown_agent, "no agent named '" + agent + "'");
    return static_cast<int>(it->second.size());
}

const std::set<VarId>& ObservationSchedule::observations(const std::string& agent,
                                                         int stage) const {
    auto it = agents_.find(agent);
    if (it == agents_.end())
        throw Error(ErrorCode::unknown_agent, "no agent named '" + agent + "'");
    if (stage < 1 || stage > static_cast<int>(it->second.size()))
        throw Error(ErrorCode::stage_out_of_range,
                    "agent '" + agent + "' has no stage " + std::to_string(stage));
    return it->second[static_cast<std::size_t>(stage - 1)];
}

std::set<VarId>& ObservationSchedule::observations_mutable(const std::string& agent, int stage) {
    return const_cast<std::set<VarId>&>(
        static_cast<const ObservationSchedule&>(*this).observations(agent, stage));
}

PelModel::PelModel(Network network, ObservationSchedule schedule)
    : PelModel(std::move(network), std::move(schedule), Options{}) {}

PelModel::PelModel(Network network, ObservationSchedule schedule, Options options)
    : network_(std::move(network)), schedule_(std::move(schedule)), options_(options) {
    // The always-true atom needs its constant variable; reserve it up front
    // so unconditional Bel formulas bind in every model.
    if (auto existing = network_.find(kTrueVariableName)) {
        const auto& domain = network_.variable(*existing).domain;
        if (domain != std::vector<std::string>{kTrueVariableLabel})
            throw Error(ErrorCode::name_clash,
                        std::string("variable '") + kTrueVariableName +
                            "' is reserved for the constant true atom");
    } else {
        VarId id = network_.add_variable(kTrueVariableName, {kTrueVariableLabel});
        network_.set_cpd(id, {}, {{1.0}});
    }
}

void PelModel::bind_check(const Formula& formula) const {
    switch (formula.kind()) {
        case Formula::Kind::atom: {
            auto var = network_.find(formula.variable_name());
            if (!var)
                throw Error(ErrorCode::bind_error,
                            "no variable named '" + formula.variable_name() + "'");
            const auto& domain = network_.variable(*var).domain;
            if (std::find(domain.begin(), domain.end(), formula.value_label()) == domain.end())
                throw Error(ErrorCode::bind_error, "'" + formula.value_label() +
                                                       "' is not a value of '" +
                                                       formula.variable_name() + "'");
            return;
        }
        case Formula::Kind::negation:
            bind_check(formula.child());
            return;
        case Formula::Kind::disjunction:
            bind_check(formula.lhs());
            bind_check(formula.rhs());
            return;
        case Formula::Kind::belief: {
            if (!schedule_.has_agent(formula.agent()))
                throw Error(ErrorCode::unknown_agent, "no agent named '" + formula.agent() + "'");
            int n = schedule_.stage_count(formula.agent());
            if (formula.stage() < 1 || formula.stage() > n)
                throw Error(ErrorCode::stage_out_of_range,
                            "agent '" + formula.agent() + "' has stages 1.." + std::to_string(n) +
                                ", got " + std::to_string(formula.stage()));
            if (formula.threshold() < 0.0 || formula.threshold() > 1.0)
                throw Error(ErrorCode::threshold_out_of_range,
                            "threshold outside [0,1]");
            bind_check(formula.body());
            bind_check(formula.condition());
            return;
        }
    }
}

VarId PelModel::make_indicator(const std::string& key, const std::vector<VarId>& parents,
                               const std::vector<std::vector<double>>& table) {
    VarId id = network_.add_variable("eta[" + key + "]", {"true", "false"});
    network_.set_cpd(id, parents, table);
    indicators_.emplace(key, id);
    return id;
}

VarId PelModel::create_node(const Formula& formula) {
    bind_check(formula);
    return create_node_unchecked(formula);
}

VarId PelModel::create_node_unchecked(const Formula& formula) {
    const std::string key = formula.to_string();
    if (auto it = indicators_.find(key); it != indicators_.end()) return it->second;

    switch (formula.kind()) {
        case Formula::Kind::atom: {
            VarId var = network_.require(formula.variable_name());
            int hit = network_.value_index(var, formula.value_label());
            std::vector<std::vector<double>> table;
            for (int v = 0; v < network_.domain_size(var); ++v)
                table.push_back(v == hit ? std::vector<double>{1.0, 0.0}
                                         : std::vector<double>{0.0, 1.0});
            return make_indicator(key, {var}, table);
        }
        case Formula::Kind::negation: {
            VarId child = create_node_unchecked(formula.child());
            // NOT gate over the child indicator.
            return make_indicator(key, {child}, {{0.0, 1.0}, {1.0, 0.0}});
        }
        case Formula::Kind::disjunction: {
            VarId lhs = create_node_unchecked(formula.lhs());
            VarId rhs = create_node_unchecked(formula.rhs());
            if (lhs == rhs) {
                // "x or x": one parent, identity gate.
                return make_indicator(key, {lhs}, {{1.0, 0.0}, {0.0, 1.0}});
            }
            std::vector<VarId> parents{lhs, rhs};
            std::sort(parents.begin(), parents.end());
            // OR gate; only the (false,false) row is false.
            return make_indicator(key, parents,
                                  {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
        }
        case Formula::Kind::belief: {
            VarId body_id = create_node_unchecked(formula.body());
            VarId condition_id = create_node_unchecked(formula.condition());

            std::set<VarId> relevant = belief_parent_set(formula, body_id, condition_id);
            if (relevant.size() > options_.max_indicator_parents)
                throw Error(ErrorCode::inference_infeasible,
                            "belief node needs " + std::to_string(relevant.size()) +
                                " relevant parents, cap is " +
                                std::to_string(options_.max_indicator_parents));

            std::vector<VarId> parents(relevant.begin(), relevant.end());
            auto table = belief_cpd_rows(formula, body_id, condition_id, parents);
            return make_indicator(key, parents, table);
        }
    }
    throw Error(ErrorCode::bind_error, "unreachable formula kind");
}

std::set<VarId> PelModel::belief_parent_set(const Formula& formula, VarId body_id,
                                            VarId condition_id) const {
    const std::set<VarId>& observed = schedule_.observations(formula.agent(), formula.stage());
    if (options_.use_full_observation_parents) return observed;

    std::set<VarId> relevant =
        relevant_observations(network_, observed, body_id, {condition_id});
    // Observations that decide whether the condition is satisfiable must also
    // be parents: a CPD row must not lump together observation histories
    // inside and outside the condition's support, or the zero-condition rule
    // would diverge from the state semantics.
    std::set<VarId> support = relevant_observations(network_, observed, condition_id, {});
    relevant.insert(support.begin(), support.end());
    return relevant;
}

std::vector<std::vector<double>> PelModel::belief_cpd_rows(const Formula& formula, VarId body_id,
                                                           VarId condition_id,
                                                           const std::vector<VarId>& parents) {
    ++inference_batches_;

    std::vector<int> sizes;
    sizes.reserve(parents.size());
    std::size_t rows = 1;
    for (VarId p : parents) {
        sizes.push_back(network_.domain_size(p));
        rows *= static_cast<std::size_t>(network_.domain_size(p));
    }

    const double threshold = formula.threshold();
    std::vector<std::vector<double>> table;
    table.reserve(rows);

    if (!options_.batched_indicator_queries) {
        for (std::size_t row = 0; row < rows; ++row) {
            std::vector<int> values = parent_row_instantiation(sizes, row);
            Evidence given;
            for (std::size_t i = 0; i < parents.size(); ++i) given.set(parents[i], values[i]);
            given.set(condition_id, 0);  // eta[condition] = true
            Evidence event;
            event.set(body_id, 0);
            auto p = probability_of(network_, event, given);
            // Rows conditioned on a zero-probability observation are outside
            // the support; mirroring the semantics of an unsatisfiable
            // condition they are set to false.
            bool truth = p.has_value() && *p >= threshold - kThresholdSlack;
            table.push_back(truth ? std::vector<double>{1.0, 0.0}
                                  : std::vector<double>{0.0, 1.0});
        }
        return table;
    }

    // Batched mode: one joint query over {eta[body]} ∪ parents given
    // eta[condition] = true, then per-row renormalization.
    std::set<VarId> targets(parents.begin(), parents.end());
    targets.insert(body_id);
    Evidence given;
    given.set(condition_id, 0);
    std::optional<Factor> joint;
    try {
        joint = query(network_, targets, given);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::zero_probability_evidence) throw;
    }
    for (std::size_t row = 0; row < rows; ++row) {
        bool truth = false;
        if (joint) {
            std::vector<int> values = parent_row_instantiation(sizes, row);
            // Assemble the factor instantiation in scope order.
            const auto& scope = joint->scope();
            std::vector<int> cell(scope.size(), 0);
            double mass_true = 0.0, mass_false = 0.0;
            for (int body_value = 0; body_value < 2; ++body_value) {
                for (std::size_t i = 0; i < scope.size(); ++i) {
                    if (scope[i] == body_id) {
                        cell[i] = body_value;
                    } else {
                        auto at = std::find(parents.begin(), parents.end(), scope[i]);
                        cell[i] = values[static_cast<std::size_t>(at - parents.begin())];
                    }
                }
                (body_value == 0 ? mass_true : mass_false) = joint->at(cell);
            }
            double denom = mass_true + mass_false;
            truth = denom > 0.0 && mass_true / denom >= threshold - kThresholdSlack;
        }
        table.push_back(truth ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0});
    }
    return table;
}

Evidence PelModel::assert_formula(const Formula& formula) {
    return assert_formulas({formula});
}

Evidence PelModel::assert_formulas(const std::vector<Formula>& formulas) {
    Evidence evidence;
    for (const Formula& f : formulas) evidence.set(create_node(f), 0);
    if (evidence_mass(network_, evidence) <= 0.0) {
        std::string what = formulas.size() == 1 ? formulas.front().to_string()
                                                : "the asserted formulas";
        throw Error(ErrorCode::inconsistent_assertion, what + " has probability zero");
    }
    return evidence;
}

double PelModel::query_formula(const Formula& formula, const Evidence& evidence) {
    VarId id = create_node(formula);
    if (auto fixed = evidence.value(id)) {
        // The indicator itself is part of the evidence; the conditional is 0
        // or 1 as long as the evidence is possible at all.
        if (evidence_mass(network_, evidence) <= 0.0)
            throw Error(ErrorCode::zero_probability_evidence,
                        "conditioning event has probability zero");
        return *fixed == 0 ? 1.0 : 0.0;
    }
    Factor posterior = query(network_, {id}, evidence);
    return posterior.values()[0];  // index 0 = "true"
}

std::optional<VarId> PelModel::indicator_for(const Formula& formula) const {
    auto it = indicators_.find(formula.to_string());
    if (it == indicators_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Brute-force semantics (the oracle)

namespace {

/// Bottom-up labelling of every world state with the truth of each
/// subformula. Belief operators are evaluated once per accessibility class
/// (the projection of a state onto the agent's observation set), so the whole
/// labelling costs O(#subformulas * #states).
class OracleEvaluator {
public:
    OracleEvaluator(const Network& net, const ObservationSchedule& schedule,
                    std::size_t state_cap)
        : net_(net), schedule_(schedule), joint_(enumerate_joint(net, state_cap)) {
        n_states_ = joint_.probabilities.size();
    }

    const std::vector<char>& labels(const Formula& f) {
        const std::string key = f.to_string();
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        std::vector<char> out(n_states_, 0);
        switch (f.kind()) {
            case Formula::Kind::atom: {
                VarId var = net_.require(f.variable_name());
                int hit = net_.value_index(var, f.value_label());
                for_each_state([&](std::size_t index, const WorldState& s) {
                    out[index] = s[var] == hit;
                });
                break;
            }
            case Formula::Kind::negation: {
                const auto& child = labels(f.child());
                for (std::size_t i = 0; i < n_states_; ++i) out[i] = !child[i];
                break;
            }
            case Formula::Kind::disjunction: {
                const auto& lhs = labels(f.lhs());
                const auto& rhs = labels(f.rhs());
                for (std::size_t i = 0; i < n_states_; ++i) out[i] = lhs[i] || rhs[i];
                break;
            }
            case Formula::Kind::belief: {
                const auto& body = labels(f.body());
                const auto& condition = labels(f.condition());
                const auto& [class_of, class_count] =
                    accessibility_classes(f.agent(), f.stage());

                std::vector<double> condition_mass(class_count, 0.0);
                std::vector<double> both_mass(class_count, 0.0);
                for (std::size_t i = 0; i < n_states_; ++i) {
                    if (!condition[i]) continue;
                    double p = joint_.probabilities[i];
                    condition_mass[class_of[i]] += p;
                    if (body[i]) both_mass[class_of[i]] += p;
                }
                std::vector<char> satisfied(class_count, 0);
                for (std::size_t c = 0; c < class_count; ++c)
                    satisfied[c] = condition_mass[c] != 0.0 &&
                                   both_mass[c] / condition_mass[c] >=
                                       f.threshold() - kThresholdSlack;
                for (std::size_t i = 0; i < n_states_; ++i) out[i] = satisfied[class_of[i]];
                break;
            }
        }
        return cache_.emplace(key, std::move(out)).first->second;
    }

    double probability(const Formula& f, const Evidence& evidence) {
        const auto& sat = labels(f);
        if (evidence.empty()) {
            double total = 0.0;
            for (std::size_t i = 0; i < n_states_; ++i)
                if (sat[i]) total += joint_.probabilities[i];
            return total;
        }
        double numer = 0.0, denom = 0.0;
        for_each_state([&](std::size_t index, const WorldState& s) {
            for (const auto& [v, value] : evidence.assignments())
                if (s[v] != value) return;
            denom += joint_.probabilities[index];
            if (sat[index]) numer += joint_.probabilities[index];
        });
        if (denom <= 0.0)
            throw Error(ErrorCode::zero_probability_evidence,
                        "conditioning event has probability zero");
        return numer / denom;
    }

    bool satisfied_at(const Formula& f, const WorldState& s) {
        return labels(f)[net_.state_index(s)] != 0;
    }

private:
    template <typename Fn>
    void for_each_state(Fn&& fn) {
        WorldState s;
        s.values.assign(net_.num_variables(), 0);
        for (std::size_t index = 0; index < n_states_; ++index) {
            fn(index, s);
            for (std::size_t d = s.values.size(); d-- > 0;) {
                if (++s.values[d] < net_.domain_size(VarId{static_cast<std::int32_t>(d)})) break;
                s.values[d] = 0;
            }
        }
    }

    /// state index -> dense class id for (agent, stage); classes group states
    /// agreeing on the observation set.
    const std::pair<std::vector<std::uint32_t>, std::size_t>& accessibility_classes(
        const std::string& agent, int stage) {
        auto key = std::make_pair(agent, stage);
        auto it = class_cache_.find(key);
        if (it != class_cache_.end()) return it->second;

        const std::set<VarId>& observed = schedule_.observations(agent, stage);
        std::vector<VarId> vars(observed.begin(), observed.end());
        std::size_t classes = 1;
        for (VarId v : vars) classes *= static_cast<std::size_t>(net_.domain_size(v));

        std::vector<std::uint32_t> class_of(n_states_, 0);
        for_each_state([&](std::size_t index, const WorldState& s) {
            std::size_t c = 0;
            for (VarId v : vars)
                c = c * static_cast<std::size_t>(net_.domain_size(v)) +
                    static_cast<std::size_t>(s[v]);
            class_of[index] = static_cast<std::uint32_t>(c);
        });
        return class_cache_
            .emplace(std::move(key), std::make_pair(std::move(class_of), classes))
            .first->second;
    }

    const Network& net_;
    const ObservationSchedule& schedule_;
    JointTable joint_;
    std::size_t n_states_ = 0;
    std::map<std::string, std::vector<char>> cache_;
    std::map<std::pair<std::string, int>, std::pair<std::vector<std::uint32_t>, std::size_t>>
        class_cache_;
};

}  // namespace

bool PelModel::eval_state(const Formula& formula, const WorldState& state) const {
    bind_check(formula);
    OracleEvaluator oracle(network_, schedule_, options_.state_cap);
    return oracle.satisfied_at(formula, state);
}

double PelModel::formula_probability_oracle(const Formula& formula,
                                            const Evidence& evidence) const {
    bind_check(formula);
    OracleEvaluator oracle(network_, schedule_, options_.state_cap);
    return oracle.probability(formula, evidence);
}

// ---------------------------------------------------------------------------

std::pair<VarId, VarId> PelModel::add_observation_uncertainty(
    const std::string& agent, int stage, VarId variable,
    const std::vector<VarId>& observes_parents,
    const std::vector<std::vector<double>>& observes_cpd) {
    const std::string& var_name = network_.variable(variable).name;

    const std::set<VarId>& at_stage = schedule_.observations(agent, stage);
    if (!at_stage.count(variable))
        throw Error(ErrorCode::variable_not_observed,
                    "'" + var_name + "' is not observed by '" + agent + "' at stage " +
                        std::to_string(stage));
    for (int earlier = 1; earlier < stage; ++earlier)
        if (schedule_.observations(agent, earlier).count(variable))
            throw Error(ErrorCode::variable_not_observed,
                        "'" + var_name + "' is already observed by '" + agent +
                            "' at earlier stage " + std::to_string(earlier));

    auto below = network_.descendants(variable);
    std::set<VarId> below_set(below.begin(), below.end());
    for (VarId p : observes_parents)
        if (p == variable || below_set.count(p))
            throw Error(ErrorCode::descendant_parent,
                        "'" + network_.variable(p).name + "' is a descendant of '" + var_name +
                            "'");

    const std::string tag = agent + "_" + std::to_string(stage) + "_" + var_name;
    VarId observes = network_.add_variable("Observes_" + tag, {"true", "false"});
    network_.set_cpd(observes, observes_parents, observes_cpd);

    std::vector<std::string> value_domain = network_.variable(variable).domain;
    value_domain.push_back("unknown");
    VarId observed_value = network_.add_variable("ObservedValue_" + tag, value_domain);
    const int var_size = network_.domain_size(variable);
    std::vector<std::vector<double>> copy_table;
    // Parent order (variable, observes): copy the variable when observed,
    // emit "unknown" otherwise.
    for (int value = 0; value < var_size; ++value) {
        for (int seen = 0; seen < 2; ++seen) {
            std::vector<double> row(static_cast<std::size_t>(var_size) + 1, 0.0);
            if (seen == 0)
                row[static_cast<std::size_t>(value)] = 1.0;
            else
                row.back() = 1.0;
            copy_table.push_back(std::move(row));
        }
    }
    network_.set_cpd(observed_value, {variable, observes}, copy_table);

    // The agent now observes the pair instead of the variable itself, from
    // this stage on (perfect recall keeps later stages superset-consistent).
    for (int s = stage; s <= schedule_.stage_count(agent); ++s) {
        auto& obs = schedule_.observations_mutable(agent, s);
        if (obs.erase(variable)) {
            obs.insert(observes);
            obs.insert(observed_value);
        }
    }
    return {observes, observed_value};
}

std::vector<Diagnostic> PelModel::validate() const {
    std::vector<Diagnostic> diags = network_.validate();
    for (const auto& [agent, stages] : schedule_.agents()) {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            for (VarId v : stages[i]) {
                if (!v.valid() || static_cast<std::size_t>(v.value) >= network_.num_variables())
                    diags.push_back({Diagnostic::Severity::error, "unknown-variable",
                                     "agent '" + agent + "' stage " + std::to_string(i + 1) +
                                         " references unknown variable id " +
                                         std::to_string(v.value)});
            }
        }
        for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
            for (VarId v : stages[i]) {
                if (!v.valid() || static_cast<std::size_t>(v.value) >= network_.num_variables())
                    continue;
                for (std::size_t j = i + 1; j < stages.size(); ++j) {
                    if (!stages[j].count(v))
                        diags.push_back(
                            {Diagnostic::Severity::error, "perfect-recall",
                             "agent '" + agent + "' observes '" + network_.variable(v).name +
                                 "' at stage " + std::to_string(i + 1) + " but not at stage " +
                                 std::to_string(j + 1)});
                }
            }
        }
    }
    return diags;
}

std::vector<std::pair<std::string, std::vector<std::string>>> PelModel::explain(
    const Formula& formula) {
    create_node(formula);

    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    std::set<std::string> seen;
    // Outermost-first walk over belief subformulas.
    auto walk = [&](auto&& self, const Formula& f) -> void {
        switch (f.kind()) {
            case Formula::Kind::atom:
                return;
            case Formula::Kind::negation:
                self(self, f.child());
                return;
            case Formula::Kind::disjunction:
                self(self, f.lhs());
                self(self, f.rhs());
                return;
            case Formula::Kind::belief: {
                const std::string key = f.to_string();
                if (seen.insert(key).second) {
                    VarId body_id = *indicator_for(f.body());
                    VarId condition_id = *indicator_for(f.condition());
                    std::vector<std::string> names;
                    for (VarId v : belief_parent_set(f, body_id, condition_id))
                        names.push_back(network_.variable(v).name);
                    out.emplace_back(key, std::move(names));
                }
                self(self, f.body());
                self(self, f.condition());
                return;
            }
        }
    };
    walk(walk, formula);
    return out;
}

std::vector<Diagnostic> validate_model(const PelModel& model) { return model.validate(); }

}  // namespace pel
