#include "pel/inference.hpp"

#include <algorithm>
#include <deque>

namespace pel {

void Evidence::set(VarId v, int value) {
    auto [it, inserted] = values_.emplace(v, value);
    if (!inserted && it->second != value)
        throw Error(ErrorCode::conflicting_evidence,
                    "variable id " + std::to_string(v.value) + " assigned both " +
                        std::to_string(it->second) + " and " + std::to_string(value));
}

void Evidence::merge(const Evidence& other) {
    for (const auto& [v, value] : other.values_) set(v, value);
}

std::optional<int> Evidence::value(VarId v) const {
    auto it = values_.find(v);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

JointTable enumerate_joint(const Network& net, std::size_t state_cap) {
    if (auto diags = net.validate(); has_errors(diags))
        throw Error(ErrorCode::validation_failed, diags.front().message);
    double count = net.state_count();
    if (count > static_cast<double>(state_cap))
        throw Error(ErrorCode::state_space_too_large,
                    "joint has " + std::to_string(count) + " states, cap is " +
                        std::to_string(state_cap));

    const std::size_t n_states = static_cast<std::size_t>(count);
    JointTable joint;
    joint.probabilities.assign(n_states, 0.0);
    WorldState s;
    s.values.assign(net.num_variables(), 0);
    for (std::size_t index = 0; index < n_states; ++index) {
        double p = 1.0;
        for (const auto& var : net.variables()) {
            const Cpd& cpd = net.cpd(var.id);
            std::vector<int> parent_values;
            parent_values.reserve(cpd.parents.size());
            for (VarId parent : cpd.parents) parent_values.push_back(s[parent]);
            std::size_t row = parent_row_index(net, cpd.parents, parent_values);
            p *= cpd.table[row][static_cast<std::size_t>(s[var.id])];
        }
        joint.probabilities[net.state_index(s)] = p;
        // Odometer over values in id order, last variable fastest.
        for (std::size_t d = s.values.size(); d-- > 0;) {
            if (++s.values[d] < net.domain_size(VarId{static_cast<std::int32_t>(d)})) break;
            s.values[d] = 0;
        }
    }
    return joint;
}

namespace {

void check_evidence(const Network& net, const Evidence& evidence) {
    for (const auto& [v, value] : evidence.assignments()) {
        if (value < 0 || value >= net.domain_size(v))
            throw Error(ErrorCode::index_out_of_range,
                        "evidence value " + std::to_string(value) + " out of range for '" +
                            net.variable(v).name + "'");
    }
}

/// Min-fill elimination of every variable not in `keep`, applied after
/// reducing all factors by the evidence. Returns the surviving factors.
std::vector<Factor> eliminate_all_but(const Network& net, const std::set<VarId>& keep,
                                      const Evidence& evidence) {
    std::vector<Factor> factors;
    factors.reserve(net.num_variables());
    for (const auto& var : net.variables()) {
        Factor f = Factor::from_cpd(net, var.id);
        for (VarId v : std::vector<VarId>(f.scope()))
            if (auto value = evidence.value(v)) f = f.reduce(v, *value);
        factors.push_back(std::move(f));
    }

    std::set<VarId> to_eliminate;
    for (const auto& var : net.variables())
        if (!keep.count(var.id) && !evidence.contains(var.id)) to_eliminate.insert(var.id);

    // Interaction graph over the variables still to eliminate plus kept ones.
    std::map<VarId, std::set<VarId>> adjacent;
    for (const Factor& f : factors)
        for (VarId a : f.scope())
            for (VarId b : f.scope())
                if (a != b) adjacent[a].insert(b);

    while (!to_eliminate.empty()) {
        VarId best{};
        std::size_t best_fill = 0;
        bool first = true;
        for (VarId v : to_eliminate) {
            const auto& nbrs = adjacent[v];
            std::size_t fill = 0;
            for (auto it = nbrs.begin(); it != nbrs.end(); ++it)
                for (auto jt = std::next(it); jt != nbrs.end(); ++jt)
                    if (!adjacent[*it].count(*jt)) ++fill;
            if (first || fill < best_fill) {  // ties keep the smallest id
                best = v;
                best_fill = fill;
                first = false;
            }
        }

        Factor combined = Factor::constant(1.0);
        std::vector<Factor> rest;
        rest.reserve(factors.size());
        for (Factor& f : factors) {
            if (f.has(best))
                combined = combined.product(f);
            else
                rest.push_back(std::move(f));
        }
        rest.push_back(combined.sum_out(best));
        factors = std::move(rest);

        // Connect former neighbors, then drop the eliminated variable.
        auto nbrs = adjacent[best];
        nbrs.erase(best);
        for (VarId a : nbrs) {
            adjacent[a].erase(best);
            for (VarId b : nbrs)
                if (a != b) adjacent[a].insert(b);
        }
        adjacent.erase(best);
        to_eliminate.erase(best);
    }
    return factors;
}

}  // namespace

Factor query(const Network& net, const std::set<VarId>& targets, const Evidence& evidence) {
    check_evidence(net, evidence);
    for (VarId t : targets) {
        net.variable(t);
        if (evidence.contains(t))
            throw Error(ErrorCode::conflicting_evidence,
                        "target '" + net.variable(t).name + "' is also evidence");
    }
    std::vector<Factor> factors = eliminate_all_but(net, targets, evidence);
    Factor result = Factor::constant(1.0);
    for (const Factor& f : factors) result = result.product(f);
    return result.normalized();
}

double evidence_mass(const Network& net, const Evidence& evidence) {
    check_evidence(net, evidence);
    std::vector<Factor> factors = eliminate_all_but(net, {}, evidence);
    double mass = 1.0;
    for (const Factor& f : factors) mass *= f.total();
    return mass;
}

std::optional<double> probability_of(const Network& net, const Evidence& event,
                                     const Evidence& given) {
    double given_mass = evidence_mass(net, given);
    if (given_mass <= 0.0) return std::nullopt;

    Evidence merged = given;
    for (const auto& [v, value] : event.assignments()) {
        if (auto existing = merged.value(v)) {
            if (*existing != value) return 0.0;  // conflicting overlap: impossible event
        } else {
            merged.set(v, value);
        }
    }
    return evidence_mass(net, merged) / given_mass;
}

namespace {

/// Bayes-ball traversal. The visited set intersected with the evidence nodes
/// is the requisite-observation set; a query node outside the evidence is
/// d-connected iff it was visited.
struct BallResult {
    std::set<VarId> visited;
};

BallResult bayes_ball(const Network& net, const std::set<VarId>& start,
                      const std::set<VarId>& observed) {
    // Visits are (node, came-from-child?) pairs; each kind happens at most once.
    std::vector<char> visited(net.num_variables(), 0);
    std::vector<char> top(net.num_variables(), 0);     // passed to parents
    std::vector<char> bottom(net.num_variables(), 0);  // passed to children
    std::deque<std::pair<VarId, bool>> queue;          // bool: from child
    for (VarId s : start) queue.emplace_back(s, true);

    BallResult result;
    while (!queue.empty()) {
        auto [node, from_child] = queue.front();
        queue.pop_front();
        auto idx = static_cast<std::size_t>(node.value);
        visited[idx] = 1;
        result.visited.insert(node);

        bool is_observed = observed.count(node) != 0;
        if (from_child) {
            if (is_observed) continue;  // ball blocked going up into evidence
            if (!top[idx]) {
                top[idx] = 1;
                for (VarId p : net.parents(node)) queue.emplace_back(p, true);
            }
            if (!bottom[idx]) {
                bottom[idx] = 1;
                for (VarId c : net.children(node)) queue.emplace_back(c, false);
            }
        } else {
            if (is_observed) {
                // Evidence reflects balls from parents back up (collider rule).
                if (!top[idx]) {
                    top[idx] = 1;
                    for (VarId p : net.parents(node)) queue.emplace_back(p, true);
                }
            } else {
                if (!bottom[idx]) {
                    bottom[idx] = 1;
                    for (VarId c : net.children(node)) queue.emplace_back(c, false);
                }
            }
        }
    }
    return result;
}

}  // namespace

bool d_separated(const Network& net, const std::set<VarId>& from, const std::set<VarId>& to,
                 const std::set<VarId>& given) {
    for (VarId v : from) net.variable(v);
    for (VarId v : to) net.variable(v);
    for (VarId v : given) net.variable(v);

    BallResult ball = bayes_ball(net, from, given);
    for (VarId t : to)
        if (!given.count(t) && ball.visited.count(t)) return false;
    return true;
}

std::set<VarId> relevant_observations(const Network& net, const std::set<VarId>& observations,
                                      VarId target, const std::set<VarId>& conditioning) {
    net.variable(target);
    for (VarId v : observations) net.variable(v);
    for (VarId v : conditioning) net.variable(v);

    std::set<VarId> observed = observations;
    observed.insert(conditioning.begin(), conditioning.end());

    BallResult ball = bayes_ball(net, {target}, observed);
    std::set<VarId> relevant;
    for (VarId o : observations)
        if (ball.visited.count(o)) relevant.insert(o);
    return relevant;
}

}  // namespace pel
