#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "pel/factor.hpp"
#include "pel/network.hpp"
#include "pel/types.hpp"

namespace pel {

/// Partial assignment variable -> value index. At most one value per
/// variable; re-setting the same value is a no-op, a different value throws.
class Evidence {
public:
    void set(VarId v, int value);
    void merge(const Evidence& other);

    bool contains(VarId v) const { return values_.count(v) != 0; }
    std::optional<int> value(VarId v) const;
    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    const std::map<VarId, int>& assignments() const { return values_; }

private:
    std::map<VarId, int> values_;
};

/// Explicit joint distribution, one probability per WorldState. Exponential
/// in the variable count; this is the test oracle, not the inference path.
struct JointTable {
    std::vector<double> probabilities;  // indexed by Network::state_index

    double at(const Network& net, const WorldState& s) const {
        return probabilities[net.state_index(s)];
    }
};

inline constexpr std::size_t kDefaultStateCap = std::size_t(1) << 20;

/// Full joint by direct CPD multiplication. Throws state-space-too-large
/// beyond `state_cap` states.
JointTable enumerate_joint(const Network& net, std::size_t state_cap = kDefaultStateCap);

/// Normalized posterior over `targets` given `evidence`, by variable
/// elimination with the min-fill heuristic (ties broken by insertion order).
/// Throws zero-probability-evidence when Pr(evidence) = 0.
Factor query(const Network& net, const std::set<VarId>& targets, const Evidence& evidence);

/// Pr(evidence) as a plain mass, eliminating every variable.
double evidence_mass(const Network& net, const Evidence& evidence);

/// Pr(event | given); std::nullopt when Pr(given) = 0. Overlapping variables
/// are tolerated: an overlap that agrees is redundant, one that conflicts
/// makes the event impossible (probability 0).
std::optional<double> probability_of(const Network& net, const Evidence& event,
                                     const Evidence& given);

/// Bayes-ball d-separation: true iff no active path connects `from` to `to`
/// given `given`. Query nodes that are themselves conditioned on are screened
/// off and count as separated.
bool d_separated(const Network& net, const std::set<VarId>& from, const std::set<VarId>& to,
                 const std::set<VarId>& given);

/// Requisite observations for querying `target` given
/// `observations` ∪ `conditioning`: the minimal Rel ⊆ observations such that
/// observations − Rel is d-separated from target given Rel ∪ conditioning.
std::set<VarId> relevant_observations(const Network& net, const std::set<VarId>& observations,
                                      VarId target, const std::set<VarId>& conditioning);

}  // namespace pel
