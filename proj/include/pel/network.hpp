#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pel/types.hpp"

namespace pel {

/// Finite-domain variable. Domain labels are strings; values are handled
/// internally as dense indices into the domain list.
struct Variable {
    VarId id;
    std::string name;
    std::vector<std::string> domain;
};

/// Tabular conditional distribution: one row per parent instantiation,
/// each row a distribution over the child's domain. Rows are indexed
/// mixed-radix with the FIRST parent most significant.
struct Cpd {
    VarId child;
    std::vector<VarId> parents;
    std::vector<std::vector<double>> table;
};

/// Total assignment of one value index per network variable, indexed by
/// VarId position.
struct WorldState {
    std::vector<int> values;

    int operator[](VarId v) const { return values[static_cast<std::size_t>(v.value)]; }
};

/// Tolerance for CPD row normalization checks. Rows are never silently
/// renormalized; out-of-tolerance rows are rejected.
inline constexpr double kRowSumTolerance = 1e-9;

/// Directed acyclic network of finite-domain variables with tabular CPDs.
/// Construction is single-writer; once validate() returns clean the object
/// is meant to be treated as immutable and is then safe for concurrent reads.
class Network {
public:
    VarId add_variable(const std::string& name, const std::vector<std::string>& domain);

    /// Stores (or replaces) the CPD for `child`. Rejects tables that are the
    /// wrong shape, rows off normalization, negative entries, and parent sets
    /// that would introduce a directed cycle.
    void set_cpd(VarId child, const std::vector<VarId>& parents,
                 const std::vector<std::vector<double>>& table);

    /// Empty iff every variable has a well-formed CPD and the graph is acyclic.
    std::vector<Diagnostic> validate() const;

    /// Parents before children; insertion order breaks ties.
    std::vector<VarId> topological_order() const;

    std::size_t num_variables() const { return variables_.size(); }
    /// References stay valid across add_variable/set_cpd.
    const Variable& variable(VarId v) const;
    const std::deque<Variable>& variables() const { return variables_; }
    std::optional<VarId> find(const std::string& name) const;
    /// Like find() but throws unknown-variable.
    VarId require(const std::string& name) const;

    int domain_size(VarId v) const { return static_cast<int>(variable(v).domain.size()); }
    /// Index of `label` in v's domain, or throws.
    int value_index(VarId v, const std::string& label) const;

    bool has_cpd(VarId v) const;
    const Cpd& cpd(VarId v) const;
    const std::vector<VarId>& parents(VarId v) const;
    const std::vector<VarId>& children(VarId v) const;

    /// All descendants of v (not including v itself).
    std::vector<VarId> descendants(VarId v) const;

    /// Total joint state count as a double (may exceed integer range).
    double state_count() const;

    /// Mixed-radix state index over all variables in id order, first variable
    /// most significant.
    std::size_t state_index(const WorldState& s) const;
    WorldState state_from_index(std::size_t index) const;

private:
    void check_var(VarId v) const;
    bool introduces_cycle(VarId child, const std::vector<VarId>& parents) const;

    std::deque<Variable> variables_;
    std::map<std::string, VarId> by_name_;
    std::deque<std::optional<Cpd>> cpds_;
    std::deque<std::vector<VarId>> children_;
};

/// Mixed-radix row index for a parent instantiation, first parent most
/// significant. Bijective over instantiations; the empty instantiation
/// maps to row 0.
std::size_t parent_row_index(const Network& net, std::span<const VarId> parents,
                             std::span<const int> values);
std::size_t parent_row_index(std::span<const int> sizes, std::span<const int> values);

/// Inverse of parent_row_index.
std::vector<int> parent_row_instantiation(std::span<const int> sizes, std::size_t row);

}  // namespace pel
