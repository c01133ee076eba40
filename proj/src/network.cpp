#include "pel/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace pel {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::duplicate_name: return "duplicate-name";
        case ErrorCode::empty_domain: return "empty-domain";
        case ErrorCode::duplicate_label: return "duplicate-label";
        case ErrorCode::unknown_variable: return "unknown-variable";
        case ErrorCode::cycle_detected: return "cycle-detected";
        case ErrorCode::row_count_mismatch: return "row-count-mismatch";
        case ErrorCode::row_not_normalized: return "row-not-normalized";
        case ErrorCode::negative_entry: return "negative-entry";
        case ErrorCode::length_mismatch: return "length-mismatch";
        case ErrorCode::index_out_of_range: return "index-out-of-range";
        case ErrorCode::state_space_too_large: return "state-space-too-large";
        case ErrorCode::zero_probability_evidence: return "zero-probability-evidence";
        case ErrorCode::conflicting_evidence: return "conflicting-evidence";
        case ErrorCode::syntax_error: return "syntax-error";
        case ErrorCode::bind_error: return "bind-error";
        case ErrorCode::unknown_agent: return "unknown-agent";
        case ErrorCode::stage_out_of_range: return "stage-out-of-range";
        case ErrorCode::threshold_out_of_range: return "threshold-out-of-range";
        case ErrorCode::inference_infeasible: return "inference-infeasible";
        case ErrorCode::inconsistent_assertion: return "inconsistent-assertion";
        case ErrorCode::descendant_parent: return "descendant-parent";
        case ErrorCode::variable_not_observed: return "variable-not-observed";
        case ErrorCode::unknown_utility: return "unknown-utility";
        case ErrorCode::name_clash: return "name-clash";
        case ErrorCode::incomplete_policy: return "incomplete-policy";
        case ErrorCode::infeasible_size: return "infeasible-size";
        case ErrorCode::validation_failed: return "validation-failed";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::schema_error: return "schema-error";
    }
    return "unknown-error";
}

VarId Network::add_variable(const std::string& name, const std::vector<std::string>& domain) {
    if (by_name_.count(name))
        throw Error(ErrorCode::duplicate_name, "variable '" + name + "' already exists");
    if (domain.empty())
        throw Error(ErrorCode::empty_domain, "variable '" + name + "' has an empty domain");
    std::set<std::string> seen;
    for (const auto& label : domain)
        if (!seen.insert(label).second)
            throw Error(ErrorCode::duplicate_label,
                        "variable '" + name + "' repeats label '" + label + "'");

    VarId id{static_cast<std::int32_t>(variables_.size())};
    variables_.push_back(Variable{id, name, domain});
    by_name_.emplace(name, id);
    cpds_.emplace_back(std::nullopt);
    children_.emplace_back();
    return id;
}

void Network::check_var(VarId v) const {
    if (!v.valid() || static_cast<std::size_t>(v.value) >= variables_.size())
        throw Error(ErrorCode::unknown_variable, "variable id " + std::to_string(v.value));
}

bool Network::introduces_cycle(VarId child, const std::vector<VarId>& parents) const {
    // DFS from child along existing child edges, pretending the new CPD's
    // edges are in place; a path back to any proposed parent is a cycle.
    std::set<VarId> targets(parents.begin(), parents.end());
    if (targets.count(child)) return true;
    std::vector<VarId> stack{child};
    std::set<VarId> seen{child};
    while (!stack.empty()) {
        VarId cur = stack.back();
        stack.pop_back();
        for (VarId c : children_[static_cast<std::size_t>(cur.value)]) {
            // Ignore edges into `child` from the CPD being replaced; they are
            // rewritten by this call.
            if (c == child) continue;
            if (targets.count(c)) return true;
            if (seen.insert(c).second) stack.push_back(c);
        }
    }
    return false;
}

void Network::set_cpd(VarId child, const std::vector<VarId>& parents,
                      const std::vector<std::vector<double>>& table) {
    check_var(child);
    for (VarId p : parents) check_var(p);

    std::size_t expected_rows = 1;
    for (VarId p : parents) expected_rows *= static_cast<std::size_t>(domain_size(p));
    if (table.size() != expected_rows)
        throw Error(ErrorCode::row_count_mismatch,
                    "cpd for '" + variable(child).name + "' has " + std::to_string(table.size()) +
                        " rows, expected " + std::to_string(expected_rows));

    const std::size_t width = static_cast<std::size_t>(domain_size(child));
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() != width)
            throw Error(ErrorCode::row_count_mismatch,
                        "cpd row " + std::to_string(r) + " for '" + variable(child).name +
                            "' has " + std::to_string(row.size()) + " entries, expected " +
                            std::to_string(width));
        double sum = 0.0;
        for (double x : row) {
            if (x < 0.0 || x > 1.0)
                throw Error(ErrorCode::negative_entry, "cpd entry " + std::to_string(x) +
                                                           " for '" + variable(child).name +
                                                           "' outside [0,1]");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw Error(ErrorCode::row_not_normalized,
                        "cpd row " + std::to_string(r) + " for '" + variable(child).name +
                            "' sums to " + std::to_string(sum));
    }

    if (introduces_cycle(child, parents))
        throw Error(ErrorCode::cycle_detected,
                    "cpd for '" + variable(child).name + "' would create a cycle");

    // Drop edges of any replaced CPD before wiring the new parents.
    auto idx = static_cast<std::size_t>(child.value);
    if (cpds_[idx]) {
        for (VarId p : cpds_[idx]->parents) {
            auto& kids = children_[static_cast<std::size_t>(p.value)];
            kids.erase(std::remove(kids.begin(), kids.end(), child), kids.end());
        }
    }
    cpds_[idx] = Cpd{child, parents, table};
    for (VarId p : parents) children_[static_cast<std::size_t>(p.value)].push_back(child);
}

std::vector<Diagnostic> Network::validate() const {
    std::vector<Diagnostic> diags;
    for (const auto& var : variables_) {
        if (!cpds_[static_cast<std::size_t>(var.id.value)])
            diags.push_back({Diagnostic::Severity::error, "missing-cpd",
                             "variable '" + var.name + "' has no CPD"});
    }
    // Kahn's algorithm over the CPD edge set; leftovers indicate a cycle.
    std::vector<int> pending(variables_.size(), 0);
    for (const auto& maybe : cpds_)
        if (maybe) pending[static_cast<std::size_t>(maybe->child.value)] =
            static_cast<int>(maybe->parents.size());
    std::deque<VarId> ready;
    for (const auto& var : variables_)
        if (pending[static_cast<std::size_t>(var.id.value)] == 0) ready.push_back(var.id);
    std::size_t emitted = 0;
    while (!ready.empty()) {
        VarId v = ready.front();
        ready.pop_front();
        ++emitted;
        for (VarId c : children_[static_cast<std::size_t>(v.value)])
            if (--pending[static_cast<std::size_t>(c.value)] == 0) ready.push_back(c);
    }
    if (emitted != variables_.size())
        diags.push_back({Diagnostic::Severity::error, "cycle", "network graph contains a cycle"});
    return diags;
}

std::vector<VarId> Network::topological_order() const {
    std::vector<int> pending(variables_.size(), 0);
    for (const auto& maybe : cpds_)
        if (maybe) pending[static_cast<std::size_t>(maybe->child.value)] =
            static_cast<int>(maybe->parents.size());
    // Ordered set keyed by id gives the stable insertion-order tie-break.
    std::set<VarId> ready;
    for (const auto& var : variables_)
        if (pending[static_cast<std::size_t>(var.id.value)] == 0) ready.insert(var.id);
    std::vector<VarId> order;
    order.reserve(variables_.size());
    while (!ready.empty()) {
        VarId v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (VarId c : children_[static_cast<std::size_t>(v.value)])
            if (--pending[static_cast<std::size_t>(c.value)] == 0) ready.insert(c);
    }
    if (order.size() != variables_.size())
        throw Error(ErrorCode::cycle_detected, "network graph contains a cycle");
    return order;
}

const Variable& Network::variable(VarId v) const {
    check_var(v);
    return variables_[static_cast<std::size_t>(v.value)];
}

std::optional<VarId> Network::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

VarId Network::require(const std::string& name) const {
    auto found = find(name);
    if (!found) throw Error(ErrorCode::unknown_variable, "no variable named '" + name + "'");
    return *found;
}

int Network::value_index(VarId v, const std::string& label) const {
    const auto& dom = variable(v).domain;
    auto it = std::find(dom.begin(), dom.end(), label);
    if (it == dom.end())
        throw Error(ErrorCode::index_out_of_range,
                    "'" + label + "' is not in the domain of '" + variable(v).name + "'");
    return static_cast<int>(it - dom.begin());
}

bool Network::has_cpd(VarId v) const {
    check_var(v);
    return cpds_[static_cast<std::size_t>(v.value)].has_value();
}

const Cpd& Network::cpd(VarId v) const {
    check_var(v);
    const auto& maybe = cpds_[static_cast<std::size_t>(v.value)];
    if (!maybe)
        throw Error(ErrorCode::validation_failed, "variable '" + variable(v).name + "' has no CPD");
    return *maybe;
}

const std::vector<VarId>& Network::parents(VarId v) const { return cpd(v).parents; }

const std::vector<VarId>& Network::children(VarId v) const {
    check_var(v);
    return children_[static_cast<std::size_t>(v.value)];
}

std::vector<VarId> Network::descendants(VarId v) const {
    check_var(v);
    std::set<VarId> seen;
    std::vector<VarId> stack{v};
    while (!stack.empty()) {
        VarId cur = stack.back();
        stack.pop_back();
        for (VarId c : children_[static_cast<std::size_t>(cur.value)])
            if (seen.insert(c).second) stack.push_back(c);
    }
    return {seen.begin(), seen.end()};
}

double Network::state_count() const {
    double count = 1.0;
    for (const auto& var : variables_) count *= static_cast<double>(var.domain.size());
    return count;
}

std::size_t Network::state_index(const WorldState& s) const {
    if (s.values.size() != variables_.size())
        throw Error(ErrorCode::length_mismatch, "world state has " +
                                                    std::to_string(s.values.size()) +
                                                    " values, expected " +
                                                    std::to_string(variables_.size()));
    std::size_t index = 0;
    for (const auto& var : variables_) {
        int value = s.values[static_cast<std::size_t>(var.id.value)];
        int size = static_cast<int>(var.domain.size());
        if (value < 0 || value >= size)
            throw Error(ErrorCode::index_out_of_range,
                        "value " + std::to_string(value) + " out of range for '" + var.name + "'");
        index = index * static_cast<std::size_t>(size) + static_cast<std::size_t>(value);
    }
    return index;
}

WorldState Network::state_from_index(std::size_t index) const {
    WorldState s;
    s.values.resize(variables_.size());
    for (std::size_t i = variables_.size(); i-- > 0;) {
        auto size = variables_[i].domain.size();
        s.values[i] = static_cast<int>(index % size);
        index /= size;
    }
    return s;
}

std::size_t parent_row_index(std::span<const int> sizes, std::span<const int> values) {
    if (sizes.size() != values.size())
        throw Error(ErrorCode::length_mismatch,
                    "instantiation has " + std::to_string(values.size()) + " values for " +
                        std::to_string(sizes.size()) + " parents");
    std::size_t index = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (values[i] < 0 || values[i] >= sizes[i])
            throw Error(ErrorCode::index_out_of_range,
                        "value index " + std::to_string(values[i]) + " out of range at position " +
                            std::to_string(i));
        index = index * static_cast<std::size_t>(sizes[i]) + static_cast<std::size_t>(values[i]);
    }
    return index;
}

std::size_t parent_row_index(const Network& net, std::span<const VarId> parents,
                             std::span<const int> values) {
    std::vector<int> sizes;
    sizes.reserve(parents.size());
    for (VarId p : parents) sizes.push_back(net.domain_size(p));
    return parent_row_index(sizes, values);
}

std::vector<int> parent_row_instantiation(std::span<const int> sizes, std::size_t row) {
    std::vector<int> values(sizes.size());
    for (std::size_t i = sizes.size(); i-- > 0;) {
        values[i] = static_cast<int>(row % static_cast<std::size_t>(sizes[i]));
        row /= static_cast<std::size_t>(sizes[i]);
    }
    return values;
}

}  // namespace pel
