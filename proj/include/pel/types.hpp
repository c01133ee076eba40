#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pel {

/// Dense handle for a network variable. Ids are assigned in insertion order
/// and index directly into the network's variable storage.
struct VarId {
    std::int32_t value = -1;

    constexpr bool valid() const noexcept { return value >= 0; }
    friend constexpr auto operator<=>(VarId, VarId) = default;
};

enum class ErrorCode {
    duplicate_name,
    empty_domain,
    duplicate_label,
    unknown_variable,
    cycle_detected,
    row_count_mismatch,
    row_not_normalized,
    negative_entry,
    length_mismatch,
    index_out_of_range,
    state_space_too_large,
    zero_probability_evidence,
    conflicting_evidence,
    syntax_error,
    bind_error,
    unknown_agent,
    stage_out_of_range,
    threshold_out_of_range,
    inference_infeasible,
    inconsistent_assertion,
    descendant_parent,
    variable_not_observed,
    unknown_utility,
    name_clash,
    incomplete_policy,
    infeasible_size,
    validation_failed,
    io_error,
    parse_error,
    schema_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the whole library; the code tells callers what
/// went wrong without a taxonomy of exception classes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Validation result entry. Warnings do not block solving; errors do.
struct Diagnostic {
    enum class Severity { error, warning };

    Severity severity = Severity::error;
    std::string code;     // short slug, e.g. "missing-cpd"
    std::string message;  // human-readable, names the offending entity
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::error) return true;
    return false;
}

}  // namespace pel
