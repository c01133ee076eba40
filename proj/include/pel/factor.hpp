#pragma once

#include <vector>

#include "pel/network.hpp"
#include "pel/types.hpp"

namespace pel {

/// Dense table over an ordered variable scope, indexed mixed-radix with the
/// first scope variable most significant (the CPD row convention). Scopes are
/// kept sorted by VarId so identical scopes always share one layout.
///
/// Probability factors are nonnegative; the decision solver also runs signed
/// utility tables through the same machinery, so negativity is only enforced
/// where factors are built from CPDs.
class Factor {
public:
    Factor() = default;
    Factor(std::vector<VarId> scope, std::vector<int> sizes, std::vector<double> values);

    /// Scalar factor with a single cell.
    static Factor constant(double value);

    /// The CPD of `child` as a factor over {parents} ∪ {child}.
    static Factor from_cpd(const Network& net, VarId child);

    const std::vector<VarId>& scope() const { return scope_; }
    const std::vector<int>& sizes() const { return sizes_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    bool has(VarId v) const;

    Factor product(const Factor& other) const;
    /// Sums the variable out of the scope.
    Factor sum_out(VarId v) const;
    /// Fixes v = value and drops it from the scope.
    Factor reduce(VarId v, int value) const;
    double total() const;
    /// Divides by total(); throws zero-probability-evidence when the mass is 0.
    Factor normalized() const;

    /// Cell index for a full scope instantiation.
    std::size_t index_of(std::span<const int> values) const;
    double at(std::span<const int> values) const { return values_[index_of(values)]; }

private:
    std::vector<VarId> scope_;   // strictly increasing
    std::vector<int> sizes_;     // parallel to scope_
    std::vector<double> values_; // length = product of sizes_
};

}  // namespace pel
