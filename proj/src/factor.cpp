#include "pel/factor.hpp"

#include <algorithm>

namespace pel {

namespace {

std::size_t table_size(const std::vector<int>& sizes) {
    std::size_t n = 1;
    for (int s : sizes) n *= static_cast<std::size_t>(s);
    return n;
}

}  // namespace

Factor::Factor(std::vector<VarId> scope, std::vector<int> sizes, std::vector<double> values)
    : scope_(std::move(scope)), sizes_(std::move(sizes)), values_(std::move(values)) {
    if (!std::is_sorted(scope_.begin(), scope_.end()) ||
        std::adjacent_find(scope_.begin(), scope_.end()) != scope_.end())
        throw Error(ErrorCode::validation_failed, "factor scope must be strictly increasing");
    if (scope_.size() != sizes_.size() || values_.size() != table_size(sizes_))
        throw Error(ErrorCode::length_mismatch, "factor table does not match its scope");
}

Factor Factor::constant(double value) { return Factor({}, {}, {value}); }

Factor Factor::from_cpd(const Network& net, VarId child) {
    const Cpd& cpd = net.cpd(child);

    std::vector<VarId> scope = cpd.parents;
    scope.push_back(child);
    std::vector<VarId> sorted = scope;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::validation_failed,
                    "cpd for '" + net.variable(child).name + "' repeats a parent");

    std::vector<int> sizes;
    sizes.reserve(sorted.size());
    for (VarId v : sorted) sizes.push_back(net.domain_size(v));

    // Walk the CPD in its natural (parents..., child) order and scatter into
    // the sorted layout.
    std::vector<int> cpd_sizes;
    for (VarId v : scope) cpd_sizes.push_back(net.domain_size(v));
    std::vector<std::size_t> strides(sorted.size());
    {
        std::size_t stride = 1;
        std::vector<std::size_t> by_position(sorted.size());
        for (std::size_t i = sorted.size(); i-- > 0;) {
            by_position[i] = stride;
            stride *= static_cast<std::size_t>(sizes[i]);
        }
        for (std::size_t i = 0; i < scope.size(); ++i) {
            auto pos = static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), scope[i]) - sorted.begin());
            strides[i] = by_position[pos];
        }
    }

    std::vector<double> values(table_size(sizes), 0.0);
    const int child_size = net.domain_size(child);
    std::size_t rows = cpd.table.size();
    for (std::size_t row = 0; row < rows; ++row) {
        auto parent_values = parent_row_instantiation(
            std::span<const int>(cpd_sizes.data(), cpd_sizes.size() - 1), row);
        std::size_t base = 0;
        for (std::size_t i = 0; i < parent_values.size(); ++i)
            base += strides[i] * static_cast<std::size_t>(parent_values[i]);
        for (int v = 0; v < child_size; ++v)
            values[base + strides[scope.size() - 1] * static_cast<std::size_t>(v)] =
                cpd.table[row][static_cast<std::size_t>(v)];
    }
    return Factor(std::move(sorted), std::move(sizes), std::move(values));
}

bool Factor::has(VarId v) const {
    return std::binary_search(scope_.begin(), scope_.end(), v);
}

Factor Factor::product(const Factor& other) const {
    std::vector<VarId> scope;
    std::set_union(scope_.begin(), scope_.end(), other.scope_.begin(), other.scope_.end(),
                   std::back_inserter(scope));
    std::vector<int> sizes(scope.size());
    for (std::size_t i = 0; i < scope.size(); ++i) {
        auto it = std::lower_bound(scope_.begin(), scope_.end(), scope[i]);
        if (it != scope_.end() && *it == scope[i])
            sizes[i] = sizes_[static_cast<std::size_t>(it - scope_.begin())];
        else {
            auto jt = std::lower_bound(other.scope_.begin(), other.scope_.end(), scope[i]);
            sizes[i] = other.sizes_[static_cast<std::size_t>(jt - other.scope_.begin())];
        }
    }

    // Per-result-variable strides into each operand (0 when absent).
    auto operand_strides = [&](const Factor& f) {
        std::vector<std::size_t> strides(scope.size(), 0);
        std::size_t stride = 1;
        for (std::size_t i = f.scope_.size(); i-- > 0;) {
            auto pos = static_cast<std::size_t>(
                std::lower_bound(scope.begin(), scope.end(), f.scope_[i]) - scope.begin());
            strides[pos] = stride;
            stride *= static_cast<std::size_t>(f.sizes_[i]);
        }
        return strides;
    };
    std::vector<std::size_t> sa = operand_strides(*this);
    std::vector<std::size_t> sb = operand_strides(other);

    std::vector<double> values(table_size(sizes));
    std::vector<int> digits(scope.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t out = 0; out < values.size(); ++out) {
        values[out] = values_[ia] * other.values_[ib];
        // Odometer increment, least significant digit last.
        for (std::size_t d = scope.size(); d-- > 0;) {
            ++digits[d];
            ia += sa[d];
            ib += sb[d];
            if (digits[d] < sizes[d]) break;
            ia -= sa[d] * static_cast<std::size_t>(sizes[d]);
            ib -= sb[d] * static_cast<std::size_t>(sizes[d]);
            digits[d] = 0;
        }
    }
    return Factor(std::move(scope), std::move(sizes), std::move(values));
}

Factor Factor::sum_out(VarId v) const {
    auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
    if (it == scope_.end() || *it != v)
        throw Error(ErrorCode::unknown_variable, "factor scope does not contain the variable");
    auto pos = static_cast<std::size_t>(it - scope_.begin());

    std::vector<VarId> scope(scope_);
    scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
    std::vector<int> sizes(sizes_);
    int removed = sizes[pos];
    sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(pos));

    std::size_t inner = 1;
    for (std::size_t i = pos + 1; i < sizes_.size(); ++i)
        inner *= static_cast<std::size_t>(sizes_[i]);
    std::size_t outer = values_.size() / (inner * static_cast<std::size_t>(removed));

    std::vector<double> values(table_size(sizes), 0.0);
    std::size_t src = 0;
    for (std::size_t o = 0; o < outer; ++o)
        for (int r = 0; r < removed; ++r)
            for (std::size_t i = 0; i < inner; ++i, ++src)
                values[o * inner + i] += values_[src];
    return Factor(std::move(scope), std::move(sizes), std::move(values));
}

Factor Factor::reduce(VarId v, int value) const {
    auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
    if (it == scope_.end() || *it != v)
        throw Error(ErrorCode::unknown_variable, "factor scope does not contain the variable");
    auto pos = static_cast<std::size_t>(it - scope_.begin());
    if (value < 0 || value >= sizes_[pos])
        throw Error(ErrorCode::index_out_of_range, "evidence value out of range");

    std::vector<VarId> scope(scope_);
    scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
    std::vector<int> sizes(sizes_);
    int removed = sizes[pos];
    sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(pos));

    std::size_t inner = 1;
    for (std::size_t i = pos + 1; i < sizes_.size(); ++i)
        inner *= static_cast<std::size_t>(sizes_[i]);
    std::size_t outer = values_.size() / (inner * static_cast<std::size_t>(removed));

    std::vector<double> values(table_size(sizes));
    for (std::size_t o = 0; o < outer; ++o) {
        std::size_t src = (o * static_cast<std::size_t>(removed) +
                           static_cast<std::size_t>(value)) * inner;
        for (std::size_t i = 0; i < inner; ++i) values[o * inner + i] = values_[src + i];
    }
    return Factor(std::move(scope), std::move(sizes), std::move(values));
}

double Factor::total() const {
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum;
}

Factor Factor::normalized() const {
    double z = total();
    if (z <= 0.0)
        throw Error(ErrorCode::zero_probability_evidence,
                    "conditioning event has probability zero");
    Factor out = *this;
    for (double& v : out.values_) v /= z;
    return out;
}

std::size_t Factor::index_of(std::span<const int> values) const {
    return parent_row_index(sizes_, values);
}

}  // namespace pel
