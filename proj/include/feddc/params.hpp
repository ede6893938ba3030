#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "feddc/errors.hpp"

namespace feddc {

// Flat vector of 64-bit model parameters. This is the point type every
// aggregation operator works on; learners flatten into it and unflatten out
// of it. Entries are kept finite by every public operation.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t dim, double fill = 0.0)
        : values_(dim, fill) {}
    ParamVector(std::initializer_list<double> values) : values_(values) {}
    explicit ParamVector(std::vector<double> values)
        : values_(std::move(values)) {}

    std::size_t dim() const { return values_.size(); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    auto begin() { return values_.begin(); }
    auto end() { return values_.end(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    bool all_finite() const;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
};

// Componentwise sum of coeffs[i] * vectors[i]. All vectors must share one
// dimension and the two lists must have the same nonzero length. Addends are
// summed in a canonical per-coordinate order, so the result is bit-identical
// under any permutation of the inputs.
ParamVector linear_combine(std::span<const ParamVector> vectors,
                           std::span<const double> coeffs);

double l2_norm(const ParamVector& v);

// Arithmetic mean; the FedAvg aggregation operator on flat parameters.
ParamVector mean_vector(std::span<const ParamVector> vectors);

// In-place y += alpha * x. Shared kernel for the SGD update.
void axpy(double alpha, const ParamVector& x, ParamVector& y);

} // namespace feddc
