#include "feddc/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace feddc {

bool ParamVector::all_finite() const {
    for (double x : values_)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace {

void check_inputs(std::span<const ParamVector> vectors) {
    require(!vectors.empty(), "linear_combine: empty vector list");
    const std::size_t dim = vectors.front().dim();
    require(dim >= 1, "linear_combine: zero-dimensional input");
    for (const auto& v : vectors) {
        require(v.dim() == dim, "linear_combine: dimension mismatch (" +
                                    std::to_string(v.dim()) + " vs " +
                                    std::to_string(dim) + ")");
        require(v.all_finite(), "linear_combine: non-finite input entry");
    }
}

} // namespace

ParamVector linear_combine(std::span<const ParamVector> vectors,
                           std::span<const double> coeffs) {
    check_inputs(vectors);
    require(vectors.size() == coeffs.size(),
            "linear_combine: vectors/coeffs length mismatch");
    for (double c : coeffs)
        require(std::isfinite(c), "linear_combine: non-finite coefficient");

    const std::size_t m = vectors.size();
    const std::size_t dim = vectors.front().dim();
    ParamVector out(dim);

    // Per-coordinate the addends are sorted before summation. This fixes a
    // canonical order that depends only on the multiset of (vector, coeff)
    // pairs, so the result is bit-identical under any permutation of the
    // input list. Plain left-to-right summation would drift by ulps when the
    // protocol's daisy permutation reorders the clients.
    std::vector<double> terms(m);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < m; ++i) terms[i] = coeffs[i] * vectors[i][j];
        std::sort(terms.begin(), terms.end());
        double acc = 0.0;
        for (double t : terms) acc += t;
        out[j] = acc;
    }
    require(out.all_finite(), "linear_combine: non-finite result");
    return out;
}

double l2_norm(const ParamVector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

ParamVector mean_vector(std::span<const ParamVector> vectors) {
    require(!vectors.empty(), "mean_vector: empty vector list");
    const std::vector<double> coeffs(vectors.size(),
                                     1.0 / static_cast<double>(vectors.size()));
    return linear_combine(vectors, coeffs);
}

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    require(x.dim() == y.dim(), "axpy: dimension mismatch");
    const double* xs = x.data();
    double* ys = y.data();
    for (std::size_t i = 0, n = y.dim(); i < n; ++i) ys[i] += alpha * xs[i];
}

} // namespace feddc
