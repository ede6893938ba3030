#pragma once

#include <cstdint>
#include <functional>

#include "feddc/errors.hpp"

namespace feddc {

// PAC-style guarantee: with probability at least 1-delta a model trained on
// n0(epsilon, delta) samples has risk below epsilon. n0 must be monotone
// (decreasing in epsilon, decreasing in delta); this is documented, not
// checked.
struct GuaranteeSpec {
    double epsilon = 0.0;
    double delta = 0.0;
    std::function<double(double, double)> n0;

    void validate() const;
};

// Reference instantiation n0(eps, delta) = ceil(c / eps^2 * ln(1/delta)),
// illustrative only.
GuaranteeSpec make_reference_guarantee(double epsilon, double delta,
                                       double c);

// Inputs of the daisy-chain coverage bound: after enough daisy rounds every
// model has visited at least k of the m client datasets with probability
// 1-delta. k is real-valued so it can carry a sample-size ratio.
struct ChainBoundInput {
    std::size_t m = 2;
    double k = 1.0;
    std::size_t d = 1;
    double delta = 1.0;

    void validate() const;
};

// Failure-probability bound for the h-times iterated Radon point:
// min(1, (r * delta_local)^(2^h)).
double radon_bound(double delta_local, std::size_t r, std::size_t h);

// Minimum number of rounds T such that the coverage bound holds:
// ceil(d * ln(delta) / (ln((m-1)/m) * (m-k+1) * m)); delta = 1 gives 0.
std::size_t min_rounds(const ChainBoundInput& input);

// Minimum aggregation period b for the single-aggregation guarantee:
// min_rounds with k = n0(epsilon, delta) / n_local. Raises InfeasibleError
// when that ratio exceeds m (local data too scarce at this client count).
std::size_t prox1_min_period(std::size_t m, std::size_t n_local,
                             std::size_t d, const GuaranteeSpec& guarantee);

// Monte Carlo estimate of the coverage probability: fraction of trials in
// which, after floor(T/d) uniform permutations composed as model routes,
// every model has visited at least k distinct clients (its start counts).
double chain_coverage_mc(std::size_t m, std::size_t d, std::size_t T,
                         double k, std::size_t trials, std::uint64_t seed);

// Exact coverage probability by enumerating every permutation sequence;
// tractable only for m <= 5 and at most 3 permutations.
double chain_coverage_exact(std::size_t m, std::size_t n_permutations,
                            double k);

struct RadonRiskResult {
    double local_delta = 0.0; // empirical P(local risk > eps), pooled
    double radon_delta = 0.0; // empirical P(iterated-Radon risk > eps)
    double bound = 0.0;       // radon_bound(local_delta, r, h)
    std::uint64_t trials = 0;
};

// Empirical check of the Radon failure bound on a toy convex task in
// dimension r-2: each of r^h clients estimates a location (true value 0)
// by the mean of n_local standard-normal draws; risk is the L2 error.
RadonRiskResult radon_risk_mc(std::size_t r, std::size_t h,
                              std::size_t n_local, double eps,
                              std::size_t trials, std::uint64_t seed);

} // namespace feddc
