#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feddc/errors.hpp"
#include "feddc/learners.hpp"
#include "feddc/params.hpp"

namespace feddc {

// Settings for (iterated) Radon-point aggregation. The Radon number r is
// always derived from the point dimension as r = dim + 2.
struct RadonConfig {
    std::size_t iterations = 1; // h
    double zero_tolerance = 1e-9;

    void validate() const;
};

// Witness for a Radon partition: coefficients of the affine dependency
// (normalized to unit max-norm, largest-magnitude entry positive), the
// index sets of either sign, and the common point of the two hulls.
struct RadonCertificate {
    std::vector<double> lambda;
    std::vector<std::size_t> positive_part;
    std::vector<std::size_t> negative_part;
    ParamVector point;
};

// Radon point of exactly r = dim+2 points: solves sum(lambda_i * p_i) = 0,
// sum(lambda_i) = 0 and returns the common point of the convex hulls of the
// two sign classes, with the certificate.
RadonCertificate radon_point(std::span<const ParamVector> points,
                             double zero_tolerance = 1e-9);

// Iterated Radon point over exactly r^h points: consecutive groups of r are
// reduced by radon_point, recursively, h levels deep.
ParamVector iterated_radon(std::span<const ParamVector> points,
                           std::size_t h, double zero_tolerance = 1e-9);

struct MedianResult {
    ParamVector point;
    bool converged = false;
    std::size_t iterations = 0;
};

// Geometric median via Weiszfeld iteration; stops when the iterate moves
// less than tol. Hitting max_iter returns the best iterate, flagged.
MedianResult geometric_median(std::span<const ParamVector> points,
                              double tol = 1e-10,
                              std::size_t max_iter = 1000);

enum class AggMethod { mean, iterated_radon, geometric_median };

struct AggregatorConfig {
    AggMethod method = AggMethod::mean;
    RadonConfig radon;
    double median_tol = 1e-10;
    std::size_t median_max_iter = 1000;

    void validate() const;
};

// Number of points the configured method consumes at dimension dim
// (r^h for iterated Radon); 0 means "any count".
std::size_t required_point_count(const AggregatorConfig& cfg,
                                 std::size_t dim);

// Aggregate models of identical shape into one model of that shape.
Model aggregate(std::span<const Model> models, const AggregatorConfig& cfg);

const char* agg_method_name(AggMethod method);
AggMethod parse_agg_method(const std::string& name);

} // namespace feddc
