#include "feddc/aggregation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "feddc/rng.hpp"

namespace feddc {

namespace {

// r^h with overflow guard; aggregation sizes stay small in practice.
std::size_t pow_count(std::size_t r, std::size_t h) {
    std::size_t result = 1;
    for (std::size_t i = 0; i < h; ++i) {
        require(result <= std::numeric_limits<std::size_t>::max() / r,
                "iterated_radon: r^h overflows");
        result *= r;
    }
    return result;
}

void check_points(std::span<const ParamVector> points) {
    require(!points.empty(), "aggregation: no points");
    const std::size_t dim = points[0].dim();
    for (const auto& p : points) {
        require(p.dim() == dim, "aggregation: mixed point dimensions");
        require(p.all_finite(), "aggregation: non-finite point");
    }
}

} // namespace

void RadonConfig::validate() const {
    require_config(iterations >= 1, "radon: iterations must be >= 1");
    require_config(zero_tolerance > 0.0 && zero_tolerance < 1e-3,
                   "radon: zero_tolerance must be in (0, 1e-3)");
}

RadonCertificate radon_point(std::span<const ParamVector> points,
                             double zero_tolerance) {
    check_points(points);
    const std::size_t dim = points[0].dim();
    const std::size_t r = dim + 2;
    require(points.size() == r,
            "radon_point: needs exactly dim+2 = " + std::to_string(r) +
                " points, got " + std::to_string(points.size()));

    // Columns are (p_i, 1); any nullspace vector is an affine dependency.
    Eigen::MatrixXd m(dim + 1, r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < dim; ++j)
            m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                points[i][j];
        m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(i)) = 1.0;
    }

    // The last right-singular vector spans the nullspace for points in
    // general position; for degenerate inputs it is still a deterministic
    // choice of dependency.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    Eigen::VectorXd lambda =
        svd.matrixV().col(static_cast<Eigen::Index>(r - 1));

    // Canonical scaling: unit max-norm with the largest-magnitude entry
    // positive, so the certificate is unique up to the solver's rounding.
    Eigen::Index imax = 0;
    lambda.cwiseAbs().maxCoeff(&imax);
    lambda /= lambda(imax);

    RadonCertificate cert;
    cert.lambda.assign(lambda.data(), lambda.data() + r);
    for (std::size_t i = 0; i < r; ++i) {
        if (cert.lambda[i] > zero_tolerance)
            cert.positive_part.push_back(i);
        else if (cert.lambda[i] < -zero_tolerance)
            cert.negative_part.push_back(i);
    }

    if (cert.positive_part.empty() || cert.negative_part.empty()) {
        // Only reachable when the dependency degenerates numerically, which
        // requires (near-)coincident points; the common point is any of them.
        cert.point = points[0];
        return cert;
    }

    double lambda_pos = 0.0;
    for (auto i : cert.positive_part) lambda_pos += cert.lambda[i];

    std::vector<ParamVector> part;
    std::vector<double> coeffs;
    part.reserve(cert.positive_part.size());
    coeffs.reserve(cert.positive_part.size());
    for (auto i : cert.positive_part) {
        part.push_back(points[i]);
        coeffs.push_back(cert.lambda[i] / lambda_pos);
    }
    cert.point = linear_combine(part, coeffs);
    require(cert.point.all_finite(), "radon_point: non-finite result");
    return cert;
}

ParamVector iterated_radon(std::span<const ParamVector> points,
                           std::size_t h, double zero_tolerance) {
    check_points(points);
    require(h >= 1, "iterated_radon: h must be >= 1");
    const std::size_t r = points[0].dim() + 2;
    require(points.size() == pow_count(r, h),
            "iterated_radon: needs exactly r^h = " +
                std::to_string(pow_count(r, h)) + " points, got " +
                std::to_string(points.size()));

    std::vector<ParamVector> level(points.begin(), points.end());
    while (level.size() > 1) {
        std::vector<ParamVector> next;
        next.reserve(level.size() / r);
        for (std::size_t g = 0; g < level.size(); g += r) {
            std::span<const ParamVector> group(level.data() + g, r);
            next.push_back(radon_point(group, zero_tolerance).point);
        }
        level = std::move(next);
    }
    return level[0];
}

MedianResult geometric_median(std::span<const ParamVector> points,
                              double tol, std::size_t max_iter) {
    check_points(points);
    require(tol > 0.0, "geometric_median: tol must be positive");
    const std::size_t dim = points[0].dim();

    MedianResult result;
    if (points.size() == 1) {
        result.point = points[0];
        result.converged = true;
        return result;
    }

    // Deterministic stream for the standard Weiszfeld singularity escape.
    Rng perturb_rng = stream_rng(0x77u, "median.perturb");

    ParamVector y = mean_vector(points);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Restart off any anchor point before forming reciprocal weights.
        bool on_anchor = true;
        while (on_anchor) {
            on_anchor = false;
            for (const auto& p : points) {
                ParamVector diff = y;
                axpy(-1.0, p, diff);
                if (l2_norm(diff) < 1e-12) {
                    for (std::size_t j = 0; j < dim; ++j)
                        y[j] += perturb_rng.uniform(-1e-9, 1e-9);
                    on_anchor = true;
                    break;
                }
            }
        }

        ParamVector next(dim);
        double weight_sum = 0.0;
        for (const auto& p : points) {
            ParamVector diff = y;
            axpy(-1.0, p, diff);
            const double w = 1.0 / l2_norm(diff);
            axpy(w, p, next);
            weight_sum += w;
        }
        for (std::size_t j = 0; j < dim; ++j) next[j] /= weight_sum;

        ParamVector step = next;
        axpy(-1.0, y, step);
        const double movement = l2_norm(step);
        y = next;
        result.iterations = iter + 1;
        if (movement <= tol) {
            result.converged = true;
            break;
        }
    }
    result.point = y;
    require(result.point.all_finite(), "geometric_median: non-finite result");
    return result;
}

void AggregatorConfig::validate() const {
    if (method == AggMethod::iterated_radon) radon.validate();
    require_config(median_tol > 0.0, "aggregator: median_tol must be > 0");
    require_config(median_max_iter >= 1,
                   "aggregator: median_max_iter must be >= 1");
}

std::size_t required_point_count(const AggregatorConfig& cfg,
                                 std::size_t dim) {
    if (cfg.method != AggMethod::iterated_radon) return 0;
    return pow_count(dim + 2, cfg.radon.iterations);
}

Model aggregate(std::span<const Model> models, const AggregatorConfig& cfg) {
    require(!models.empty(), "aggregate: no models");
    for (const auto& m : models)
        require(m.shape == models[0].shape, "aggregate: mixed model shapes");

    std::vector<ParamVector> points;
    points.reserve(models.size());
    for (const auto& m : models) points.push_back(m.params);

    Model out;
    out.shape = models[0].shape;
    switch (cfg.method) {
    case AggMethod::mean:
        out.params = mean_vector(points);
        break;
    case AggMethod::iterated_radon:
        out.params = iterated_radon(points, cfg.radon.iterations,
                                    cfg.radon.zero_tolerance);
        break;
    case AggMethod::geometric_median:
        out.params =
            geometric_median(points, cfg.median_tol, cfg.median_max_iter)
                .point;
        break;
    }
    return out;
}

const char* agg_method_name(AggMethod method) {
    switch (method) {
    case AggMethod::mean: return "mean";
    case AggMethod::iterated_radon: return "iterated_radon";
    case AggMethod::geometric_median: return "geometric_median";
    }
    return "unknown";
}

AggMethod parse_agg_method(const std::string& name) {
    if (name == "mean") return AggMethod::mean;
    if (name == "iterated_radon" || name == "radon")
        return AggMethod::iterated_radon;
    if (name == "geometric_median" || name == "median")
        return AggMethod::geometric_median;
    throw ConfigError("unknown aggregation method: " + name);
}

} // namespace feddc
