#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "feddc/aggregation.hpp"
#include "feddc/errors.hpp"
#include "feddc/params.hpp"
#include "feddc/rng.hpp"

using namespace feddc;

namespace {

std::vector<ParamVector> random_points(std::size_t count, std::size_t dim,
                                       Rng& rng, double span = 5.0) {
    std::vector<ParamVector> pts;
    for (std::size_t i = 0; i < count; ++i) {
        ParamVector p(dim);
        for (std::size_t j = 0; j < dim; ++j) p[j] = rng.uniform(-span, span);
        pts.push_back(std::move(p));
    }
    return pts;
}

// Certificate validity, checked from scratch: the affine dependency holds,
// the parts cover the signs, and the returned point lies in both convex
// hulls (i.e. both sign classes reproduce it with their normalized weights).
void check_certificate(const std::vector<ParamVector>& pts,
                       const RadonCertificate& cert, double dep_tol,
                       double hull_tol) {
    REQUIRE(cert.lambda.size() == pts.size());
    REQUIRE(!cert.positive_part.empty());
    REQUIRE(!cert.negative_part.empty());

    double max_abs = 0.0;
    for (double l : cert.lambda) max_abs = std::max(max_abs, std::abs(l));
    CHECK(max_abs == doctest::Approx(1.0).epsilon(1e-12));

    double sum = 0.0;
    ParamVector weighted(pts[0].size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        sum += cert.lambda[i];
        axpy(cert.lambda[i], pts[i], weighted);
    }
    CHECK(std::abs(sum) <= dep_tol);
    CHECK(l2_norm(weighted) <= dep_tol * 10.0);

    for (int sign = 0; sign < 2; ++sign) {
        const auto& part = sign == 0 ? cert.positive_part
                                     : cert.negative_part;
        double mass = 0.0;
        for (auto idx : part) mass += std::abs(cert.lambda[idx]);
        REQUIRE(mass > 0.0);
        ParamVector hull_point(pts[0].size());
        for (auto idx : part)
            axpy(std::abs(cert.lambda[idx]) / mass, pts[idx], hull_point);
        ParamVector diff = hull_point;
        axpy(-1.0, cert.point, diff);
        CHECK(l2_norm(diff) <= hull_tol);
    }
}

// Tukey depth of a point by brute force over candidate halfspace normals:
// depth(x) = min over directions u of #{i : <p_i - x, u> >= 0}. In low
// dimension the minimizing direction can be found among normals spanned by
// point differences plus random probes.
std::size_t tukey_depth_lower_bound_witnessed(
    const ParamVector& x, const std::vector<ParamVector>& pts, Rng& rng) {
    const std::size_t dim = x.size();
    std::vector<ParamVector> normals;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ParamVector d = pts[i];
        axpy(-1.0, x, d);
        if (l2_norm(d) > 1e-12) normals.push_back(d);
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            ParamVector e = pts[i];
            axpy(-1.0, pts[j], e);
            if (l2_norm(e) > 1e-12) normals.push_back(e);
        }
    }
    for (int probe = 0; probe < 2000; ++probe) {
        ParamVector u(dim);
        for (std::size_t j = 0; j < dim; ++j) u[j] = rng.normal();
        normals.push_back(std::move(u));
    }

    std::size_t depth = pts.size();
    for (const auto& u : normals) {
        for (int flip = 0; flip < 2; ++flip) {
            std::size_t on_side = 0;
            for (const auto& p : pts) {
                double dot = 0.0;
                for (std::size_t j = 0; j < dim; ++j)
                    dot += (p[j] - x[j]) * u[j];
                if (flip) dot = -dot;
                if (dot >= -1e-9) ++on_side;
            }
            depth = std::min(depth, on_side);
        }
    }
    return depth;
}

double sum_distances(const ParamVector& x,
                     const std::vector<ParamVector>& pts) {
    double total = 0.0;
    for (const auto& p : pts) {
        ParamVector d = p;
        axpy(-1.0, x, d);
        total += l2_norm(d);
    }
    return total;
}

} // namespace

TEST_SUITE("aggregation") {

TEST_CASE("one-dimensional hand instance lands on the overlap point") {
    // Points 0, 1, 10 on the line: the hulls [0,10] and {1} (or however the
    // signs fall) intersect exactly at 1.
    std::vector<ParamVector> pts = {ParamVector({0.0}), ParamVector({1.0}),
                                    ParamVector({10.0})};
    const RadonCertificate cert = radon_point(pts);
    REQUIRE(cert.point.size() == 1);
    CHECK(std::abs(cert.point[0] - 1.0) <= 1e-9);
    check_certificate(pts, cert, 1e-8, 1e-6);
}

TEST_CASE("square in the plane maps to its center") {
    std::vector<ParamVector> pts = {
        ParamVector({0.0, 0.0}), ParamVector({2.0, 0.0}),
        ParamVector({0.0, 2.0}), ParamVector({2.0, 2.0})};
    const RadonCertificate cert = radon_point(pts);
    CHECK(std::abs(cert.point[0] - 1.0) <= 1e-9);
    CHECK(std::abs(cert.point[1] - 1.0) <= 1e-9);
    CHECK(cert.positive_part.size() == 2);
    CHECK(cert.negative_part.size() == 2);
}

TEST_CASE("coincident points collapse to that point") {
    std::vector<ParamVector> pts(4, ParamVector({3.0, -1.0}));
    const RadonCertificate cert = radon_point(pts);
    CHECK(cert.point[0] == doctest::Approx(3.0));
    CHECK(cert.point[1] == doctest::Approx(-1.0));
}

TEST_CASE("certificates are valid on random instances") {
    Rng rng(600);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t dim = 1 + static_cast<std::size_t>(rep % 3);
        const auto pts = random_points(dim + 2, dim, rng);
        const RadonCertificate cert = radon_point(pts);
        check_certificate(pts, cert, 1e-8, 1e-6);
    }
}

TEST_CASE("radon point is equivariant under affine maps") {
    Rng rng(601);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t dim = 2;
        const auto pts = random_points(dim + 2, dim, rng);

        // Random invertible-ish affine map A x + t.
        double A[2][2];
        for (auto& row : A)
            for (double& v : row) v = rng.uniform(-2.0, 2.0);
        A[0][0] += 3.0; // keep it well-conditioned
        A[1][1] += 3.0;
        const double t0 = rng.uniform(-4.0, 4.0);
        const double t1 = rng.uniform(-4.0, 4.0);
        std::vector<ParamVector> mapped;
        for (const auto& p : pts) {
            ParamVector q(2);
            q[0] = A[0][0] * p[0] + A[0][1] * p[1] + t0;
            q[1] = A[1][0] * p[0] + A[1][1] * p[1] + t1;
            mapped.push_back(std::move(q));
        }

        const ParamVector rp = radon_point(pts).point;
        const ParamVector rq = radon_point(mapped).point;
        const double e0 = A[0][0] * rp[0] + A[0][1] * rp[1] + t0;
        const double e1 = A[1][0] * rp[0] + A[1][1] * rp[1] + t1;
        CHECK(std::abs(rq[0] - e0) <= 1e-6);
        CHECK(std::abs(rq[1] - e1) <= 1e-6);
    }
}

TEST_CASE("radon point does not depend on the order of its inputs") {
    Rng rng(602);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t dim = 3;
        const auto pts = random_points(dim + 2, dim, rng);
        const ParamVector base = radon_point(pts).point;
        auto order = rng.permutation(pts.size());
        std::vector<ParamVector> shuffled;
        for (auto idx : order) shuffled.push_back(pts[idx]);
        const ParamVector perm = radon_point(shuffled).point;
        ParamVector diff = perm;
        axpy(-1.0, base, diff);
        CHECK(l2_norm(diff) <= 1e-8);
    }
}

TEST_CASE("radon point at least doubles Tukey depth over a vertex") {
    Rng rng(603);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t dim = 2;
        const auto pts = random_points(dim + 2, dim, rng);
        const ParamVector center = radon_point(pts).point;
        const std::size_t depth =
            tukey_depth_lower_bound_witnessed(center, pts, rng);
        // Any single input point has depth 1 in general position; the Radon
        // point is in both hulls, so its depth is at least 2.
        CHECK(depth >= 2);
    }
}

TEST_CASE("radon_point requires exactly dim + 2 points") {
    Rng rng(604);
    auto pts = random_points(4, 2, rng);
    CHECK_NOTHROW((void)radon_point(pts));
    pts.pop_back();
    CHECK_THROWS_AS((void)radon_point(pts), ContractViolation);
    auto too_many = random_points(6, 2, rng);
    CHECK_THROWS_AS((void)radon_point(too_many), ContractViolation);
}

TEST_CASE("iterated radon with one level equals the plain radon point") {
    Rng rng(605);
    const auto pts = random_points(5, 3, rng);
    const ParamVector direct = radon_point(pts).point;
    const ParamVector iter = iterated_radon(pts, 1);
    CHECK(direct == iter);
}

TEST_CASE("iterated radon reduces r^h points by groups of r") {
    // 1-D: r = 3, h = 2 over 9 points. Each consecutive triple reduces to
    // its middle element; the second level takes the middle of the middles.
    std::vector<ParamVector> pts;
    const double values[9] = {0.0, 1.0, 10.0,   // -> 1
                              -5.0, 0.0, 5.0,   // -> 0
                              2.0, 3.0, 100.0}; // -> 3
    for (double v : values) pts.push_back(ParamVector({v}));
    const ParamVector out = iterated_radon(pts, 2);
    CHECK(std::abs(out[0] - 1.0) <= 1e-9); // middle of {1, 0, 3}
}

TEST_CASE("iterated radon enforces the r^h point count") {
    Rng rng(606);
    auto pts = random_points(9, 1, rng);
    CHECK_NOTHROW((void)iterated_radon(pts, 2));
    pts.pop_back();
    CHECK_THROWS_AS((void)iterated_radon(pts, 2), ContractViolation);
    CHECK_THROWS_AS((void)iterated_radon(pts, 0), ContractViolation);
}

TEST_CASE("geometric median of one point is that point") {
    std::vector<ParamVector> pts = {ParamVector({4.0, -2.0})};
    const MedianResult res = geometric_median(pts);
    CHECK(res.converged);
    CHECK(res.point[0] == doctest::Approx(4.0));
    CHECK(res.point[1] == doctest::Approx(-2.0));
}

TEST_CASE("geometric median of a square is its center") {
    std::vector<ParamVector> pts = {
        ParamVector({0.0, 0.0}), ParamVector({2.0, 0.0}),
        ParamVector({0.0, 2.0}), ParamVector({2.0, 2.0})};
    const MedianResult res = geometric_median(pts, 1e-12, 10000);
    CHECK(res.converged);
    CHECK(std::abs(res.point[0] - 1.0) <= 1e-8);
    CHECK(std::abs(res.point[1] - 1.0) <= 1e-8);
}

TEST_CASE("geometric median matches a grid search oracle") {
    const std::vector<ParamVector> pts = {
        ParamVector({0.0, 0.0}), ParamVector({1.0, 0.0}),
        ParamVector({0.0, 1.0})};
    const MedianResult res = geometric_median(pts, 1e-12, 20000);

    double best = 1e300;
    ParamVector arg(2);
    for (double x = -0.2; x <= 1.2; x += 1e-3) {
        for (double y = -0.2; y <= 1.2; y += 1e-3) {
            const ParamVector cand({x, y});
            const double s = sum_distances(cand, pts);
            if (s < best) {
                best = s;
                arg = cand;
            }
        }
    }
    CHECK(std::abs(res.point[0] - arg[0]) <= 2e-3);
    CHECK(std::abs(res.point[1] - arg[1]) <= 2e-3);
    CHECK(sum_distances(res.point, pts) <= best + 1e-6);
}

TEST_CASE("geometric median survives starting on an input point") {
    // The mean of these points is (1, 1) which is also an input: Weiszfeld's
    // weights blow up there unless the implementation sidesteps anchors.
    std::vector<ParamVector> pts = {
        ParamVector({0.0, 0.0}), ParamVector({2.0, 0.0}),
        ParamVector({0.0, 2.0}), ParamVector({2.0, 2.0}),
        ParamVector({1.0, 1.0})};
    const MedianResult res = geometric_median(pts, 1e-10, 10000);
    CHECK(std::abs(res.point[0] - 1.0) <= 1e-6);
    CHECK(std::abs(res.point[1] - 1.0) <= 1e-6);
}

TEST_CASE("geometric median is empty-input safe") {
    std::vector<ParamVector> none;
    CHECK_THROWS_AS((void)geometric_median(none), ContractViolation);
}

TEST_CASE("aggregate dispatches on the configured method") {
    Rng rng(607);
    LearnerSpec spec;
    spec.family = LearnerFamily::linear;
    spec.linear_bias = false;

    std::vector<Model> models;
    for (int i = 0; i < 3; ++i) {
        Model m = init_model(spec, 1, rng);
        m.params = ParamVector({static_cast<double>(i == 2 ? 10 : i)});
        models.push_back(std::move(m)); // params 0, 1, 10
    }

    AggregatorConfig mean_cfg;
    mean_cfg.method = AggMethod::mean;
    CHECK(aggregate(models, mean_cfg).params[0] ==
          doctest::Approx(11.0 / 3.0));

    AggregatorConfig radon_cfg;
    radon_cfg.method = AggMethod::iterated_radon;
    radon_cfg.radon.iterations = 1;
    CHECK(std::abs(aggregate(models, radon_cfg).params[0] - 1.0) <= 1e-9);

    AggregatorConfig med_cfg;
    med_cfg.method = AggMethod::geometric_median;
    CHECK(std::abs(aggregate(models, med_cfg).params[0] - 1.0) <= 1e-6);
}

TEST_CASE("aggregate rejects mismatched shapes and empty input") {
    Rng rng(608);
    LearnerSpec spec;
    spec.family = LearnerFamily::linear;
    std::vector<Model> models = {init_model(spec, 2, rng),
                                 init_model(spec, 3, rng)};
    AggregatorConfig cfg;
    CHECK_THROWS_AS((void)aggregate(models, cfg), ContractViolation);
    std::vector<Model> none;
    CHECK_THROWS_AS((void)aggregate(none, cfg), ContractViolation);
}

TEST_CASE("required_point_count reflects the method") {
    AggregatorConfig cfg;
    cfg.method = AggMethod::mean;
    CHECK(required_point_count(cfg, 5) == 0);
    cfg.method = AggMethod::geometric_median;
    CHECK(required_point_count(cfg, 5) == 0);
    cfg.method = AggMethod::iterated_radon;
    cfg.radon.iterations = 2;
    CHECK(required_point_count(cfg, 5) == 49);
    cfg.radon.iterations = 1;
    CHECK(required_point_count(cfg, 3) == 5);
}

TEST_CASE("method names round-trip through the parser") {
    CHECK(parse_agg_method("mean") == AggMethod::mean);
    CHECK(parse_agg_method("radon") == AggMethod::iterated_radon);
    CHECK(parse_agg_method("iterated_radon") == AggMethod::iterated_radon);
    CHECK(parse_agg_method("median") == AggMethod::geometric_median);
    CHECK(parse_agg_method("geometric_median") == AggMethod::geometric_median);
    CHECK_THROWS_AS((void)parse_agg_method("mode"), ConfigError);
    CHECK(parse_agg_method(agg_method_name(AggMethod::mean)) ==
          AggMethod::mean);
}

} // TEST_SUITE
