#include "feddc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "feddc/aggregation.hpp"
#include "feddc/params.hpp"
#include "feddc/rng.hpp"

namespace feddc {

void GuaranteeSpec::validate() const {
    require(epsilon > 0.0, "guarantee: epsilon must be positive");
    require(delta > 0.0 && delta <= 1.0, "guarantee: delta must be in (0,1]");
    require(static_cast<bool>(n0), "guarantee: n0 function not set");
}

GuaranteeSpec make_reference_guarantee(double epsilon, double delta,
                                       double c) {
    require(c > 0.0, "guarantee: c must be positive");
    GuaranteeSpec spec;
    spec.epsilon = epsilon;
    spec.delta = delta;
    spec.n0 = [c](double eps, double dlt) {
        return std::ceil(c / (eps * eps) * std::log(1.0 / dlt));
    };
    spec.validate();
    return spec;
}

void ChainBoundInput::validate() const {
    require(m >= 2, "chain bound: m must be >= 2");
    require(k >= 1.0 && k <= static_cast<double>(m),
            "chain bound: k must be in [1, m]");
    require(d >= 1, "chain bound: d must be >= 1");
    require(delta > 0.0 && delta <= 1.0,
            "chain bound: delta must be in (0,1]");
}

double radon_bound(double delta_local, std::size_t r, std::size_t h) {
    require(r >= 3, "radon_bound: r must be >= 3");
    require(h >= 1, "radon_bound: h must be >= 1");
    require(delta_local >= 0.0 && delta_local <= 1.0,
            "radon_bound: delta_local must be a probability");
    const double base = static_cast<double>(r) * delta_local;
    const double exponent = std::ldexp(1.0, static_cast<int>(h)); // 2^h
    return std::min(1.0, std::pow(base, exponent));
}

std::size_t min_rounds(const ChainBoundInput& input) {
    input.validate();
    if (input.delta == 1.0) return 0;
    const double m = static_cast<double>(input.m);
    const double denominator =
        std::log((m - 1.0) / m) * (m - input.k + 1.0) * m;
    const double value =
        static_cast<double>(input.d) * std::log(input.delta) / denominator;
    return static_cast<std::size_t>(std::ceil(value));
}

std::size_t prox1_min_period(std::size_t m, std::size_t n_local,
                             std::size_t d, const GuaranteeSpec& guarantee) {
    guarantee.validate();
    require(n_local >= 1, "prox1_min_period: n_local must be >= 1");
    require(m >= 2, "prox1_min_period: m must be >= 2");

    const double needed = guarantee.n0(guarantee.epsilon, guarantee.delta);
    require(needed >= 0.0 && std::isfinite(needed),
            "prox1_min_period: n0 returned a bad sample count");
    const double k = needed / static_cast<double>(n_local);
    if (k > static_cast<double>(m))
        throw InfeasibleError(
            "guarantee needs " + std::to_string(k) +
            " local datasets' worth of samples but only " +
            std::to_string(m) + " clients exist");

    ChainBoundInput input;
    input.m = m;
    input.k = std::max(k, 1.0); // fewer samples than one shard: k=1 suffices
    input.d = d;
    input.delta = guarantee.delta;
    return min_rounds(input);
}

namespace {

// Shared trial logic: compose n_perms uniform permutations and test whether
// every route visits at least k distinct clients. Positions fit in 64-bit
// visit masks when m <= 64; larger m uses byte maps.
template <typename PermSource>
bool routes_cover(std::size_t m, double k, std::size_t n_perms,
                  PermSource&& next_perm, std::vector<std::size_t>& position,
                  std::vector<std::uint64_t>& mask_buf,
                  std::vector<unsigned char>& byte_buf) {
    const auto k_int = static_cast<std::size_t>(std::ceil(k));
    if (k_int <= 1) return true;

    position.resize(m);
    std::iota(position.begin(), position.end(), 0);

    if (m <= 64) {
        mask_buf.assign(m, 0);
        for (std::size_t i = 0; i < m; ++i)
            mask_buf[i] = std::uint64_t{1} << i;
        for (std::size_t p = 0; p < n_perms; ++p) {
            const auto& pi = next_perm();
            for (std::size_t i = 0; i < m; ++i) {
                position[i] = pi[position[i]];
                mask_buf[i] |= std::uint64_t{1} << position[i];
            }
        }
        for (std::size_t i = 0; i < m; ++i)
            if (static_cast<std::size_t>(__builtin_popcountll(mask_buf[i])) <
                k_int)
                return false;
        return true;
    }

    byte_buf.assign(m * m, 0);
    for (std::size_t i = 0; i < m; ++i) byte_buf[i * m + i] = 1;
    for (std::size_t p = 0; p < n_perms; ++p) {
        const auto& pi = next_perm();
        for (std::size_t i = 0; i < m; ++i) {
            position[i] = pi[position[i]];
            byte_buf[i * m + position[i]] = 1;
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < m; ++j) count += byte_buf[i * m + j];
        if (count < k_int) return false;
    }
    return true;
}

} // namespace

double chain_coverage_mc(std::size_t m, std::size_t d, std::size_t T,
                         double k, std::size_t trials, std::uint64_t seed) {
    require(m >= 2, "chain_coverage_mc: m must be >= 2");
    require(d >= 1, "chain_coverage_mc: d must be >= 1");
    require(k >= 1.0 && k <= static_cast<double>(m),
            "chain_coverage_mc: k must be in [1, m]");
    require(trials >= 1, "chain_coverage_mc: trials must be >= 1");

    const std::size_t n_perms = T / d;
    std::size_t successes = 0;
    std::vector<std::size_t> position;
    std::vector<std::uint64_t> masks;
    std::vector<unsigned char> bytes;
    std::vector<std::size_t> perm;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng = stream_rng(seed, "chain", trial);
        auto draw = [&]() -> const std::vector<std::size_t>& {
            perm = rng.permutation(m);
            return perm;
        };
        if (routes_cover(m, k, n_perms, draw, position, masks, bytes))
            ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(trials);
}

double chain_coverage_exact(std::size_t m, std::size_t n_permutations,
                            double k) {
    require(m >= 2 && m <= 5, "chain_coverage_exact: m must be in [2, 5]");
    require(n_permutations <= 3,
            "chain_coverage_exact: at most 3 permutations");
    require(k >= 1.0 && k <= static_cast<double>(m),
            "chain_coverage_exact: k must be in [1, m]");

    std::vector<std::vector<std::size_t>> all_perms;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        all_perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const std::size_t n_choices = all_perms.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n_permutations; ++i) total *= n_choices;

    std::vector<std::size_t> position;
    std::vector<std::uint64_t> masks;
    std::vector<unsigned char> bytes;
    std::size_t successes = 0;
    std::vector<std::size_t> choice(std::max<std::size_t>(n_permutations, 1),
                                    0);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t rem = code;
        for (std::size_t p = 0; p < n_permutations; ++p) {
            choice[p] = rem % n_choices;
            rem /= n_choices;
        }
        std::size_t next_index = 0;
        auto draw = [&]() -> const std::vector<std::size_t>& {
            return all_perms[choice[next_index++]];
        };
        if (routes_cover(m, k, n_permutations, draw, position, masks, bytes))
            ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(total);
}

RadonRiskResult radon_risk_mc(std::size_t r, std::size_t h,
                              std::size_t n_local, double eps,
                              std::size_t trials, std::uint64_t seed) {
    require(r >= 3, "radon_risk_mc: r must be >= 3");
    require(h >= 1, "radon_risk_mc: h must be >= 1");
    require(n_local >= 1, "radon_risk_mc: n_local must be >= 1");
    require(eps >= 0.0, "radon_risk_mc: eps must be nonnegative");
    require(trials >= 1, "radon_risk_mc: trials must be >= 1");

    const std::size_t dim = r - 2;
    std::size_t n_models = 1;
    for (std::size_t i = 0; i < h; ++i) n_models *= r;

    std::uint64_t local_failures = 0;
    std::uint64_t radon_failures = 0;

    std::vector<ParamVector> models(n_models, ParamVector(dim));
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng = stream_rng(seed, "radonrisk", trial);
        for (std::size_t c = 0; c < n_models; ++c) {
            ParamVector& model = models[c];
            for (std::size_t j = 0; j < dim; ++j) {
                double sum = 0.0;
                for (std::size_t s = 0; s < n_local; ++s) sum += rng.normal();
                model[j] = sum / static_cast<double>(n_local);
            }
            if (l2_norm(model) > eps) ++local_failures;
        }
        const ParamVector point = iterated_radon(models, h);
        if (l2_norm(point) > eps) ++radon_failures;
    }

    RadonRiskResult result;
    result.trials = trials;
    result.local_delta = static_cast<double>(local_failures) /
                         static_cast<double>(trials * n_models);
    result.radon_delta =
        static_cast<double>(radon_failures) / static_cast<double>(trials);
    result.bound = radon_bound(result.local_delta, r, h);
    return result;
}

} // namespace feddc
