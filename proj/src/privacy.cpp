#include "feddc/privacy.hpp"

namespace feddc {

void PrivacyConfig::validate() const {
    if (!enabled) return;
    require_config(clip > 0.0, "privacy: clip bound must be positive");
    require_config(sigma >= 0.0, "privacy: sigma must be nonnegative");
}

ParamVector clip_update(const ParamVector& update, double s) {
    require(s > 0.0, "clip_update: bound must be positive");
    ParamVector clipped = update;
    // Rescaling can overshoot by an ulp; repeat until the bound truly holds.
    for (double norm = l2_norm(clipped); norm > s; norm = l2_norm(clipped)) {
        const double scale = s / norm;
        for (std::size_t i = 0; i < clipped.dim(); ++i) clipped[i] *= scale;
    }
    return clipped;
}

ParamVector add_gaussian_noise(const ParamVector& v, double sigma, Rng& rng) {
    require(sigma >= 0.0, "add_gaussian_noise: sigma must be nonnegative");
    if (sigma == 0.0) return v;
    ParamVector noised = v;
    for (std::size_t i = 0; i < noised.dim(); ++i)
        noised[i] += rng.normal(0.0, sigma);
    return noised;
}

PrivatizeTrace privatize_model_traced(const Model& before_period,
                                      const Model& after_round,
                                      const PrivacyConfig& cfg, Rng& rng) {
    require(before_period.shape == after_round.shape,
            "privatize_model: shape mismatch");
    PrivatizeTrace trace;
    if (!cfg.enabled) {
        trace.model = after_round;
        ParamVector update = after_round.params;
        axpy(-1.0, before_period.params, update);
        trace.clipped_update_norm = l2_norm(update);
        return trace;
    }

    ParamVector update = after_round.params;
    axpy(-1.0, before_period.params, update);
    const double raw_norm = l2_norm(update);
    ParamVector clipped = clip_update(update, cfg.clip);
    trace.clipped_update_norm = l2_norm(clipped);

    if (cfg.sigma == 0.0 && raw_norm <= cfg.clip) {
        // No clipping and no noise: keep the sent model bit-identical to the
        // raw one instead of reconstructing it as before + (after - before).
        trace.model = after_round;
        return trace;
    }

    ParamVector sent = add_gaussian_noise(clipped, cfg.sigma, rng);
    trace.model.shape = after_round.shape;
    trace.model.params = before_period.params;
    axpy(1.0, sent, trace.model.params);
    require(trace.model.params.all_finite(),
            "privatize_model: non-finite output");
    return trace;
}

Model privatize_model(const Model& before_period, const Model& after_round,
                      const PrivacyConfig& cfg, Rng& rng) {
    return privatize_model_traced(before_period, after_round, cfg, rng).model;
}

} // namespace feddc
