#pragma once

#include "feddc/errors.hpp"
#include "feddc/learners.hpp"
#include "feddc/params.hpp"
#include "feddc/rng.hpp"

namespace feddc {

// Clip-and-noise mechanism applied to model updates at send time.
struct PrivacyConfig {
    bool enabled = false;
    double clip = 0.0;  // L2 bound S on the update; must be > 0 when enabled
    double sigma = 0.0; // Gaussian noise scale

    void validate() const;
};

// Scale update down to L2 norm S when it exceeds S; otherwise unchanged.
ParamVector clip_update(const ParamVector& update, double s);

// v + iid N(0, sigma^2) per coordinate; sigma = 0 returns v without
// touching the rng.
ParamVector add_gaussian_noise(const ParamVector& v, double sigma, Rng& rng);

struct PrivatizeTrace {
    Model model;
    double clipped_update_norm = 0.0; // <= S whenever privacy is enabled
};

// Replace the raw update (after - before) with its clipped, noised version:
// before + noise(clip(after - before)). Disabled config passes after
// through untouched.
PrivatizeTrace privatize_model_traced(const Model& before_period,
                                      const Model& after_round,
                                      const PrivacyConfig& cfg, Rng& rng);

Model privatize_model(const Model& before_period, const Model& after_round,
                      const PrivacyConfig& cfg, Rng& rng);

} // namespace feddc
