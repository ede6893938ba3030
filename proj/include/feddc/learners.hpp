#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feddc/datagen.hpp"
#include "feddc/params.hpp"
#include "feddc/rng.hpp"

namespace feddc {

enum class LearnerFamily { linear, mlp };

// Hyperparameters of the local learning algorithm. One spec is shared by all
// clients of a run.
struct LearnerSpec {
    LearnerFamily family = LearnerFamily::linear;
    std::vector<std::size_t> hidden_sizes; // mlp only, e.g. {100, 50, 20}
    double learning_rate = 0.01;
    std::size_t batch_size = 1;
    double prox_mu = 0.0;    // 0 disables the proximal (FedProx) term
    bool linear_bias = true; // homogeneous linear model when false
    // Optional step decay: multiply the rate by decay_factor every
    // decay_every rounds. decay_every = 0 disables.
    double decay_factor = 1.0;
    std::size_t decay_every = 0;

    void validate() const;
    double effective_learning_rate(std::size_t round) const;
};

// Enough metadata to unflatten a parameter vector back into a network.
struct ModelShape {
    LearnerFamily family = LearnerFamily::linear;
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_sizes;
    bool linear_bias = true;

    std::size_t param_count() const;
    friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct Model {
    ParamVector params;
    ModelShape shape;
};

// The last broadcast aggregate; the FedProx proximal term pulls toward it.
struct GlobalAnchor {
    ParamVector params;
};

// Fresh model: zeros for linear, fan-in scaled uniform weights and zero
// biases for the MLP.
Model init_model(const LearnerSpec& spec, std::size_t input_dim, Rng& rng);

struct Prediction {
    int label = 0;
    double score = 0.0; // sigmoid of the decision value
};

// Pre-sigmoid decision value of the network on one input.
double decision_value(const Model& model, std::span<const double> features);
Prediction predict(const Model& model, std::span<const double> features);

using SampleRef = const Sample*;

// Exact gradient of the mean logistic loss over the batch, plus the proximal
// term prox_mu * (params - anchor) when an anchor is given.
ParamVector gradient(const Model& model, std::span<const SampleRef> batch,
                     const LearnerSpec& spec,
                     const GlobalAnchor* anchor = nullptr);

// Convenience overload for contiguous sample storage (tests mostly).
ParamVector gradient(const Model& model, std::span<const Sample> batch,
                     const LearnerSpec& spec,
                     const GlobalAnchor* anchor = nullptr);

// One SGD step on a batch of min(batch_size, |shard|) samples drawn
// uniformly without replacement from the shard.
Model local_step(const Model& model, const Dataset& shard,
                 const LearnerSpec& spec, const GlobalAnchor* anchor,
                 Rng& rng);

enum class Loss { zero_one, logistic };

// Mean loss over the dataset; zero_one is 1 - accuracy.
double empirical_risk(const Model& model, const Dataset& data, Loss loss);

} // namespace feddc
