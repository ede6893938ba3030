#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "feddc/aggregation.hpp"
#include "feddc/datagen.hpp"
#include "feddc/learners.hpp"
#include "feddc/metrics.hpp"
#include "feddc/privacy.hpp"
#include "feddc/rng.hpp"

namespace feddc {

enum class Variant { feddc, fedavg, daisy_only, fedprox };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

// Schedule and topology of one federated run. aggregation_period uses the
// raw round index: the coordinator acts after rounds t with t % b == b-1.
struct ProtocolConfig {
    Variant variant = Variant::feddc;
    std::size_t daisy_period = 1;       // d
    std::size_t aggregation_period = 1; // b
    std::size_t rounds = 1;             // t_max
    std::size_t clients = 2;            // m
    AggregatorConfig aggregator;
    PrivacyConfig privacy;
    std::uint64_t seed = 0;
    std::size_t eval_every = 0; // 0 = auto cadence (see eval_cadence)
    std::size_t threads = 1;

    // model_dim is needed to check Radon feasibility (m >= (dim+2)^h).
    void validate(std::size_t model_dim) const;
};

struct RoundFlags {
    bool is_daisy = false;
    bool is_agg = false;
};

// Pure function of (t, d, b) and the variant; collisions are resolved by
// the caller (aggregation wins).
RoundFlags schedule_flags(std::size_t t, std::size_t d, std::size_t b,
                          Variant variant);

// Aggregation period for a FedAvg run matched to FedDC's communication
// frequency: round(1 / (1/d + 1/b)), clamped to >= 1. b = 0 means FedDC
// never aggregates, leaving only the daisy-round frequency.
std::size_t equal_comm_period(std::size_t d, std::size_t b);

// Reroute models along a uniformly drawn permutation: output[pi(i)] = input[i].
std::vector<Model> daisy_permute(const std::vector<Model>& models, Rng& rng);

struct AggregationOutcome {
    std::vector<Model> models; // all slots hold the aggregate
    Model aggregate_model;
};

// Aggregate and broadcast. For iterated Radon with m > r^h the coordinator
// draws a uniformly ordered r^h-subset (rng); mean/median consume all m.
AggregationOutcome aggregation_round(const std::vector<Model>& models,
                                     const AggregatorConfig& cfg, Rng& rng);

struct SimulationState {
    std::size_t round = 0;
    std::vector<Model> models;
    // Model each client received at its last communication event; updates
    // are measured against this point for privacy clipping.
    std::vector<Model> period_start;
    std::vector<Rng> client_rngs;
    std::vector<Rng> privacy_rngs;
    Rng coordinator_rng{0}; // reseeded by init_state
    std::uint64_t uplink = 0;
    std::uint64_t downlink = 0;
    std::uint64_t comm_rounds = 0;
    std::size_t aggregations = 0;
    std::optional<Model> last_aggregate;
    std::optional<GlobalAnchor> anchor; // proximal anchor (fedprox)
    double max_sent_update_norm = 0.0;  // post-clip, across all sends
};

SimulationState init_state(const ProtocolConfig& config,
                           const LearnerSpec& spec,
                           const std::vector<Dataset>& shards);

// One round of Algorithm 1: local steps on every client, then any scheduled
// communication. When daisy and aggregation collide, aggregation wins.
void run_round(SimulationState& state, const ProtocolConfig& config,
               const LearnerSpec& spec, const std::vector<Dataset>& shards);

// Default evaluation cadence: every round up to 1000 rounds, then thinned
// to at most ~1000 evaluation points.
std::size_t eval_cadence(const ProtocolConfig& config);

// Full run: metrics at round 0, every cadence multiple, and the final
// round. Deterministic given config.seed.
std::vector<MetricsRecord> run_experiment(const ProtocolConfig& config,
                                          const LearnerSpec& spec,
                                          const std::vector<Dataset>& shards,
                                          const Dataset& eval_set);

} // namespace feddc
