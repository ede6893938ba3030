#include "feddc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace feddc {

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::feddc: return "feddc";
    case Variant::fedavg: return "fedavg";
    case Variant::daisy_only: return "daisy_only";
    case Variant::fedprox: return "fedprox";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    if (name == "feddc") return Variant::feddc;
    if (name == "fedavg") return Variant::fedavg;
    if (name == "daisy_only") return Variant::daisy_only;
    if (name == "fedprox") return Variant::fedprox;
    throw ConfigError("unknown protocol variant: " + name);
}

namespace {

bool uses_daisy(Variant v) {
    return v == Variant::feddc || v == Variant::daisy_only;
}

bool uses_aggregation(Variant v) {
    return v == Variant::feddc || v == Variant::fedavg ||
           v == Variant::fedprox;
}

} // namespace

void ProtocolConfig::validate(std::size_t model_dim) const {
    require_config(clients >= 1, "protocol: need at least one client");
    require_config(threads >= 1, "protocol: threads must be >= 1");
    if (uses_daisy(variant)) {
        require_config(daisy_period >= 1,
                       "protocol: daisy_period must be >= 1");
        require_config(clients >= 2,
                       "protocol: daisy-chaining needs at least 2 clients");
    }
    if (uses_aggregation(variant)) {
        require_config(aggregation_period >= 1,
                       "protocol: aggregation_period must be >= 1");
        aggregator.validate();
        const std::size_t needed = required_point_count(aggregator, model_dim);
        if (needed > 0)
            require_config(
                clients >= needed,
                "protocol: iterated Radon with h=" +
                    std::to_string(aggregator.radon.iterations) +
                    " needs at least (dim+2)^h = " + std::to_string(needed) +
                    " clients, got " + std::to_string(clients));
    }
    privacy.validate();
}

RoundFlags schedule_flags(std::size_t t, std::size_t d, std::size_t b,
                          Variant variant) {
    RoundFlags flags;
    if (uses_daisy(variant) && d >= 1) flags.is_daisy = (t % d == d - 1);
    if (uses_aggregation(variant) && b >= 1) flags.is_agg = (t % b == b - 1);
    return flags;
}

std::size_t equal_comm_period(std::size_t d, std::size_t b) {
    require(d >= 1, "equal_comm_period: d must be >= 1");
    double rate = 1.0 / static_cast<double>(d);
    if (b >= 1) rate += 1.0 / static_cast<double>(b);
    const auto period = static_cast<std::size_t>(std::llround(1.0 / rate));
    return std::max<std::size_t>(period, 1);
}

std::vector<Model> daisy_permute(const std::vector<Model>& models, Rng& rng) {
    require(models.size() >= 2, "daisy_permute: need at least 2 models");
    const auto pi = rng.permutation(models.size());
    std::vector<Model> out(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) out[pi[i]] = models[i];
    return out;
}

AggregationOutcome aggregation_round(const std::vector<Model>& models,
                                     const AggregatorConfig& cfg, Rng& rng) {
    require(!models.empty(), "aggregation_round: no models");
    AggregationOutcome outcome;

    const std::size_t needed =
        required_point_count(cfg, models[0].params.dim());
    if (needed > 0) {
        require(models.size() >= needed,
                "aggregation_round: not enough models for iterated Radon");
        // Uniformly ordered subset: randomizes both who participates and the
        // consecutive grouping inside iterated_radon.
        const auto order = rng.permutation(models.size());
        std::vector<Model> chosen;
        chosen.reserve(needed);
        for (std::size_t i = 0; i < needed; ++i)
            chosen.push_back(models[order[i]]);
        outcome.aggregate_model = aggregate(chosen, cfg);
    } else {
        outcome.aggregate_model = aggregate(models, cfg);
    }

    outcome.models.assign(models.size(), outcome.aggregate_model);
    return outcome;
}

SimulationState init_state(const ProtocolConfig& config,
                           const LearnerSpec& spec,
                           const std::vector<Dataset>& shards) {
    require(shards.size() == config.clients,
            "init_state: shard count does not match client count");
    for (const auto& shard : shards)
        require(!shard.empty(), "init_state: empty client shard");
    const std::size_t input_dim = shards[0].dim;
    for (const auto& shard : shards)
        require(shard.dim == input_dim, "init_state: mixed shard dimensions");

    SimulationState state;
    state.models.reserve(config.clients);
    state.client_rngs.reserve(config.clients);
    state.privacy_rngs.reserve(config.clients);
    for (std::size_t i = 0; i < config.clients; ++i) {
        Rng init_rng = stream_rng(config.seed, "init", i);
        state.models.push_back(init_model(spec, input_dim, init_rng));
        state.client_rngs.push_back(stream_rng(config.seed, "client", i));
        state.privacy_rngs.push_back(stream_rng(config.seed, "privacy", i));
    }
    state.period_start = state.models;
    state.coordinator_rng = stream_rng(config.seed, "coordinator");
    return state;
}

void run_round(SimulationState& state, const ProtocolConfig& config,
               const LearnerSpec& spec, const std::vector<Dataset>& shards) {
    require(state.round < config.rounds, "run_round: round budget exhausted");
    const std::size_t m = config.clients;
    require(state.models.size() == m, "run_round: model count drifted");

    LearnerSpec round_spec = spec;
    round_spec.learning_rate = spec.effective_learning_rate(state.round);

    const GlobalAnchor* anchor =
        (config.variant == Variant::fedprox && state.anchor)
            ? &*state.anchor
            : nullptr;

    auto step_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            state.models[i] = local_step(state.models[i], shards[i],
                                         round_spec, anchor,
                                         state.client_rngs[i]);
    };
    if (config.threads <= 1 || m <= 1) {
        step_range(0, m);
    } else {
        // Per-client rng streams and slot-wise writes keep any thread split
        // bit-identical to the sequential loop.
        const std::size_t n_threads = std::min(config.threads, m);
        const std::size_t chunk = (m + n_threads - 1) / n_threads;
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_threads);
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(lo + chunk, m);
            if (lo >= hi) break;
            pool.emplace_back([&, t, lo, hi] {
                try {
                    step_range(lo, hi);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    const RoundFlags flags = schedule_flags(
        state.round, config.daisy_period, config.aggregation_period,
        config.variant);
    const bool communicate = flags.is_daisy || flags.is_agg;

    if (communicate) {
        std::vector<Model> sent;
        sent.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            PrivatizeTrace trace = privatize_model_traced(
                state.period_start[i], state.models[i], config.privacy,
                state.privacy_rngs[i]);
            if (config.privacy.enabled)
                require(trace.clipped_update_norm <= config.privacy.clip,
                        "run_round: clipped update exceeds the bound");
            state.max_sent_update_norm = std::max(
                state.max_sent_update_norm, trace.clipped_update_norm);
            sent.push_back(std::move(trace.model));
        }
        state.uplink += m;

        if (flags.is_agg) {
            // Collision rule: aggregation wins; the daisy permutation would
            // be overwritten by the broadcast anyway.
            AggregationOutcome outcome = aggregation_round(
                sent, config.aggregator, state.coordinator_rng);
            state.models = std::move(outcome.models);
            state.last_aggregate = outcome.aggregate_model;
            state.anchor = GlobalAnchor{outcome.aggregate_model.params};
            ++state.aggregations;
        } else {
            state.models = daisy_permute(sent, state.coordinator_rng);
        }
        state.downlink += m;
        ++state.comm_rounds;
        state.period_start = state.models;
    }

    ++state.round;
}

std::size_t eval_cadence(const ProtocolConfig& config) {
    if (config.eval_every > 0) return config.eval_every;
    if (config.rounds <= 1000) return 1;
    return (config.rounds + 999) / 1000;
}

namespace {

MetricsRecord snapshot(const SimulationState& state,
                       const std::vector<Dataset>& shards,
                       const Dataset& eval_set,
                       const std::optional<double>& agg_test) {
    const std::size_t m = state.models.size();
    MetricsRecord rec;
    rec.round = state.round;

    double train_sum = 0.0;
    double test_sum = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        train_sum +=
            1.0 - empirical_risk(state.models[i], shards[i], Loss::zero_one);
        const double test_acc =
            1.0 - empirical_risk(state.models[i], eval_set, Loss::zero_one);
        test_sum += test_acc;
        lo = std::min(lo, test_acc);
        hi = std::max(hi, test_acc);
    }
    rec.train_mean = train_sum / static_cast<double>(m);
    rec.test_mean = test_sum / static_cast<double>(m);
    rec.test_lo = lo;
    rec.test_hi = hi;
    rec.agg_test = agg_test;
    rec.messages = state.uplink + state.downlink;
    return rec;
}

} // namespace

std::vector<MetricsRecord> run_experiment(const ProtocolConfig& config,
                                          const LearnerSpec& spec,
                                          const std::vector<Dataset>& shards,
                                          const Dataset& eval_set) {
    spec.validate();
    require(!eval_set.empty(), "run_experiment: empty eval set");
    require(!shards.empty(), "run_experiment: no shards");
    require(eval_set.dim == shards[0].dim,
            "run_experiment: eval set dimension mismatch");
    {
        // Surface config problems before any state is built.
        Rng probe = stream_rng(config.seed, "init", 0);
        const Model proto = init_model(spec, shards[0].dim, probe);
        config.validate(proto.params.dim());
    }

    SimulationState state = init_state(config, spec, shards);
    const std::size_t cadence = eval_cadence(config);

    std::optional<double> agg_test;
    std::size_t seen_aggregations = 0;

    std::vector<MetricsRecord> records;
    records.push_back(snapshot(state, shards, eval_set, agg_test));

    while (state.round < config.rounds) {
        run_round(state, config, spec, shards);
        if (state.aggregations > seen_aggregations) {
            seen_aggregations = state.aggregations;
            agg_test = 1.0 - empirical_risk(*state.last_aggregate, eval_set,
                                            Loss::zero_one);
        }
        if (state.round % cadence == 0 || state.round == config.rounds)
            records.push_back(snapshot(state, shards, eval_set, agg_test));
    }
    return records;
}

} // namespace feddc
