#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "feddc/config.hpp"
#include "feddc/datagen.hpp"
#include "feddc/learners.hpp"
#include "feddc/metrics.hpp"
#include "feddc/protocol.hpp"

namespace feddc {

// Fraction of correctly thresholded predictions; the complement of the
// zero-one empirical risk.
inline double accuracy(const Model& model, const Dataset& data) {
    return 1.0 - empirical_risk(model, data, Loss::zero_one);
}

// Where the training data comes from and how it is carved into shards.
struct DataConfig {
    bool synthetic = true;
    SynthConfig synth;
    std::string csv_path;
    bool csv_header = false;
    double test_fraction = 0.5;
    std::size_t n_per_client = 0; // samples per client shard
};

struct ExperimentConfig {
    DataConfig data;
    LearnerSpec learner;
    ProtocolConfig protocol;
    std::string out_path = "metrics.csv";
};

// Reads and validates the [data]/[learner]/[protocol]/[privacy]/[run]
// sections; unknown keys are rejected with their source line.
ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);

struct BuiltData {
    std::vector<Dataset> shards;
    Dataset eval_set;
};

// Materializes the shards and shared eval set. All randomness derives from
// the experiment seed, so runs differing only in protocol settings see
// identical data.
BuiltData build_data(const DataConfig& data, std::size_t clients,
                     std::uint64_t seed);

// Fully resolved config echo (every default materialized) plus version;
// re-running the manifest reproduces the metrics CSV byte for byte.
KeyValueConfig make_manifest(const ExperimentConfig& config);

struct RunResult {
    std::vector<MetricsRecord> records;
    std::string csv_path;
    std::string manifest_path;
};

// Executes one experiment, writing the metrics CSV and sidecar manifest.
RunResult run_experiment_files(const ExperimentConfig& config);

ExperimentConfig experiment_from_file(const std::string& config_path,
                                      const std::string& out_override,
                                      std::optional<std::uint64_t> seed_override);

struct SweepCell {
    std::vector<std::pair<std::string, std::string>> assignment;
    std::string name;
};

// Cross-product of the [sweep] section (fields restricted to d, b, variant,
// mu, clip, sigma, seed) in deterministic order.
std::vector<SweepCell> enumerate_sweep(const KeyValueConfig& kv);

// Runs every sweep cell, one CSV + manifest per cell, plus summary.csv.
// Returns the summary CSV text.
std::string run_sweep(const std::string& config_path,
                      const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override);

// Theory validation table driven by the [lemma1] and [radon] sections.
std::string theory_check(const KeyValueConfig& kv);

// Final-row digest of previously written metrics CSVs.
std::string summarize(const std::vector<std::string>& csv_paths);

// Synthetic-data generation to CSV from the [data] section.
void datagen_to_csv(const KeyValueConfig& kv, const std::string& out_path,
                    std::optional<std::uint64_t> seed_override);

} // namespace feddc
