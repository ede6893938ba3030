#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "feddc/errors.hpp"

namespace feddc {

struct Sample {
    std::vector<double> features;
    int label = 0; // binary: 0 or 1
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t dim = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// Synthetic binary classification generator in the make_classification
// style: Gaussian clusters around hypercube vertices for the informative
// block, random linear combinations for the redundant block, copies for the
// repeated block, noise for the rest, then shift/scale and label flips.
struct SynthConfig {
    std::size_t n_samples = 100;
    std::size_t n_features = 20;
    std::size_t n_informative = 2;
    std::size_t n_redundant = 2;
    std::size_t n_repeated = 0;
    std::size_t clusters_per_class = 2;
    double class_sep = 1.0;
    double shift = 0.0;
    double scale = 1.0;
    double flip_y = 0.0; // probability that a label is inverted
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

struct SynthTrace {
    Dataset data;
    // Labels before the flip pass, in the same (shuffled) sample order.
    std::vector<int> labels_before_flip;
};

SynthTrace generate_synthetic_traced(const SynthConfig& cfg);
Dataset generate_synthetic(const SynthConfig& cfg);

// One sample per line: integer label in {0,1}, then the feature columns.
// Throws IngestionError with the offending row number on malformed input.
Dataset load_csv(const std::filesystem::path& path, bool skip_header = false);
void save_csv(const Dataset& data, const std::filesystem::path& path);

// Split a pool into m disjoint shards of exactly n_per_client samples each,
// drawn uniformly without replacement.
std::vector<Dataset> partition_iid(const Dataset& pool, std::size_t m,
                                   std::size_t n_per_client,
                                   std::uint64_t seed);

// Disjoint (train, test) cover of the pool; test gets round(fraction * size).
std::pair<Dataset, Dataset> train_test_split(const Dataset& pool,
                                             double test_fraction,
                                             std::uint64_t seed);

} // namespace feddc
