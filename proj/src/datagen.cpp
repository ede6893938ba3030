#include "feddc/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "feddc/rng.hpp"

namespace feddc {

void SynthConfig::validate() const {
    require_config(n_samples >= 1, "synth: n_samples must be >= 1");
    require_config(n_features >= 1, "synth: n_features must be >= 1");
    require_config(n_informative >= 1, "synth: n_informative must be >= 1");
    require_config(n_informative + n_redundant + n_repeated <= n_features,
                   "synth: n_informative + n_redundant + n_repeated exceeds "
                   "n_features");
    require_config(flip_y >= 0.0 && flip_y <= 1.0,
                   "synth: flip_y must be in [0,1]");
    require_config(clusters_per_class >= 1,
                   "synth: clusters_per_class must be >= 1");
    require_config(class_sep > 0.0, "synth: class_sep must be positive");
    require_config(scale != 0.0, "synth: scale must be nonzero");
    require_config(n_informative <= 62,
                   "synth: n_informative above 62 is not supported");
    const std::size_t n_clusters = 2 * clusters_per_class;
    require_config(n_clusters <= (std::uint64_t{1} << n_informative),
                   "synth: hypercube has too few vertices for the requested "
                   "cluster count");
}

SynthTrace generate_synthetic_traced(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng = stream_rng(cfg.seed, "datagen.synth");

    const std::size_t n_clusters = 2 * cfg.clusters_per_class;
    const std::size_t n_inf = cfg.n_informative;
    const std::size_t n_red = cfg.n_redundant;
    const std::size_t n_rep = cfg.n_repeated;
    const std::size_t n_useless = cfg.n_features - n_inf - n_red - n_rep;

    // Distinct hypercube vertices as cluster centroids, coordinates
    // +-class_sep; cluster k belongs to class k % 2.
    std::vector<std::uint64_t> vertex_codes;
    {
        std::set<std::uint64_t> seen;
        const std::uint64_t n_vertices = std::uint64_t{1} << n_inf;
        while (vertex_codes.size() < n_clusters) {
            std::uint64_t code = rng.uniform_below(n_vertices);
            if (seen.insert(code).second) vertex_codes.push_back(code);
        }
    }

    // Cluster sizes as even as possible, remainder to the first clusters.
    std::vector<std::size_t> cluster_sizes(n_clusters,
                                           cfg.n_samples / n_clusters);
    for (std::size_t i = 0; i < cfg.n_samples % n_clusters; ++i)
        ++cluster_sizes[i];

    std::vector<std::vector<double>> rows;
    rows.reserve(cfg.n_samples);
    std::vector<int> labels;
    labels.reserve(cfg.n_samples);

    std::vector<double> mix(n_inf * n_inf);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        // Per-cluster random covariance via x -> x * A, A ~ U(-1,1)^{k x k}.
        for (auto& a : mix) a = rng.uniform(-1.0, 1.0);
        std::vector<double> centroid(n_inf);
        for (std::size_t j = 0; j < n_inf; ++j)
            centroid[j] = (vertex_codes[c] >> j) & 1 ? cfg.class_sep
                                                     : -cfg.class_sep;
        for (std::size_t s = 0; s < cluster_sizes[c]; ++s) {
            std::vector<double> z(n_inf);
            for (auto& x : z) x = rng.normal();
            std::vector<double> row(cfg.n_features, 0.0);
            for (std::size_t j = 0; j < n_inf; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n_inf; ++i)
                    acc += z[i] * mix[i * n_inf + j];
                row[j] = acc + centroid[j];
            }
            rows.push_back(std::move(row));
            labels.push_back(static_cast<int>(c % 2));
        }
    }

    // Redundant block: random linear combinations of the informative block.
    if (n_red > 0) {
        std::vector<double> combo(n_inf * n_red);
        for (auto& b : combo) b = rng.uniform(-1.0, 1.0);
        for (auto& row : rows) {
            for (std::size_t j = 0; j < n_red; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n_inf; ++i)
                    acc += row[i] * combo[i * n_red + j];
                row[n_inf + j] = acc;
            }
        }
    }

    // Repeated block: copies of uniformly chosen earlier columns.
    if (n_rep > 0) {
        std::vector<std::size_t> srcs(n_rep);
        for (auto& s : srcs) s = rng.uniform_below(n_inf + n_red);
        for (auto& row : rows)
            for (std::size_t j = 0; j < n_rep; ++j)
                row[n_inf + n_red + j] = row[srcs[j]];
    }

    // Remaining columns are pure noise.
    for (auto& row : rows)
        for (std::size_t j = 0; j < n_useless; ++j)
            row[n_inf + n_red + n_rep + j] = rng.normal();

    // Shift, then scale.
    if (cfg.shift != 0.0 || cfg.scale != 1.0)
        for (auto& row : rows)
            for (auto& x : row) x = (x + cfg.shift) * cfg.scale;

    // Shuffle sample order and feature order.
    {
        std::vector<std::size_t> order = rng.permutation(rows.size());
        std::vector<std::vector<double>> shuffled_rows(rows.size());
        std::vector<int> shuffled_labels(labels.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            shuffled_rows[i] = std::move(rows[order[i]]);
            shuffled_labels[i] = labels[order[i]];
        }
        rows = std::move(shuffled_rows);
        labels = std::move(shuffled_labels);

        std::vector<std::size_t> cols = rng.permutation(cfg.n_features);
        for (auto& row : rows) {
            std::vector<double> permuted(cfg.n_features);
            for (std::size_t j = 0; j < cfg.n_features; ++j)
                permuted[j] = row[cols[j]];
            row = std::move(permuted);
        }
    }

    SynthTrace trace;
    trace.labels_before_flip = labels;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rng.uniform() < cfg.flip_y) labels[i] = 1 - labels[i];

    trace.data.dim = cfg.n_features;
    trace.data.samples.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        trace.data.samples.push_back(Sample{std::move(rows[i]), labels[i]});
    return trace;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
    return generate_synthetic_traced(cfg).data;
}

namespace {

double parse_cell(const std::string& cell, const std::string& at) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw IngestionError(at + "non-numeric cell '" + cell + "'");
    return value;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, bool skip_header) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open csv file: " + path.string());

    Dataset data;
    std::string line;
    std::size_t row_no = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++row_no;
        if (row_no == 1 && skip_header) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const std::string at =
            path.string() + ":" + std::to_string(row_no) + ": ";
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() < 2)
            throw IngestionError(at + "expected a label and at least one "
                                      "feature column");

        const double raw_label = parse_cell(cells[0], at);
        int label;
        if (raw_label == 0.0)
            label = 0;
        else if (raw_label == 1.0)
            label = 1;
        else
            throw IngestionError(at + "label must be 0 or 1, got '" +
                                 cells[0] + "'");

        Sample s;
        s.label = label;
        s.features.reserve(cells.size() - 1);
        for (std::size_t i = 1; i < cells.size(); ++i)
            s.features.push_back(parse_cell(cells[i], at));

        if (first_data_row) {
            data.dim = s.features.size();
            first_data_row = false;
        } else if (s.features.size() != data.dim) {
            throw IngestionError(at + "ragged row, expected " +
                                 std::to_string(data.dim + 1) + " columns");
        }
        data.samples.push_back(std::move(s));
    }
    if (data.samples.empty())
        throw IngestionError("csv file has no data rows: " + path.string());
    return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    require_config(static_cast<bool>(out),
                   "cannot open output file: " + path.string());
    char buf[64];
    for (const auto& s : data.samples) {
        out << s.label;
        for (double x : s.features) {
            // %.17g round-trips doubles exactly through load_csv.
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ',' << buf;
        }
        out << '\n';
    }
}

std::vector<Dataset> partition_iid(const Dataset& pool, std::size_t m,
                                   std::size_t n_per_client,
                                   std::uint64_t seed) {
    require_config(m >= 1, "partition: need at least one client");
    require_config(n_per_client >= 1, "partition: need at least one sample "
                                      "per client");
    require_config(m * n_per_client <= pool.size(),
                   "partition: pool too small (" + std::to_string(pool.size()) +
                       " samples for " + std::to_string(m) + " x " +
                       std::to_string(n_per_client) + ")");

    Rng rng = stream_rng(seed, "datagen.partition");
    const std::vector<std::size_t> order = rng.permutation(pool.size());
    std::vector<Dataset> shards(m);
    std::size_t next = 0;
    for (auto& shard : shards) {
        shard.dim = pool.dim;
        shard.samples.reserve(n_per_client);
        for (std::size_t i = 0; i < n_per_client; ++i)
            shard.samples.push_back(pool.samples[order[next++]]);
    }
    return shards;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& pool,
                                             double test_fraction,
                                             std::uint64_t seed) {
    require_config(test_fraction > 0.0 && test_fraction < 1.0,
                   "split: test_fraction must be in (0,1)");
    require_config(pool.size() >= 2, "split: pool too small to split");

    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(pool.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, pool.size() - 1);

    Rng rng = stream_rng(seed, "datagen.split");
    const std::vector<std::size_t> order = rng.permutation(pool.size());
    Dataset train, test;
    train.dim = test.dim = pool.dim;
    test.samples.reserve(n_test);
    train.samples.reserve(pool.size() - n_test);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        (i < n_test ? test : train).samples.push_back(pool.samples[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

} // namespace feddc
