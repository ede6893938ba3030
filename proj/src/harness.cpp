#include "feddc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "feddc/rng.hpp"
#include "feddc/theory.hpp"
#include "feddc/version.hpp"

namespace feddc {

namespace {

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec)
            throw ConfigError("cannot create directory " +
                              p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << text;
    if (!out) throw ConfigError("write failed: " + path);
}

std::string bool_text(bool value) { return value ? "true" : "false"; }

std::string join_counts(const std::vector<std::size_t>& values) {
    std::string text;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) text += ",";
        text += std::to_string(values[i]);
    }
    return text;
}

DataConfig parse_data_section(const KeyValueConfig& kv) {
    kv.restrict_section(
        "data", {"source", "n_samples", "n_features", "n_informative",
                 "n_redundant", "n_repeated", "clusters_per_class",
                 "class_sep", "shift", "scale", "flip_y", "path", "header",
                 "test_fraction", "n_per_client"});

    DataConfig data;
    const std::string source = kv.get_string("data.source", "synthetic");
    if (source == "synthetic") {
        data.synthetic = true;
        SynthConfig& s = data.synth;
        s.n_samples = kv.get_count("data.n_samples", s.n_samples);
        s.n_features = kv.get_count("data.n_features", s.n_features);
        s.n_informative =
            kv.get_count("data.n_informative", s.n_features);
        s.n_redundant = kv.get_count("data.n_redundant", 0);
        s.n_repeated = kv.get_count("data.n_repeated", 0);
        s.clusters_per_class =
            kv.get_count("data.clusters_per_class", s.clusters_per_class);
        s.class_sep = kv.get_double("data.class_sep", s.class_sep);
        s.shift = kv.get_double("data.shift", s.shift);
        s.scale = kv.get_double("data.scale", s.scale);
        s.flip_y = kv.get_double("data.flip_y", s.flip_y);
    } else if (source == "csv") {
        data.synthetic = false;
        if (!kv.has("data.path"))
            throw ConfigError(kv.origin() +
                              ": data.path is required when data.source = csv");
        data.csv_path = kv.get_string("data.path");
        data.csv_header = kv.get_bool("data.header", false);
        if (!std::filesystem::exists(data.csv_path))
            throw ConfigError(kv.where("data.path") +
                              ": data file does not exist: " + data.csv_path);
    } else {
        throw ConfigError(kv.where("data.source") +
                          ": data.source must be 'synthetic' or 'csv', got '" +
                          source + "'");
    }

    data.test_fraction = kv.get_double("data.test_fraction", 0.5);
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
        throw ConfigError(kv.where("data.test_fraction") +
                          ": data.test_fraction must be in (0,1)");
    data.n_per_client = kv.get_count("data.n_per_client", 0);
    return data;
}

LearnerSpec parse_learner_section(const KeyValueConfig& kv) {
    kv.restrict_section("learner",
                        {"family", "hidden", "learning_rate", "batch_size",
                         "mu", "bias", "decay_factor", "decay_every"});

    LearnerSpec spec;
    const std::string family = kv.get_string("learner.family", "linear");
    if (family == "linear") {
        spec.family = LearnerFamily::linear;
    } else if (family == "mlp") {
        spec.family = LearnerFamily::mlp;
        spec.hidden_sizes = {100, 50, 20};
    } else {
        throw ConfigError(kv.where("learner.family") +
                          ": learner.family must be 'linear' or 'mlp', got '" +
                          family + "'");
    }
    if (kv.has("learner.hidden")) {
        spec.hidden_sizes.clear();
        for (const auto& item : kv.get_list("learner.hidden")) {
            std::size_t size = 0;
            try {
                size = std::stoull(item);
            } catch (const std::exception&) {
                throw ConfigError(kv.where("learner.hidden") +
                                  ": bad hidden layer size '" + item + "'");
            }
            spec.hidden_sizes.push_back(size);
        }
    }
    spec.learning_rate =
        kv.get_double("learner.learning_rate", spec.learning_rate);
    spec.batch_size = kv.get_count("learner.batch_size", spec.batch_size);
    spec.prox_mu = kv.get_double("learner.mu", 0.0);
    spec.linear_bias = kv.get_bool("learner.bias", true);
    spec.decay_factor = kv.get_double("learner.decay_factor", 1.0);
    spec.decay_every = kv.get_count("learner.decay_every", 0);
    spec.validate();
    return spec;
}

ProtocolConfig parse_protocol_section(const KeyValueConfig& kv) {
    kv.restrict_section(
        "protocol", {"variant", "d", "b", "rounds", "clients", "aggregator",
                     "radon_h", "radon_zero_tolerance", "median_tol",
                     "median_max_iter", "eval_every", "threads"});

    ProtocolConfig protocol;
    protocol.variant =
        parse_variant(kv.get_string("protocol.variant", "feddc"));
    protocol.rounds = kv.get_count("protocol.rounds", 1);
    if (protocol.rounds < 1)
        throw ConfigError(kv.where("protocol.rounds") +
                          ": protocol.rounds must be >= 1");
    protocol.daisy_period = kv.get_count("protocol.d", 1);
    // b = 0 spells "never aggregate": resolve to a period past the budget.
    const std::size_t raw_b = kv.get_count("protocol.b", 1);
    protocol.aggregation_period =
        raw_b == 0 ? protocol.rounds + 1 : raw_b;
    protocol.clients = kv.get_count("protocol.clients", 2);
    protocol.aggregator.method =
        parse_agg_method(kv.get_string("protocol.aggregator", "mean"));
    protocol.aggregator.radon.iterations = kv.get_count("protocol.radon_h", 1);
    protocol.aggregator.radon.zero_tolerance =
        kv.get_double("protocol.radon_zero_tolerance", 1e-9);
    protocol.aggregator.median_tol =
        kv.get_double("protocol.median_tol", 1e-10);
    protocol.aggregator.median_max_iter =
        kv.get_count("protocol.median_max_iter", 1000);
    protocol.eval_every = kv.get_count("protocol.eval_every", 0);
    protocol.threads = kv.get_count("protocol.threads", 1);
    return protocol;
}

PrivacyConfig parse_privacy_section(const KeyValueConfig& kv) {
    kv.restrict_section("privacy", {"enabled", "clip", "sigma"});
    PrivacyConfig privacy;
    privacy.enabled = kv.get_bool("privacy.enabled", false);
    privacy.clip = kv.get_double("privacy.clip", 0.0);
    privacy.sigma = kv.get_double("privacy.sigma", 0.0);
    privacy.validate();
    return privacy;
}

} // namespace

namespace {

// Every key must live in a recognized section; bare keys and foreign
// sections are configuration mistakes, not extensions.
void restrict_sections(const KeyValueConfig& kv,
                       const std::vector<std::string>& sections) {
    for (const auto& key : kv.keys()) {
        const auto dot = key.find('.');
        const std::string section =
            dot == std::string::npos ? "" : key.substr(0, dot);
        if (std::find(sections.begin(), sections.end(), section) ==
            sections.end())
            throw ConfigError(kv.where(key) + ": unknown key '" + key + "'");
    }
}

} // namespace

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
    restrict_sections(kv,
                      {"data", "learner", "protocol", "privacy", "run", "meta"});
    kv.restrict_section("run", {"seed", "out"});
    kv.restrict_section("meta", {"version"});

    ExperimentConfig config;
    config.data = parse_data_section(kv);
    config.learner = parse_learner_section(kv);
    config.protocol = parse_protocol_section(kv);
    config.protocol.privacy = parse_privacy_section(kv);
    config.protocol.seed = kv.get_u64("run.seed", 0);
    config.out_path = kv.get_string("run.out", "metrics.csv");

    config.data.synth.seed = config.protocol.seed;
    if (config.data.synthetic) config.data.synth.validate();
    return config;
}

BuiltData build_data(const DataConfig& data, std::size_t clients,
                     std::uint64_t seed) {
    Dataset pool;
    if (data.synthetic) {
        SynthConfig synth = data.synth;
        synth.seed = seed;
        pool = generate_synthetic(synth);
    } else {
        pool = load_csv(data.csv_path, data.csv_header);
    }

    auto [train, test] = train_test_split(pool, data.test_fraction, seed);

    std::size_t per_client = data.n_per_client;
    if (per_client == 0) per_client = train.size() / std::max<std::size_t>(clients, 1);
    if (per_client == 0 || clients * per_client > train.size())
        throw ConfigError(
            "data: training pool of " + std::to_string(train.size()) +
            " samples cannot supply " + std::to_string(clients) +
            " clients with " + std::to_string(per_client) + " samples each");

    BuiltData built;
    built.shards = partition_iid(train, clients, per_client, seed);
    built.eval_set = std::move(test);
    return built;
}

KeyValueConfig make_manifest(const ExperimentConfig& config) {
    KeyValueConfig kv;
    kv.set("meta.version", kVersion);

    if (config.data.synthetic) {
        const SynthConfig& s = config.data.synth;
        kv.set("data.source", "synthetic");
        kv.set("data.n_samples", std::to_string(s.n_samples));
        kv.set("data.n_features", std::to_string(s.n_features));
        kv.set("data.n_informative", std::to_string(s.n_informative));
        kv.set("data.n_redundant", std::to_string(s.n_redundant));
        kv.set("data.n_repeated", std::to_string(s.n_repeated));
        kv.set("data.clusters_per_class",
               std::to_string(s.clusters_per_class));
        kv.set("data.class_sep", format_double(s.class_sep));
        kv.set("data.shift", format_double(s.shift));
        kv.set("data.scale", format_double(s.scale));
        kv.set("data.flip_y", format_double(s.flip_y));
    } else {
        kv.set("data.source", "csv");
        kv.set("data.path", config.data.csv_path);
        kv.set("data.header", bool_text(config.data.csv_header));
    }
    kv.set("data.test_fraction", format_double(config.data.test_fraction));
    kv.set("data.n_per_client", std::to_string(config.data.n_per_client));

    const LearnerSpec& learner = config.learner;
    kv.set("learner.family",
           learner.family == LearnerFamily::linear ? "linear" : "mlp");
    if (learner.family == LearnerFamily::mlp)
        kv.set("learner.hidden", join_counts(learner.hidden_sizes));
    kv.set("learner.learning_rate", format_double(learner.learning_rate));
    kv.set("learner.batch_size", std::to_string(learner.batch_size));
    kv.set("learner.mu", format_double(learner.prox_mu));
    kv.set("learner.bias", bool_text(learner.linear_bias));
    kv.set("learner.decay_factor", format_double(learner.decay_factor));
    kv.set("learner.decay_every", std::to_string(learner.decay_every));

    const ProtocolConfig& protocol = config.protocol;
    kv.set("protocol.variant", variant_name(protocol.variant));
    kv.set("protocol.d", std::to_string(protocol.daisy_period));
    kv.set("protocol.b", std::to_string(protocol.aggregation_period));
    kv.set("protocol.rounds", std::to_string(protocol.rounds));
    kv.set("protocol.clients", std::to_string(protocol.clients));
    kv.set("protocol.aggregator", agg_method_name(protocol.aggregator.method));
    kv.set("protocol.radon_h",
           std::to_string(protocol.aggregator.radon.iterations));
    kv.set("protocol.radon_zero_tolerance",
           format_double(protocol.aggregator.radon.zero_tolerance));
    kv.set("protocol.median_tol",
           format_double(protocol.aggregator.median_tol));
    kv.set("protocol.median_max_iter",
           std::to_string(protocol.aggregator.median_max_iter));
    kv.set("protocol.eval_every", std::to_string(protocol.eval_every));
    kv.set("protocol.threads", std::to_string(protocol.threads));

    const PrivacyConfig& privacy = protocol.privacy;
    kv.set("privacy.enabled", bool_text(privacy.enabled));
    kv.set("privacy.clip", format_double(privacy.clip));
    kv.set("privacy.sigma", format_double(privacy.sigma));

    kv.set("run.seed", std::to_string(protocol.seed));
    kv.set("run.out", config.out_path);
    return kv;
}

RunResult run_experiment_files(const ExperimentConfig& config) {
    const BuiltData data =
        build_data(config.data, config.protocol.clients, config.protocol.seed);

    RunResult result;
    result.records = run_experiment(config.protocol, config.learner,
                                    data.shards, data.eval_set);
    result.csv_path = config.out_path;
    result.manifest_path = config.out_path + ".manifest";
    write_text_file(result.csv_path, metrics_to_csv(result.records));
    write_text_file(result.manifest_path, make_manifest(config).serialize());
    return result;
}

ExperimentConfig experiment_from_file(
    const std::string& config_path, const std::string& out_override,
    std::optional<std::uint64_t> seed_override) {
    KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
    if (!out_override.empty()) kv.set("run.out", out_override);
    if (seed_override) kv.set("run.seed", std::to_string(*seed_override));
    return parse_experiment_config(kv);
}

namespace {

const std::vector<std::pair<std::string, std::string>>& sweep_field_map() {
    static const std::vector<std::pair<std::string, std::string>> map = {
        {"b", "protocol.b"},        {"clip", "privacy.clip"},
        {"d", "protocol.d"},        {"mu", "learner.mu"},
        {"seed", "run.seed"},       {"sigma", "privacy.sigma"},
        {"variant", "protocol.variant"},
    };
    return map;
}

std::string config_key_for_sweep_field(const std::string& field) {
    for (const auto& [name, key] : sweep_field_map())
        if (name == field) return key;
    return {};
}

std::string sanitize_for_filename(const std::string& text) {
    std::string out;
    for (char c : text) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) ||
                        c == '.' || c == '-';
        out += ok ? c : '-';
    }
    return out;
}

} // namespace

std::vector<SweepCell> enumerate_sweep(const KeyValueConfig& kv) {
    std::vector<std::string> allowed;
    for (const auto& [name, key] : sweep_field_map()) allowed.push_back(name);
    kv.restrict_section("sweep", allowed);

    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& field : kv.section_keys("sweep")) {
        auto values = kv.get_list("sweep." + field);
        if (values.empty())
            throw ConfigError(kv.where("sweep." + field) + ": sweep field '" +
                              field + "' has no values");
        axes.emplace_back(field, std::move(values));
    }

    std::vector<SweepCell> cells;
    if (axes.empty()) {
        cells.push_back(SweepCell{{}, "run"});
        return cells;
    }

    std::vector<std::size_t> index(axes.size(), 0);
    while (true) {
        SweepCell cell;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            cell.assignment.emplace_back(axes[a].first,
                                         axes[a].second[index[a]]);
            if (a) cell.name += "_";
            cell.name += axes[a].first + "-" +
                         sanitize_for_filename(axes[a].second[index[a]]);
        }
        cells.push_back(std::move(cell));

        std::size_t a = axes.size();
        while (a-- > 0) {
            if (++index[a] < axes[a].second.size()) break;
            index[a] = 0;
            if (a == 0) return cells;
        }
    }
}

std::string run_sweep(const std::string& config_path,
                      const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override) {
    KeyValueConfig base = KeyValueConfig::parse_file(config_path);
    if (seed_override) base.set("run.seed", std::to_string(*seed_override));

    const auto cells = enumerate_sweep(base);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw ConfigError("cannot create directory " + out_dir + ": " +
                          ec.message());

    std::vector<std::string> fields;
    for (const auto& [field, value] : cells.front().assignment)
        fields.push_back(field);

    std::ostringstream summary;
    summary << "cell";
    for (const auto& field : fields) summary << ',' << field;
    summary << ",rounds,final_train_mean,final_test_mean,final_test_lo,"
               "final_test_hi,final_agg_test,messages,csv\n";

    for (const auto& cell : cells) {
        KeyValueConfig kv = base;
        for (const auto& field : base.section_keys("sweep"))
            kv.erase("sweep." + field);
        for (const auto& [field, value] : cell.assignment)
            kv.set(config_key_for_sweep_field(field), value);

        const std::string cell_out =
            (std::filesystem::path(out_dir) / (cell.name + ".csv")).string();
        kv.set("run.out", cell_out);

        ExperimentConfig config = parse_experiment_config(kv);
        const RunResult result = run_experiment_files(config);
        const MetricsRecord& last = result.records.back();

        summary << cell.name;
        for (const auto& [field, value] : cell.assignment)
            summary << ',' << value;
        summary << ',' << last.round << ','
                << format_double(last.train_mean) << ','
                << format_double(last.test_mean) << ','
                << format_double(last.test_lo) << ','
                << format_double(last.test_hi) << ',';
        if (last.agg_test) summary << format_double(*last.agg_test);
        summary << ',' << last.messages << ',' << cell_out << '\n';
    }

    const std::string text = summary.str();
    write_text_file(
        (std::filesystem::path(out_dir) / "summary.csv").string(), text);
    return text;
}

namespace {

std::size_t parse_count_text(const std::string& text,
                             const std::string& context) {
    try {
        std::size_t pos = 0;
        const std::size_t value = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ConfigError(context + ": expected an integer, got '" + text +
                          "'");
    }
}

double parse_double_text(const std::string& text,
                         const std::string& context) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ConfigError(context + ": expected a number, got '" + text +
                          "'");
    }
}

std::size_t resolve_k_token(const std::string& token, std::size_t m,
                            const KeyValueConfig& kv) {
    if (token == "m") return m;
    if (token == "half") return (m + 1) / 2;
    return parse_count_text(token, kv.where("lemma1.k") + ": k value");
}

} // namespace

std::string theory_check(const KeyValueConfig& kv) {
    kv.restrict_section("lemma1",
                        {"enabled", "m", "k", "delta", "d", "trials", "seed"});
    kv.restrict_section("radon",
                        {"enabled", "r", "h", "n_local", "eps", "trials",
                         "seed"});

    std::ostringstream out;
    out << "check,m,k,delta,d,T,r,h,n_local,eps,local_delta,bound,empirical,"
           "stderr,flag\n";

    if (kv.get_bool("lemma1.enabled", kv.has("lemma1.m"))) {
        const std::size_t d = kv.get_count("lemma1.d", 1);
        const std::size_t trials = kv.get_count("lemma1.trials", 100000);
        const std::uint64_t seed = kv.get_u64("lemma1.seed", 7);
        std::size_t row = 0;
        for (const auto& m_text : kv.get_list("lemma1.m")) {
            const std::size_t m =
                parse_count_text(m_text, kv.where("lemma1.m") + ": m value");
            std::set<std::size_t> ks;
            for (const auto& k_text : kv.get_list("lemma1.k"))
                ks.insert(resolve_k_token(k_text, m, kv));
            for (const std::size_t k : ks) {
                if (k < 1 || k > m) continue;
                for (const auto& delta_text : kv.get_list("lemma1.delta")) {
                    const double delta = parse_double_text(
                        delta_text, kv.where("lemma1.delta") + ": delta value");
                    ChainBoundInput input;
                    input.m = m;
                    input.k = static_cast<double>(k);
                    input.d = d;
                    input.delta = delta;
                    const std::size_t T = min_rounds(input);
                    const double empirical = chain_coverage_mc(
                        m, d, T, static_cast<double>(k), trials,
                        stream_seed(seed, "lemma1-cell", row));
                    const double target = 1.0 - delta;
                    const double se = std::sqrt(
                        std::max(empirical * (1.0 - empirical), 1e-12) /
                        static_cast<double>(trials));
                    const bool flagged = empirical < target - 3.0 * se;
                    out << "lemma1," << m << ',' << k << ','
                        << format_double(delta) << ',' << d << ',' << T
                        << ",,,,,," << format_double(target) << ','
                        << format_double(empirical) << ','
                        << format_double(se) << ',' << (flagged ? 1 : 0)
                        << '\n';
                    ++row;
                }
            }
        }
    }

    if (kv.get_bool("radon.enabled", kv.has("radon.r"))) {
        const std::size_t r = kv.get_count("radon.r", 3);
        const std::size_t n_local = kv.get_count("radon.n_local", 5);
        const double eps = kv.get_double("radon.eps", 0.573);
        const std::size_t trials = kv.get_count("radon.trials", 100000);
        const std::uint64_t seed = kv.get_u64("radon.seed", 7);
        std::size_t row = 0;
        for (const auto& h_text : kv.get_list("radon.h")) {
            const std::size_t h =
                parse_count_text(h_text, kv.where("radon.h") + ": h value");
            const RadonRiskResult result = radon_risk_mc(
                r, h, n_local, eps, trials,
                stream_seed(seed, "radon-cell", row));
            const double se = std::sqrt(
                std::max(result.radon_delta * (1.0 - result.radon_delta),
                         1e-12) /
                static_cast<double>(trials));
            const bool flagged = result.radon_delta > result.bound + 3.0 * se;
            out << "radon,,,,,," << r << ',' << h << ',' << n_local << ','
                << format_double(eps) << ','
                << format_double(result.local_delta) << ','
                << format_double(result.bound) << ','
                << format_double(result.radon_delta) << ','
                << format_double(se) << ',' << (flagged ? 1 : 0) << '\n';
            ++row;
        }
    }
    return out.str();
}

std::string summarize(const std::vector<std::string>& csv_paths) {
    std::ostringstream out;
    out << "file,rounds,final_train_mean,final_test_mean,final_test_lo,"
           "final_test_hi,final_agg_test,messages\n";
    for (const auto& path : csv_paths) {
        const auto records = read_metrics_csv(path);
        if (records.empty())
            throw IngestionError(path + ": no data rows to summarize");
        const MetricsRecord& last = records.back();
        out << path << ',' << last.round << ','
            << format_double(last.train_mean) << ','
            << format_double(last.test_mean) << ','
            << format_double(last.test_lo) << ','
            << format_double(last.test_hi) << ',';
        if (last.agg_test) out << format_double(*last.agg_test);
        out << ',' << last.messages << '\n';
    }
    return out.str();
}

void datagen_to_csv(const KeyValueConfig& kv, const std::string& out_path,
                    std::optional<std::uint64_t> seed_override) {
    DataConfig data = parse_data_section(kv);
    if (!data.synthetic)
        throw ConfigError(kv.where("data.source") +
                          ": datagen requires data.source = synthetic");
    data.synth.seed = seed_override ? *seed_override
                                    : kv.get_u64("run.seed", 0);
    data.synth.validate();
    const Dataset pool = generate_synthetic(data.synth);

    const std::filesystem::path p(out_path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    save_csv(pool, out_path);
}

} // namespace feddc
