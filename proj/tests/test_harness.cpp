#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feddc/config.hpp"
#include "feddc/errors.hpp"
#include "feddc/harness.hpp"

using namespace feddc;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string basic_experiment_text(const std::string& out) {
    return
        "[data]\n"
        "source = synthetic\n"
        "n_samples = 240\n"
        "n_features = 4\n"
        "n_informative = 3\n"
        "n_redundant = 1\n"
        "class_sep = 1.5\n"
        "test_fraction = 0.25\n"
        "[learner]\n"
        "family = linear\n"
        "learning_rate = 0.05\n"
        "batch_size = 4\n"
        "[protocol]\n"
        "variant = feddc\n"
        "d = 1\n"
        "b = 5\n"
        "rounds = 12\n"
        "clients = 4\n"
        "aggregator = mean\n"
        "eval_every = 4\n"
        "[run]\n"
        "seed = 11\n"
        "out = " + out + "\n";
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("parse_experiment_config fills every field") {
    const auto kv = KeyValueConfig::parse_string(
        basic_experiment_text("x.csv"), "exp.cfg");
    const ExperimentConfig cfg = parse_experiment_config(kv);
    CHECK(cfg.data.synthetic);
    CHECK(cfg.data.synth.n_samples == 240);
    CHECK(cfg.data.synth.n_features == 4);
    CHECK(cfg.data.synth.n_informative == 3);
    CHECK(cfg.data.test_fraction == doctest::Approx(0.25));
    CHECK(cfg.learner.family == LearnerFamily::linear);
    CHECK(cfg.learner.learning_rate == doctest::Approx(0.05));
    CHECK(cfg.learner.batch_size == 4);
    CHECK(cfg.protocol.variant == Variant::feddc);
    CHECK(cfg.protocol.daisy_period == 1);
    CHECK(cfg.protocol.aggregation_period == 5);
    CHECK(cfg.protocol.rounds == 12);
    CHECK(cfg.protocol.clients == 4);
    CHECK(cfg.protocol.eval_every == 4);
    CHECK(cfg.protocol.seed == 11);
    CHECK(cfg.out_path == "x.csv");
}

TEST_CASE("defaults are sensible when keys are omitted") {
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 100\nn_features = 5\n"
        "[protocol]\nrounds = 3\nclients = 2\n",
        "min.cfg");
    const ExperimentConfig cfg = parse_experiment_config(kv);
    CHECK(cfg.data.synth.n_informative == 5); // informative defaults to all
    CHECK(cfg.learner.family == LearnerFamily::linear);
    CHECK(cfg.protocol.variant == Variant::feddc);
    CHECK(cfg.protocol.daisy_period == 1);
    CHECK(cfg.protocol.seed == 0);
    CHECK_FALSE(cfg.protocol.privacy.enabled);
    CHECK(cfg.out_path == "metrics.csv");
}

TEST_CASE("mlp hidden sizes parse from the list form") {
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 64\nn_features = 5\n"
        "[learner]\nfamily = mlp\nhidden = 8, 4\n"
        "[protocol]\nrounds = 2\nclients = 2\n",
        "mlp.cfg");
    const ExperimentConfig cfg = parse_experiment_config(kv);
    CHECK(cfg.learner.family == LearnerFamily::mlp);
    CHECK(cfg.learner.hidden_sizes == std::vector<std::size_t>{8, 4});

    // Omitting hidden keeps the standard stack.
    const auto kv2 = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 64\nn_features = 5\n"
        "[learner]\nfamily = mlp\n"
        "[protocol]\nrounds = 2\nclients = 2\n",
        "mlp2.cfg");
    const ExperimentConfig cfg2 = parse_experiment_config(kv2);
    CHECK(cfg2.learner.hidden_sizes ==
          std::vector<std::size_t>{100, 50, 20});
}

TEST_CASE("unknown keys are rejected with their source location") {
    auto text = basic_experiment_text("x.csv");
    text += "[protocol]_typo = 1\n"; // parse error at the section header
    CHECK_THROWS_AS(
        (void)KeyValueConfig::parse_string(text, "bad.cfg"), ConfigError);

    const auto kv = KeyValueConfig::parse_string(
        basic_experiment_text("x.csv") + "mystery = 1\n", "bad2.cfg");
    CHECK_THROWS_AS((void)parse_experiment_config(kv), ConfigError);

    const auto kv2 = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 100\nn_features = 5\n"
        "weird_knob = 3\n[protocol]\nrounds = 1\nclients = 2\n",
        "bad3.cfg");
    try {
        (void)parse_experiment_config(kv2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("weird_knob") != std::string::npos);
        CHECK(msg.find("bad3.cfg:5") != std::string::npos);
    }
}

TEST_CASE("aggregation period zero means the coordinator never fires") {
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 100\nn_features = 4\n"
        "[protocol]\nvariant = feddc\nd = 1\nb = 0\nrounds = 10\nclients = 2\n",
        "nob.cfg");
    const ExperimentConfig cfg = parse_experiment_config(kv);
    CHECK(cfg.protocol.aggregation_period == 11); // resolved past the horizon

    BuiltData data = build_data(cfg.data, cfg.protocol.clients, 3);
    const auto records = run_experiment(cfg.protocol, cfg.learner,
                                        data.shards, data.eval_set);
    for (const auto& r : records) CHECK_FALSE(r.agg_test.has_value());
}

TEST_CASE("build_data splits evenly when n_per_client is omitted") {
    DataConfig data;
    data.synth.n_samples = 103; // odd leftover stays unused
    data.synth.n_features = 4;
    data.synth.n_informative = 4;
    data.synth.n_redundant = 0;
    data.test_fraction = 0.2;
    const BuiltData built = build_data(data, 4, 9);
    // 103 - round(0.2*103)=21 -> 82 train -> 20 per client.
    CHECK(built.eval_set.size() == 21);
    REQUIRE(built.shards.size() == 4);
    for (const auto& s : built.shards) CHECK(s.size() == 20);
}

TEST_CASE("build_data respects an explicit shard size and capacity") {
    DataConfig data;
    data.synth.n_samples = 100;
    data.synth.n_features = 4;
    data.synth.n_informative = 4;
    data.synth.n_redundant = 0;
    data.test_fraction = 0.5;
    data.n_per_client = 10;
    const BuiltData built = build_data(data, 5, 9);
    for (const auto& s : built.shards) CHECK(s.size() == 10);

    data.n_per_client = 20; // 5 * 20 > 50 train samples
    CHECK_THROWS_AS((void)build_data(data, 5, 9), ConfigError);
}

TEST_CASE("client count does not perturb the pooled sample set") {
    // The m = 1 arm of a comparison must train on exactly the union of the
    // m = 4 arm's shards: partitioning slices one seed-determined shuffle.
    DataConfig data;
    data.synth.n_samples = 96;
    data.synth.n_features = 4;
    data.synth.n_informative = 4;
    data.synth.n_redundant = 0;
    data.synth.seed = 5;
    data.test_fraction = 0.5;

    data.n_per_client = 12;
    const BuiltData fine = build_data(data, 4, 9);
    data.n_per_client = 48;
    const BuiltData pooled = build_data(data, 1, 9);

    std::multiset<std::vector<double>> union_fine, single;
    for (const auto& shard : fine.shards)
        for (const auto& s : shard.samples) union_fine.insert(s.features);
    for (const auto& s : pooled.shards[0].samples) single.insert(s.features);
    CHECK(union_fine == single);
}

TEST_CASE("csv-backed data config loads and shards a file") {
    const auto dir = temp_dir("feddc_harness_csv");
    const auto csv = dir / "input.csv";
    {
        Dataset d;
        d.dim = 2;
        for (int i = 0; i < 40; ++i) {
            Sample s;
            s.features = {static_cast<double>(i), static_cast<double>(-i)};
            s.label = i % 2;
            d.samples.push_back(s);
        }
        save_csv(d, csv);
    }
    DataConfig data;
    data.synthetic = false;
    data.csv_path = csv.string();
    data.test_fraction = 0.25;
    const BuiltData built = build_data(data, 2, 3);
    CHECK(built.eval_set.size() == 10);
    CHECK(built.shards.size() == 2);
    CHECK(built.shards[0].size() == 15);
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment_files writes csv and manifest; manifest re-runs") {
    const auto dir = temp_dir("feddc_harness_run");
    const auto out = (dir / "m.csv").string();
    const auto kv = KeyValueConfig::parse_string(
        basic_experiment_text(out), "exp.cfg");
    const ExperimentConfig cfg = parse_experiment_config(kv);

    const RunResult res = run_experiment_files(cfg);
    CHECK(res.csv_path == out);
    CHECK(std::filesystem::exists(res.csv_path));
    CHECK(std::filesystem::exists(res.manifest_path));
    CHECK(res.manifest_path == out + ".manifest");
    const std::string first = read_file(res.csv_path);
    CHECK(!res.records.empty());

    // Re-running from the manifest reproduces the CSV byte for byte.
    const auto manifest =
        KeyValueConfig::parse_file(res.manifest_path);
    ExperimentConfig replay = parse_experiment_config(manifest);
    replay.out_path = (dir / "m2.csv").string();
    const RunResult res2 = run_experiment_files(replay);
    CHECK(read_file(res2.csv_path) == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest echoes resolved defaults and the version") {
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 100\nn_features = 5\n"
        "[protocol]\nrounds = 3\nclients = 2\n",
        "min.cfg");
    const auto manifest = make_manifest(parse_experiment_config(kv));
    CHECK(manifest.has("meta.version"));
    CHECK(manifest.get_string("learner.family") == "linear");
    CHECK(manifest.get_count("protocol.d") == 1);
    CHECK(manifest.get_count("protocol.b") >= 1);
    CHECK(manifest.get_string("privacy.enabled") == "false");
    CHECK(manifest.get_u64("run.seed") == 0);
    // And the echo itself parses cleanly back into the same experiment.
    const auto reparsed = KeyValueConfig::parse_string(
        manifest.serialize(), "manifest");
    CHECK_NOTHROW((void)parse_experiment_config(reparsed));
}

TEST_CASE("enumerate_sweep produces the cross product in order") {
    const auto kv = KeyValueConfig::parse_string(
        "[sweep]\nd = 1, 2\nsigma = 0.0, 0.5\n", "sw.cfg");
    const auto cells = enumerate_sweep(kv);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].name == "d-1_sigma-0.0");
    CHECK(cells[1].name == "d-1_sigma-0.5");
    CHECK(cells[2].name == "d-2_sigma-0.0");
    CHECK(cells[3].name == "d-2_sigma-0.5");
    CHECK(cells[0].assignment ==
          std::vector<std::pair<std::string, std::string>>{
              {"d", "1"}, {"sigma", "0.0"}});
}

TEST_CASE("sweep without a sweep section is the single base cell") {
    const auto kv = KeyValueConfig::parse_string("x = 1\n", "sw.cfg");
    const auto cells = enumerate_sweep(kv);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].assignment.empty());
}

TEST_CASE("sweep fields outside the supported set are rejected") {
    const auto kv = KeyValueConfig::parse_string(
        "[sweep]\nrounds = 1, 2\n", "sw.cfg");
    CHECK_THROWS_AS((void)enumerate_sweep(kv), ConfigError);
}

TEST_CASE("run_sweep writes per-cell outputs and a summary") {
    const auto dir = temp_dir("feddc_harness_sweep");
    const auto cfg_path = (dir / "sweep.cfg").string();
    {
        std::ofstream out(cfg_path);
        out << basic_experiment_text("ignored.csv");
        out << "[sweep]\nvariant = feddc, fedavg\nseed = 1, 2\n";
    }
    const std::string summary =
        run_sweep(cfg_path, (dir / "out").string(), std::nullopt);
    CHECK(summary.find("cell,seed,variant,rounds") == 0);

    std::size_t lines = 0;
    for (char c : summary)
        if (c == '\n') ++lines;
    CHECK(lines == 5); // header + 4 cells

    CHECK(std::filesystem::exists(dir / "out" / "summary.csv"));
    std::size_t csvs = 0, manifests = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(dir / "out")) {
        const auto name = entry.path().filename().string();
        if (name == "summary.csv") continue;
        if (name.ends_with(".manifest"))
            ++manifests;
        else if (name.ends_with(".csv"))
            ++csvs;
    }
    CHECK(csvs == 4);
    CHECK(manifests == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("theory_check emits the documented table") {
    const auto kv = KeyValueConfig::parse_string(
        "[lemma1]\nm = 2\nk = 2\ndelta = 0.5\ntrials = 20000\nseed = 3\n"
        "[radon]\nr = 3\nh = 1\nn_local = 5\neps = 0.5731\ntrials = 5000\n"
        "seed = 4\n",
        "tc.cfg");
    const std::string table = theory_check(kv);
    std::istringstream in(table);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "check,m,k,delta,d,T,r,h,n_local,eps,local_delta,bound,empirical,"
          "stderr,flag");
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 2); // one lemma1 cell + one radon cell
    CHECK(rows[0].find("lemma1") == 0);
    CHECK(rows[1].find("radon") == 0);
}

TEST_CASE("theory_check with no sections yields just the header") {
    const auto kv = KeyValueConfig::parse_string("", "tc.cfg");
    const std::string table = theory_check(kv);
    std::size_t lines = 0;
    for (char c : table)
        if (c == '\n') ++lines;
    CHECK(lines == 1);
}

TEST_CASE("summarize digests final rows of metrics files") {
    const auto dir = temp_dir("feddc_harness_sum");
    const auto out = (dir / "m.csv").string();
    const auto kv = KeyValueConfig::parse_string(
        basic_experiment_text(out), "exp.cfg");
    const RunResult res = run_experiment_files(parse_experiment_config(kv));
    const std::string digest = summarize({res.csv_path});
    CHECK(digest.find("file,rounds,final_train_mean") == 0);
    CHECK(digest.find(out) != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("accuracy is exactly one minus the zero-one risk") {
    DataConfig data;
    data.synth.n_samples = 60;
    data.synth.n_features = 3;
    data.synth.n_informative = 3;
    data.synth.n_redundant = 0;
    const BuiltData built = build_data(data, 2, 1);
    LearnerSpec spec;
    Rng rng(1);
    Model m = init_model(spec, 3, rng);
    for (std::size_t i = 0; i < m.params.size(); ++i)
        m.params[i] = rng.uniform(-1.0, 1.0);
    const double risk = empirical_risk(m, built.eval_set, Loss::zero_one);
    CHECK(accuracy(m, built.eval_set) == 1.0 - risk); // bit-exact identity
}

TEST_CASE("datagen_to_csv writes a loadable dataset") {
    const auto dir = temp_dir("feddc_harness_dg");
    const auto out = (dir / "synth.csv").string();
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = synthetic\nn_samples = 50\nn_features = 6\n"
        "n_informative = 3\n[run]\nseed = 12\n",
        "dg.cfg");
    datagen_to_csv(kv, out, std::nullopt);
    const Dataset d = load_csv(out);
    CHECK(d.size() == 50);
    CHECK(d.dim == 6);

    // A seed override changes the data.
    const auto out2 = (dir / "synth2.csv").string();
    datagen_to_csv(kv, out2, 99);
    const Dataset d2 = load_csv(out2);
    bool differs = false;
    for (std::size_t i = 0; i < d.size() && !differs; ++i)
        differs = d.samples[i].features != d2.samples[i].features;
    CHECK(differs);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv data source requires a path") {
    const auto kv = KeyValueConfig::parse_string(
        "[data]\nsource = csv\n[protocol]\nrounds = 1\nclients = 2\n",
        "nc.cfg");
    CHECK_THROWS_AS((void)parse_experiment_config(kv), ConfigError);
}

TEST_CASE("experiment_from_file applies overrides") {
    const auto dir = temp_dir("feddc_harness_override");
    const auto cfg_path = (dir / "exp.cfg").string();
    {
        std::ofstream out(cfg_path);
        out << basic_experiment_text("orig.csv");
    }
    const ExperimentConfig cfg =
        experiment_from_file(cfg_path, (dir / "new.csv").string(), 77);
    CHECK(cfg.out_path == (dir / "new.csv").string());
    CHECK(cfg.protocol.seed == 77);
    const ExperimentConfig plain = experiment_from_file(cfg_path, "", std::nullopt);
    CHECK(plain.out_path == "orig.csv");
    CHECK(plain.protocol.seed == 11);
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
