#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "feddc/config.hpp"
#include "feddc/errors.hpp"
#include "feddc/harness.hpp"
#include "feddc/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitContract = 3;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool csv_header = false;
    std::vector<std::string> inputs;
};

void write_or_print(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) throw feddc::ConfigError("cannot open for writing: " + out);
    file << text;
}

int dispatch(const std::string& command, const CommonArgs& args) {
    using namespace feddc;

    if (command == "run") {
        KeyValueConfig kv = KeyValueConfig::parse_file(args.config_path);
        if (!args.out.empty()) kv.set("run.out", args.out);
        if (args.seed) kv.set("run.seed", std::to_string(*args.seed));
        if (args.csv_header) kv.set("data.header", "true");
        const ExperimentConfig config = parse_experiment_config(kv);
        const RunResult result = run_experiment_files(config);
        std::cout << "wrote " << result.csv_path << " ("
                  << result.records.size() << " rows) and "
                  << result.manifest_path << "\n";
        return kExitOk;
    }
    if (command == "sweep") {
        const std::string out_dir = args.out.empty() ? "sweep_out" : args.out;
        const std::string summary =
            run_sweep(args.config_path, out_dir, args.seed);
        std::cout << summary;
        return kExitOk;
    }
    if (command == "theory-check") {
        const KeyValueConfig kv = KeyValueConfig::parse_file(args.config_path);
        write_or_print(theory_check(kv), args.out);
        return kExitOk;
    }
    if (command == "datagen") {
        const KeyValueConfig kv = KeyValueConfig::parse_file(args.config_path);
        const std::string out = args.out.empty() ? "dataset.csv" : args.out;
        datagen_to_csv(kv, out, args.seed);
        std::cout << "wrote " << out << "\n";
        return kExitOk;
    }
    if (command == "summarize") {
        if (args.inputs.empty())
            throw ConfigError("summarize needs at least one metrics CSV");
        write_or_print(summarize(args.inputs), args.out);
        return kExitOk;
    }
    throw ConfigError("unknown command: " + command);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "feddc: federated daisy-chaining simulator and theory validator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", feddc::kVersion);

    CommonArgs args;

    auto* run = app.add_subcommand("run", "Run one experiment from a config");
    run->add_option("--config", args.config_path, "Experiment config file")
        ->required();
    run->add_option("--out", args.out, "Metrics CSV destination");
    run->add_option("--seed", args.seed, "Override the master seed");
    run->add_flag("--header", args.csv_header,
                  "Ingested data CSV starts with a header row");

    auto* sweep = app.add_subcommand(
        "sweep", "Run the cross-product described by the [sweep] section");
    sweep->add_option("--config", args.config_path, "Experiment config file")
        ->required();
    sweep->add_option("--out", args.out, "Output directory (default sweep_out)");
    sweep->add_option("--seed", args.seed, "Override the master seed");

    auto* theory = app.add_subcommand(
        "theory-check", "Validate the chain-coverage and Radon bounds");
    theory->add_option("--config", args.config_path, "Theory grid config")
        ->required();
    theory->add_option("--out", args.out,
                       "Write the table here instead of stdout");

    auto* datagen = app.add_subcommand(
        "datagen", "Generate a synthetic dataset CSV from the [data] section");
    datagen->add_option("--config", args.config_path, "Config with [data]")
        ->required();
    datagen->add_option("--out", args.out,
                        "CSV destination (default dataset.csv)");
    datagen->add_option("--seed", args.seed, "Override the data seed");

    auto* summarize = app.add_subcommand(
        "summarize", "Digest final rows of previously written metrics CSVs");
    summarize->add_option("csv", args.inputs, "Metrics CSV files")
        ->expected(-1);
    summarize->add_option("--out", args.out, "Write the summary here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        return dispatch(command, args);
    } catch (const feddc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const feddc::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }
}
