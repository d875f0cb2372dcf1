#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "unleak/dataset.hpp"
#include "unleak/errors.hpp"
#include "unleak/experiment.hpp"
#include "unleak/rng.hpp"
#include "unleak/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_subcommand(const std::string& config_path, bool seed_set, std::uint64_t seed,
                   std::size_t workers, const std::string& cache_dir, std::string output,
                   const std::string& format) {
    auto config = unleak::load_config(config_path);
    if (seed_set) config.seed = seed;
    const auto record = unleak::run_experiment(config, workers, cache_dir);
    if (output.empty()) {
        if (format == "json")
            std::cout << record.to_json().dump(2) << "\n";
        else
            std::cout << unleak::report_csv(record);
    } else {
        unleak::write_report(record, format, output);
        std::cerr << "wrote " << output << "\n";
    }
    return 0;
}

int prepare_subcommand(const std::string& config_path, bool seed_set, std::uint64_t seed,
                       const std::string& output_dir) {
    auto config = unleak::load_config(config_path);
    if (seed_set) config.seed = seed;
    fs::create_directories(output_dir);

    auto ds = std::make_shared<unleak::EncodedDataset>(unleak::encode(
        unleak::load_csv(config.dataset.path, config.dataset.label_column,
                         config.dataset.categorical_columns),
        config.dataset.label_column, config.dataset.categorical_columns,
        config.dataset.drop_columns));
    unleak::save_dataset(*ds, (fs::path(output_dir) / "encoded.bin").string());

    const double tf = config.target_fraction;
    const double pf = config.positive_fraction;
    const auto parts = unleak::split_disjoint(
        unleak::DatasetPtr(ds),
        {tf * pf, tf * (1.0 - pf), (1.0 - tf) * pf, (1.0 - tf) * (1.0 - pf)},
        unleak::mix_seed(config.seed, 11));

    json splits;
    splits["schema_version"] = 1;
    splits["seed"] = config.seed;
    splits["rows"] = ds->num_rows();
    splits["num_classes"] = ds->num_classes;
    splits["feature_dim"] = ds->feature_dim;
    const char* names[] = {"target_positive", "target_negative", "shadow_positive",
                           "shadow_negative"};
    for (std::size_t i = 0; i < 4; ++i) splits[names[i]] = parts[i].indices;
    std::ofstream f(fs::path(output_dir) / "splits.json");
    if (!f) throw unleak::DataError("cannot write splits.json");
    f << splits.dump(2) << "\n";
    std::cerr << "wrote " << output_dir << "/encoded.bin and splits.json\n";
    return 0;
}

int report_subcommand(const std::string& input, const std::string& format, std::string output) {
    std::ifstream f(input);
    if (!f) throw unleak::DataError("cannot open " + input);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw unleak::DataError(std::string("bad result JSON: ") + e.what());
    }
    const auto record = unleak::ResultRecord::from_json(j);
    if (output.empty()) {
        if (format == "json")
            std::cout << record.to_json().dump(2) << "\n";
        else
            std::cout << unleak::report_csv(record);
    } else {
        unleak::write_report(record, format, output);
        std::cerr << "wrote " << output << "\n";
    }
    return 0;
}

int synth_subcommand(std::size_t rows, std::uint64_t seed, const std::string& output) {
    const auto table = unleak::synth_census(rows, seed);
    unleak::write_csv(table, output);
    std::cerr << "wrote " << output << " (" << table.num_rows() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unleak: measures membership leakage caused by machine unlearning"};
    app.require_subcommand(1);

    std::string config_path, cache_dir, output, format = "json", input;
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0 = available parallelism
    std::size_t rows = 20000;

    auto* run = app.add_subcommand("run", "run an experiment end to end");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    auto* run_seed = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--workers", workers, "worker threads (default: available parallelism)");
    run->add_option("--cache-dir", cache_dir, "farm cache directory");
    run->add_option("--output", output, "output file (default: stdout)");
    run->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

    auto* prepare = app.add_subcommand("prepare", "encode a dataset and persist the splits");
    prepare->add_option("--config", config_path, "experiment config JSON")->required();
    auto* prep_seed = prepare->add_option("--seed", seed, "override the config seed");
    std::string prep_out = "prepared";
    prepare->add_option("--output", prep_out, "output directory");

    auto* report = app.add_subcommand("report", "re-render a persisted result");
    report->add_option("--input", input, "result JSON produced by run")->required();
    report->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    report->add_option("--output", output, "output file (default: stdout)");

    auto* synth = app.add_subcommand("synth", "generate the synthetic census CSV");
    synth->add_option("--rows", rows, "row count");
    synth->add_option("--seed", seed, "generator seed");
    std::string synth_out = "census.csv";
    synth->add_option("--output", synth_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_subcommand(config_path, !run_seed->empty(), seed, workers, cache_dir,
                                  output, format);
        if (prepare->parsed())
            return prepare_subcommand(config_path, !prep_seed->empty(), seed, prep_out);
        if (report->parsed()) return report_subcommand(input, format, output);
        if (synth->parsed()) return synth_subcommand(rows, seed, synth_out);
    } catch (const unleak::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const unleak::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
