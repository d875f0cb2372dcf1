#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "unleak/attack.hpp"
#include "unleak/farm.hpp"
#include "unleak/metrics.hpp"

namespace unleak {

struct DatasetConfig {
    std::string path;
    std::string label_column;
    std::set<std::string> categorical_columns;
    std::set<std::string> drop_columns;
};

/// Declarative description of one end-to-end experiment. Parsed from JSON;
/// unknown keys are rejected.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::optional<DatasetConfig> shadow_dataset;  // transfer runs train shadows elsewhere
    double target_fraction = 0.5;    // share of rows for the target side
    double positive_fraction = 0.8;  // share of each side used as positive pool
    std::uint64_t seed = 0;
    FarmConfig target;
    FarmConfig shadow;
    std::vector<ModelKind> attack_kinds;
    std::vector<FeatureMethod> feature_methods;
    HyperParams attack_params;
    Defense defense;
    std::string output_dir;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Metrics of one (attack kind, feature method) cell of the grid.
struct GridRow {
    ModelKind attack_kind = ModelKind::RandomForest;
    FeatureMethod method = FeatureMethod::SortedDiff;
    MetricsReport report;
    std::vector<double> per_original_auc;  // NaN where an original has one label only
};

struct PhaseTimings {
    double load_encode_ms = 0.0;
    double shadow_farm_ms = 0.0;
    double target_farm_ms = 0.0;
    double attack_ms = 0.0;
    double total_ms = 0.0;
};

struct ResultRecord {
    nlohmann::json config_echo;
    std::vector<GridRow> rows;
    std::vector<double> target_overfitting;  // per target original
    std::vector<double> shadow_overfitting;  // per shadow original
    PhaseTimings timings;

    /// Timings are excluded when comparing records for determinism.
    nlohmann::json to_json(bool include_timings = true) const;
    static ResultRecord from_json(const nlohmann::json& j);
};

/// Runs the full pipeline: load/encode, split, build both farms, train attack
/// and baseline on shadow cases, score target cases, compute metrics for every
/// grid cell. When `cache_dir` is non-empty, farms are reloaded from (or saved
/// to) per-key subdirectories.
ResultRecord run_experiment(const ExperimentConfig& config, std::size_t workers = 1,
                            const std::string& cache_dir = "");

/// CSV flattening: one row per grid cell, stable column order.
std::string report_csv(const ResultRecord& record);

/// Writes the record as "json" or "csv".
void write_report(const ResultRecord& record, const std::string& format, const std::string& path);

}  // namespace unleak
