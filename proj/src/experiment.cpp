#include "unleak/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "unleak/errors.hpp"
#include "unleak/rng.hpp"
#include "unleak/thread_pool.hpp"

namespace unleak {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Fail-fast against config typos: every object must only carry known keys.
void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

DatasetConfig parse_dataset_config(const json& j, const std::string& where) {
    reject_unknown_keys(j, {"path", "label_column", "categorical_columns", "drop_columns"},
                        where);
    DatasetConfig c;
    c.path = j.at("path").get<std::string>();
    c.label_column = j.at("label_column").get<std::string>();
    if (j.contains("categorical_columns"))
        for (const auto& v : j.at("categorical_columns"))
            c.categorical_columns.insert(v.get<std::string>());
    if (j.contains("drop_columns"))
        for (const auto& v : j.at("drop_columns")) c.drop_columns.insert(v.get<std::string>());
    return c;
}

HyperParams parse_params(const json& j, const std::string& where, HyperParams base) {
    reject_unknown_keys(j,
                        {"lr_l2", "lr_epochs", "dt_max_leaf_nodes", "rf_n_estimators",
                         "rf_min_samples_leaf", "mlp_hidden", "mlp_learning_rate", "mlp_l2",
                         "mlp_epochs"},
                        where);
    if (j.contains("lr_l2")) base.lr_l2 = j.at("lr_l2").get<double>();
    if (j.contains("lr_epochs")) base.lr_epochs = j.at("lr_epochs").get<int>();
    if (j.contains("dt_max_leaf_nodes"))
        base.dt_max_leaf_nodes = j.at("dt_max_leaf_nodes").get<int>();
    if (j.contains("rf_n_estimators")) base.rf_n_estimators = j.at("rf_n_estimators").get<int>();
    if (j.contains("rf_min_samples_leaf"))
        base.rf_min_samples_leaf = j.at("rf_min_samples_leaf").get<int>();
    if (j.contains("mlp_hidden")) base.mlp_hidden = j.at("mlp_hidden").get<int>();
    if (j.contains("mlp_learning_rate"))
        base.mlp_learning_rate = j.at("mlp_learning_rate").get<double>();
    if (j.contains("mlp_l2")) base.mlp_l2 = j.at("mlp_l2").get<double>();
    if (j.contains("mlp_epochs")) base.mlp_epochs = j.at("mlp_epochs").get<int>();
    return base;
}

FarmConfig parse_farm_config(const json& j, const std::string& where) {
    reject_unknown_keys(j,
                        {"n_originals", "samples_per_original", "n_unlearned_per_original",
                         "group_size", "method", "sisa_k", "model_kind", "params"},
                        where);
    FarmConfig c;
    c.n_originals = j.at("n_originals").get<std::size_t>();
    c.samples_per_original = j.at("samples_per_original").get<std::size_t>();
    c.n_unlearned_per_original = j.at("n_unlearned_per_original").get<std::size_t>();
    if (j.contains("group_size")) c.group_size = j.at("group_size").get<std::size_t>();
    if (j.contains("method"))
        c.method = unlearn_method_from_string(j.at("method").get<std::string>());
    if (j.contains("sisa_k")) c.sisa_k = j.at("sisa_k").get<int>();
    c.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    if (j.contains("params")) c.params = parse_params(j.at("params"), where + ".params", {});
    return c;
}

json params_to_json(const HyperParams& p) {
    return json{{"lr_l2", p.lr_l2},
                {"lr_epochs", p.lr_epochs},
                {"dt_max_leaf_nodes", p.dt_max_leaf_nodes},
                {"rf_n_estimators", p.rf_n_estimators},
                {"rf_min_samples_leaf", p.rf_min_samples_leaf},
                {"mlp_hidden", p.mlp_hidden},
                {"mlp_learning_rate", p.mlp_learning_rate},
                {"mlp_l2", p.mlp_l2},
                {"mlp_epochs", p.mlp_epochs}};
}

json dataset_config_to_json(const DatasetConfig& c) {
    return json{{"path", c.path},
                {"label_column", c.label_column},
                {"categorical_columns", c.categorical_columns},
                {"drop_columns", c.drop_columns}};
}

json farm_config_to_json(const FarmConfig& c) {
    return json{{"n_originals", c.n_originals},
                {"samples_per_original", c.samples_per_original},
                {"n_unlearned_per_original", c.n_unlearned_per_original},
                {"group_size", c.group_size},
                {"method", to_string(c.method)},
                {"sisa_k", c.sisa_k},
                {"model_kind", to_string(c.model_kind)},
                {"params", params_to_json(c.params)}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    reject_unknown_keys(j,
                        {"schema_version", "dataset", "shadow_dataset", "split", "seed",
                         "target", "shadow", "attack", "output_dir"},
                        "config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
        throw ConfigError("unsupported config schema_version");

    ExperimentConfig c;
    try {
        c.dataset = parse_dataset_config(j.at("dataset"), "dataset");
        if (j.contains("shadow_dataset"))
            c.shadow_dataset = parse_dataset_config(j.at("shadow_dataset"), "shadow_dataset");
        if (j.contains("split")) {
            reject_unknown_keys(j.at("split"), {"target_fraction", "positive_fraction"},
                                "split");
            if (j.at("split").contains("target_fraction"))
                c.target_fraction = j.at("split").at("target_fraction").get<double>();
            if (j.at("split").contains("positive_fraction"))
                c.positive_fraction = j.at("split").at("positive_fraction").get<double>();
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        c.target = parse_farm_config(j.at("target"), "target");
        c.shadow = parse_farm_config(j.at("shadow"), "shadow");

        const json& attack = j.at("attack");
        reject_unknown_keys(attack, {"kinds", "methods", "params", "defense"}, "attack");
        for (const auto& v : attack.at("kinds"))
            c.attack_kinds.push_back(model_kind_from_string(v.get<std::string>()));
        for (const auto& v : attack.at("methods"))
            c.feature_methods.push_back(feature_method_from_string(v.get<std::string>()));
        if (attack.contains("params"))
            c.attack_params = parse_params(attack.at("params"), "attack.params", {});
        if (attack.contains("defense")) {
            reject_unknown_keys(attack.at("defense"), {"kind", "k"}, "attack.defense");
            const int k = attack.at("defense").contains("k")
                              ? attack.at("defense").at("k").get<int>()
                              : 1;
            c.defense =
                defense_from_string(attack.at("defense").at("kind").get<std::string>(), k);
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }

    if (c.target_fraction <= 0.0 || c.target_fraction >= 1.0)
        throw ConfigError("target_fraction must be in (0,1)");
    if (c.positive_fraction <= 0.0 || c.positive_fraction >= 1.0)
        throw ConfigError("positive_fraction must be in (0,1)");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
    json j{{"schema_version", 1},
           {"dataset", dataset_config_to_json(c.dataset)},
           {"split",
            {{"target_fraction", c.target_fraction},
             {"positive_fraction", c.positive_fraction}}},
           {"seed", c.seed},
           {"target", farm_config_to_json(c.target)},
           {"shadow", farm_config_to_json(c.shadow)},
           {"attack",
            {{"kinds", json::array()},
             {"methods", json::array()},
             {"params", params_to_json(c.attack_params)},
             {"defense",
              {{"kind", c.defense.kind == Defense::Kind::None       ? "none"
                        : c.defense.kind == Defense::Kind::TopK     ? "top_k"
                                                                    : "label_only"},
               {"k", c.defense.k}}}}}};
    for (ModelKind k : c.attack_kinds) j["attack"]["kinds"].push_back(to_string(k));
    for (FeatureMethod m : c.feature_methods) j["attack"]["methods"].push_back(to_string(m));
    if (c.shadow_dataset) j["shadow_dataset"] = dataset_config_to_json(*c.shadow_dataset);
    if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
    return j;
}

namespace {

// Seed streams local to the experiment pipeline.
constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kTargetFarmStream = 12;
constexpr std::uint64_t kShadowFarmStream = 13;
constexpr std::uint64_t kShadowNegStream = 14;
constexpr std::uint64_t kTargetNegStream = 15;
constexpr std::uint64_t kAttackStream = 16;
constexpr std::uint64_t kBaselineStream = 17;

struct SidePools {
    SubsetHandle positive;
    SubsetHandle negative;
};

Farm build_or_load_farm(const SubsetHandle& pool, const FarmConfig& config, std::size_t workers,
                        const std::string& cache_dir) {
    if (cache_dir.empty()) return build_farm(pool, config, workers);
    const fs::path dir = fs::path(cache_dir) / farm_cache_key(config, pool);
    if (fs::exists(dir / "manifest.json")) return load_farm(dir.string(), pool.parent);
    Farm farm = build_farm(pool, config, workers);
    save_farm(farm, dir.string());
    return farm;
}

std::vector<double> per_original_auc(const Farm& target_farm,
                                     const std::vector<CasePair>& cases,
                                     const std::vector<double>& scores) {
    std::vector<double> out;
    for (std::size_t i = 0; i < target_farm.originals.size(); ++i) {
        std::vector<double> s;
        std::vector<bool> l;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            if (cases[c].origin_original != i) continue;
            s.push_back(scores[c]);
            l.push_back(cases[c].is_positive);
        }
        bool has_pos = false, has_neg = false;
        for (bool b : l) (b ? has_pos : has_neg) = true;
        out.push_back(has_pos && has_neg ? auc(s, l)
                                         : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace

ResultRecord run_experiment(const ExperimentConfig& config, std::size_t workers,
                            const std::string& cache_dir) {
    if (workers == 0) workers = default_workers();
    if (config.attack_kinds.empty() != config.feature_methods.empty())
        throw ConfigError("attack kinds and feature methods must both be given or both empty");

    const auto t_start = Clock::now();
    ResultRecord record;
    record.config_echo = config_to_json(config);

    // Load and split. With a shared dataset the four pools come from one
    // disjoint split; transfer runs split each dataset separately.
    auto t_phase = Clock::now();
    SidePools target_pools, shadow_pools;
    const bool transfer = config.shadow_dataset.has_value() &&
                          !(config.shadow_dataset->path == config.dataset.path &&
                            config.shadow_dataset->label_column == config.dataset.label_column);
    if (!transfer) {
        auto ds = std::make_shared<EncodedDataset>(
            encode(load_csv(config.dataset.path, config.dataset.label_column,
                            config.dataset.categorical_columns),
                   config.dataset.label_column, config.dataset.categorical_columns,
                   config.dataset.drop_columns));
        const double tf = config.target_fraction;
        const double pf = config.positive_fraction;
        auto parts = split_disjoint(
            DatasetPtr(ds),
            {tf * pf, tf * (1.0 - pf), (1.0 - tf) * pf, (1.0 - tf) * (1.0 - pf)},
            mix_seed(config.seed, kSplitStream));
        target_pools = {parts[0], parts[1]};
        shadow_pools = {parts[2], parts[3]};
    } else {
        auto target_ds = std::make_shared<EncodedDataset>(
            encode(load_csv(config.dataset.path, config.dataset.label_column,
                            config.dataset.categorical_columns),
                   config.dataset.label_column, config.dataset.categorical_columns,
                   config.dataset.drop_columns));
        auto shadow_ds = std::make_shared<EncodedDataset>(
            encode(load_csv(config.shadow_dataset->path, config.shadow_dataset->label_column,
                            config.shadow_dataset->categorical_columns),
                   config.shadow_dataset->label_column,
                   config.shadow_dataset->categorical_columns,
                   config.shadow_dataset->drop_columns));
        if (target_ds->num_classes != shadow_ds->num_classes)
            throw DataError("shadow and target datasets must share the class count");
        if (target_ds->feature_dim != shadow_ds->feature_dim)
            throw DataError("shadow and target datasets must share the feature dimension");
        const double pf = config.positive_fraction;
        auto t_parts = split_disjoint(DatasetPtr(target_ds), {pf, 1.0 - pf},
                                      mix_seed(config.seed, kSplitStream, 1));
        auto s_parts = split_disjoint(DatasetPtr(shadow_ds), {pf, 1.0 - pf},
                                      mix_seed(config.seed, kSplitStream, 2));
        target_pools = {t_parts[0], t_parts[1]};
        shadow_pools = {s_parts[0], s_parts[1]};
    }
    record.timings.load_encode_ms = ms_since(t_phase);

    // Farms.
    t_phase = Clock::now();
    FarmConfig shadow_config = config.shadow;
    shadow_config.seed = mix_seed(config.seed, kShadowFarmStream);
    const Farm shadow_farm =
        build_or_load_farm(shadow_pools.positive, shadow_config, workers, cache_dir);
    record.timings.shadow_farm_ms = ms_since(t_phase);

    t_phase = Clock::now();
    FarmConfig target_config = config.target;
    target_config.seed = mix_seed(config.seed, kTargetFarmStream);
    const Farm target_farm =
        build_or_load_farm(target_pools.positive, target_config, workers, cache_dir);
    record.timings.target_farm_ms = ms_since(t_phase);

    // Overfitting bookkeeping against the held-out negative pools.
    for (const auto& original : target_farm.originals)
        record.target_overfitting.push_back(original.original.accuracy_on(original.train_set) -
                                            original.original.accuracy_on(target_pools.negative));
    for (const auto& original : shadow_farm.originals)
        record.shadow_overfitting.push_back(original.original.accuracy_on(original.train_set) -
                                            original.original.accuracy_on(shadow_pools.negative));

    // Cases: shadow side trains the attack, target side evaluates it.
    t_phase = Clock::now();
    auto shadow_pos = positive_cases(shadow_farm);
    auto shadow_neg = negative_cases(shadow_farm, shadow_pools.negative, shadow_pos.size(),
                                     mix_seed(config.seed, kShadowNegStream));
    std::vector<CasePair> train_cases = std::move(shadow_pos);
    train_cases.insert(train_cases.end(), std::make_move_iterator(shadow_neg.begin()),
                       std::make_move_iterator(shadow_neg.end()));

    auto eval_cases = positive_cases(target_farm);
    {
        auto eval_neg = negative_cases(target_farm, target_pools.negative, eval_cases.size(),
                                       mix_seed(config.seed, kTargetNegStream));
        eval_cases.insert(eval_cases.end(), std::make_move_iterator(eval_neg.begin()),
                          std::make_move_iterator(eval_neg.end()));
    }

    // Grid: one baseline per attack kind, one attack model per grid cell.
    for (std::size_t ki = 0; ki < config.attack_kinds.size(); ++ki) {
        const ModelKind kind = config.attack_kinds[ki];
        const auto baseline =
            train_baseline(shadow_farm, shadow_pools.negative, config.defense, kind,
                           config.attack_params, mix_seed(config.seed, kBaselineStream, ki));
        std::vector<double> baseline_scores(eval_cases.size());
        for (std::size_t c = 0; c < eval_cases.size(); ++c)
            baseline_scores[c] = infer_baseline(baseline, eval_cases[c].posterior_original);

        for (std::size_t mi = 0; mi < config.feature_methods.size(); ++mi) {
            const FeatureMethod method = config.feature_methods[mi];
            const auto attack =
                train_attack(train_cases, method, config.defense, kind, config.attack_params,
                             mix_seed(config.seed, kAttackStream, ki * 1000 + mi));

            std::vector<EvalRecord> records(eval_cases.size());
            std::vector<double> attack_scores(eval_cases.size());
            parallel_for(eval_cases.size(), workers, [&](std::size_t c) {
                const auto& cp = eval_cases[c];
                attack_scores[c] = infer(attack, cp.posterior_original, cp.posterior_unlearned);
                records[c] = {cp.is_positive, attack_scores[c], baseline_scores[c]};
            });

            GridRow row;
            row.attack_kind = kind;
            row.method = method;
            row.report = evaluate_records(records);
            row.per_original_auc = per_original_auc(target_farm, eval_cases, attack_scores);
            record.rows.push_back(std::move(row));
        }
    }
    record.timings.attack_ms = ms_since(t_phase);
    record.timings.total_ms = ms_since(t_start);

    if (!config.output_dir.empty()) {
        fs::create_directories(config.output_dir);
        write_report(record, "json", (fs::path(config.output_dir) / "result.json").string());
    }
    return record;
}

namespace {

json nan_to_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double null_to_nan(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace

json ResultRecord::to_json(bool include_timings) const {
    json j;
    j["schema_version"] = 1;
    j["config"] = config_echo;
    j["rows"] = json::array();
    for (const auto& row : rows) {
        json r{{"attack_kind", to_string(row.attack_kind)},
               {"feature_method", to_string(row.method)},
               {"auc_ours", row.report.auc_ours},
               {"auc_baseline", row.report.auc_baseline},
               {"deg_count", row.report.deg_count},
               {"deg_rate", row.report.deg_rate},
               {"n", row.report.n}};
        r["per_original_auc"] = json::array();
        for (double v : row.per_original_auc) r["per_original_auc"].push_back(nan_to_null(v));
        j["rows"].push_back(std::move(r));
    }
    j["target_overfitting"] = target_overfitting;
    j["shadow_overfitting"] = shadow_overfitting;
    if (include_timings)
        j["timings_ms"] = json{{"load_encode", timings.load_encode_ms},
                               {"shadow_farm", timings.shadow_farm_ms},
                               {"target_farm", timings.target_farm_ms},
                               {"attack", timings.attack_ms},
                               {"total", timings.total_ms}};
    return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
    ResultRecord record;
    try {
        if (j.at("schema_version").get<int>() != 1)
            throw DataError("unsupported result schema_version");
        record.config_echo = j.at("config");
        for (const auto& r : j.at("rows")) {
            GridRow row;
            row.attack_kind = model_kind_from_string(r.at("attack_kind").get<std::string>());
            row.method = feature_method_from_string(r.at("feature_method").get<std::string>());
            row.report.auc_ours = r.at("auc_ours").get<double>();
            row.report.auc_baseline = r.at("auc_baseline").get<double>();
            row.report.deg_count = r.at("deg_count").get<double>();
            row.report.deg_rate = r.at("deg_rate").get<double>();
            row.report.n = r.at("n").get<std::size_t>();
            for (const auto& v : r.at("per_original_auc"))
                row.per_original_auc.push_back(null_to_nan(v));
            record.rows.push_back(std::move(row));
        }
        record.target_overfitting = j.at("target_overfitting").get<std::vector<double>>();
        record.shadow_overfitting = j.at("shadow_overfitting").get<std::vector<double>>();
        if (j.contains("timings_ms")) {
            const auto& t = j.at("timings_ms");
            record.timings.load_encode_ms = t.at("load_encode").get<double>();
            record.timings.shadow_farm_ms = t.at("shadow_farm").get<double>();
            record.timings.target_farm_ms = t.at("target_farm").get<double>();
            record.timings.attack_ms = t.at("attack").get<double>();
            record.timings.total_ms = t.at("total").get<double>();
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bad result record: ") + e.what());
    }
    return record;
}

std::string report_csv(const ResultRecord& record) {
    std::ostringstream out;
    out << "target_kind,attack_kind,feature_method,defense,n,auc_ours,auc_baseline,"
           "deg_count,deg_rate\n";
    std::string target_kind = "?";
    std::string defense = "none";
    if (record.config_echo.contains("target"))
        target_kind = record.config_echo["target"].value("model_kind", "?");
    if (record.config_echo.contains("attack") &&
        record.config_echo["attack"].contains("defense")) {
        defense = record.config_echo["attack"]["defense"].value("kind", "none");
        if (defense == "top_k")
            defense = "top_" + std::to_string(
                                   record.config_echo["attack"]["defense"].value("k", 1));
    }
    char buf[512];
    for (const auto& row : record.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%zu,%.17g,%.17g,%.17g,%.17g\n",
                      target_kind.c_str(), to_string(row.attack_kind).c_str(),
                      to_string(row.method).c_str(), defense.c_str(), row.report.n,
                      row.report.auc_ours, row.report.auc_baseline, row.report.deg_count,
                      row.report.deg_rate);
        out << buf;
    }
    return out.str();
}

void write_report(const ResultRecord& record, const std::string& format,
                  const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    if (format == "json")
        f << record.to_json().dump(2) << "\n";
    else if (format == "csv")
        f << report_csv(record);
    else
        throw ConfigError("unknown report format: " + format);
}

}  // namespace unleak
