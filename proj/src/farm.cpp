#include "unleak/farm.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "unleak/errors.hpp"
#include "unleak/rng.hpp"
#include "unleak/thread_pool.hpp"

namespace unleak {

namespace fs = std::filesystem;
using nlohmann::json;

UnlearnMethod unlearn_method_from_string(const std::string& name) {
    if (name == "scratch") return UnlearnMethod::Scratch;
    if (name == "sisa") return UnlearnMethod::Sisa;
    throw ConfigError("unknown unlearn method: " + name);
}

std::string to_string(UnlearnMethod method) {
    return method == UnlearnMethod::Scratch ? "scratch" : "sisa";
}

Posterior AnyModel::predict(std::span<const double> x) const {
    if (model_.index() == 0) return std::get<0>(model_)->predict_proba(x);
    return sisa_predict(*std::get<1>(model_), x);
}

int AnyModel::num_classes() const {
    if (model_.index() == 0) return std::get<0>(model_)->num_classes();
    return std::get<1>(model_)->num_classes();
}

double AnyModel::accuracy_on(const SubsetHandle& ds) const {
    if (ds.size() == 0) throw DataError("accuracy over an empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = predict(ds.row(i));
        if (argmax_class(p) == ds.label(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace {

// Stream tags for per-unit seed derivation.
constexpr std::uint64_t kSubsetStream = 1;
constexpr std::uint64_t kOriginalStream = 2;
constexpr std::uint64_t kRequestStream = 3;

void validate_config(const FarmConfig& config, const SubsetHandle& pool) {
    if (config.n_originals == 0) throw ConfigError("farm needs at least one original model");
    if (config.n_unlearned_per_original == 0)
        throw ConfigError("farm needs at least one unlearned model per original");
    if (config.group_size == 0) throw ConfigError("group size must be at least 1");
    if (config.group_size * config.n_unlearned_per_original > config.samples_per_original)
        throw ConfigError("deletion requests need group_size * n_unlearned <= samples per original");
    if (config.samples_per_original > pool.size())
        throw DataError("positive pool smaller than samples_per_original");
    if (config.method == UnlearnMethod::Sisa && config.sisa_k <= 0)
        throw ConfigError("sisa_k must be positive");
}

}  // namespace

Farm build_farm(const SubsetHandle& positive_pool, const FarmConfig& config, std::size_t workers) {
    validate_config(config, positive_pool);

    Farm farm;
    farm.config = config;
    farm.originals.resize(config.n_originals);

    const auto subsets = sample_subsets(positive_pool, config.n_originals,
                                        config.samples_per_original,
                                        mix_seed(config.seed, kSubsetStream));

    // Pre-derive all bookkeeping so training tasks are order-independent.
    for (std::size_t i = 0; i < config.n_originals; ++i) {
        auto& original = farm.originals[i];
        original.train_set = subsets[i];
        original.train_seed = mix_seed(config.seed, kOriginalStream, i);
        original.units.resize(config.n_unlearned_per_original);

        Rng req_rng(mix_seed(config.seed, kRequestStream, i));
        const std::size_t total = config.group_size * config.n_unlearned_per_original;
        const auto positions =
            req_rng.sample_without_replacement(original.train_set.size(), total);
        for (std::size_t j = 0; j < config.n_unlearned_per_original; ++j) {
            auto& unit = original.units[j];
            unit.request.indices.reserve(config.group_size);
            for (std::size_t g = 0; g < config.group_size; ++g)
                unit.request.indices.push_back(
                    original.train_set.indices[positions[j * config.group_size + g]]);
        }
    }

    // Phase 1: original models.
    parallel_for(config.n_originals, workers, [&](std::size_t i) {
        auto& original = farm.originals[i];
        if (config.method == UnlearnMethod::Scratch) {
            original.original = AnyModel(std::make_shared<const TrainedClassifier>(
                train(config.model_kind, config.params, original.train_set,
                      original.train_seed)));
        } else {
            original.original = AnyModel(std::make_shared<const SisaModel>(
                sisa_train(original.train_set, config.sisa_k, config.model_kind, config.params,
                           original.train_seed)));
        }
    });

    // Phase 2: unlearned models, parallel over (original, request) units.
    const std::size_t total_units = config.n_originals * config.n_unlearned_per_original;
    parallel_for(total_units, workers, [&](std::size_t unit_index) {
        const std::size_t i = unit_index / config.n_unlearned_per_original;
        const std::size_t j = unit_index % config.n_unlearned_per_original;
        auto& original = farm.originals[i];
        auto& unit = original.units[j];
        if (config.method == UnlearnMethod::Scratch) {
            unit.unlearned = AnyModel(std::make_shared<const TrainedClassifier>(
                scratch_unlearn(original.train_set, unit.request, config.model_kind,
                                config.params, original.train_seed)));
        } else {
            unit.unlearned = AnyModel(std::make_shared<const SisaModel>(
                sisa_unlearn(original.original.sisa(), unit.request)));
        }
    });

    return farm;
}

std::vector<CasePair> positive_cases(const Farm& farm) {
    std::vector<CasePair> cases;
    const auto& parent = *farm.originals.front().train_set.parent;
    for (std::size_t i = 0; i < farm.originals.size(); ++i) {
        const auto& original = farm.originals[i];
        for (std::size_t j = 0; j < original.units.size(); ++j) {
            const auto& unit = original.units[j];
            for (std::size_t idx : unit.request.indices) {
                CasePair cp;
                cp.posterior_original = original.original.predict(parent.row(idx));
                cp.posterior_unlearned = unit.unlearned.predict(parent.row(idx));
                cp.is_positive = true;
                cp.sample_true_label = parent.labels[idx];
                cp.origin_original = i;
                cp.origin_request = j;
                cases.push_back(std::move(cp));
            }
        }
    }
    return cases;
}

std::vector<CasePair> negative_cases(const Farm& farm, const SubsetHandle& negative_pool,
                                     std::size_t count, std::uint64_t seed) {
    if (negative_pool.size() == 0) throw DataError("negative pool is empty");
    if (count == 0) throw DataError("negative case count must be positive");

    Rng rng(seed);
    std::vector<CasePair> cases;
    cases.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        const std::size_t pos = rng.next_below(negative_pool.size());
        const std::size_t i = rng.next_below(farm.originals.size());
        const auto& original = farm.originals[i];
        const std::size_t j = rng.next_below(original.units.size());
        const auto x = negative_pool.row(pos);

        CasePair cp;
        cp.posterior_original = original.original.predict(x);
        cp.posterior_unlearned = original.units[j].unlearned.predict(x);
        cp.is_positive = false;
        cp.sample_true_label = negative_pool.label(pos);
        cp.origin_original = i;
        cp.origin_request = j;
        cases.push_back(std::move(cp));
    }
    return cases;
}

namespace {

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

HyperParams params_from_json(const json& j) {
    HyperParams p;
    p.lr_l2 = j.at("lr_l2").get<double>();
    p.lr_epochs = j.at("lr_epochs").get<int>();
    p.dt_max_leaf_nodes = j.at("dt_max_leaf_nodes").get<int>();
    p.rf_n_estimators = j.at("rf_n_estimators").get<int>();
    p.rf_min_samples_leaf = j.at("rf_min_samples_leaf").get<int>();
    p.mlp_hidden = j.at("mlp_hidden").get<int>();
    p.mlp_learning_rate = j.at("mlp_learning_rate").get<double>();
    p.mlp_l2 = j.at("mlp_l2").get<double>();
    p.mlp_epochs = j.at("mlp_epochs").get<int>();
    return p;
}

json farm_config_to_json(const FarmConfig& c) {
    return json{{"n_originals", c.n_originals},
                {"samples_per_original", c.samples_per_original},
                {"n_unlearned_per_original", c.n_unlearned_per_original},
                {"group_size", c.group_size},
                {"method", to_string(c.method)},
                {"sisa_k", c.sisa_k},
                {"model_kind", to_string(c.model_kind)},
                {"params", params_to_json(c.params)},
                {"seed", c.seed}};
}

FarmConfig farm_config_from_json(const json& j) {
    FarmConfig c;
    c.n_originals = j.at("n_originals").get<std::size_t>();
    c.samples_per_original = j.at("samples_per_original").get<std::size_t>();
    c.n_unlearned_per_original = j.at("n_unlearned_per_original").get<std::size_t>();
    c.group_size = j.at("group_size").get<std::size_t>();
    c.method = unlearn_method_from_string(j.at("method").get<std::string>());
    c.sisa_k = j.at("sisa_k").get<int>();
    c.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    c.params = params_from_json(j.at("params"));
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> model_bytes(const AnyModel& m) {
    return m.is_sisa() ? serialize(m.sisa()) : serialize(m.scratch());
}

AnyModel model_from_bytes(const std::vector<std::uint8_t>& bytes, bool sisa, DatasetPtr parent) {
    if (sisa)
        return AnyModel(std::make_shared<const SisaModel>(deserialize_sisa(bytes, parent)));
    return AnyModel(std::make_shared<const TrainedClassifier>(deserialize(bytes)));
}

}  // namespace

void save_farm(const Farm& farm, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["config"] = farm_config_to_json(farm.config);
    json originals = json::array();
    for (std::size_t i = 0; i < farm.originals.size(); ++i) {
        const auto& original = farm.originals[i];
        json item;
        item["train_seed"] = original.train_seed;
        item["train_indices"] = original.train_set.indices;
        item["model_file"] = "o" + std::to_string(i) + ".bin";
        json units = json::array();
        for (std::size_t j = 0; j < original.units.size(); ++j) {
            const auto& unit = original.units[j];
            units.push_back(json{{"deleted_indices", unit.request.indices},
                                 {"model_file",
                                  "o" + std::to_string(i) + "_u" + std::to_string(j) + ".bin"}});
        }
        item["units"] = std::move(units);
        originals.push_back(std::move(item));

        write_bytes(fs::path(dir) / ("o" + std::to_string(i) + ".bin"),
                    model_bytes(original.original));
        for (std::size_t j = 0; j < original.units.size(); ++j)
            write_bytes(fs::path(dir) / ("o" + std::to_string(i) + "_u" + std::to_string(j) +
                                         ".bin"),
                        model_bytes(original.units[j].unlearned));
    }
    manifest["originals"] = std::move(originals);
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw DataError("cannot write farm manifest in " + dir);
    f << manifest.dump(2) << "\n";
}

Farm load_farm(const std::string& dir, DatasetPtr parent) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw DataError("no farm manifest in " + dir);
    json manifest;
    try {
        f >> manifest;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad farm manifest: ") + e.what());
    }

    Farm farm;
    farm.config = farm_config_from_json(manifest.at("config"));
    const bool sisa = farm.config.method == UnlearnMethod::Sisa;
    for (const auto& item : manifest.at("originals")) {
        FarmOriginal original;
        original.train_seed = item.at("train_seed").get<std::uint64_t>();
        original.train_set =
            make_subset(parent, item.at("train_indices").get<std::vector<std::size_t>>());
        original.original = model_from_bytes(
            read_bytes(fs::path(dir) / item.at("model_file").get<std::string>()), sisa, parent);
        for (const auto& u : item.at("units")) {
            FarmUnit unit;
            unit.request.indices = u.at("deleted_indices").get<std::vector<std::size_t>>();
            unit.unlearned = model_from_bytes(
                read_bytes(fs::path(dir) / u.at("model_file").get<std::string>()), sisa, parent);
            original.units.push_back(std::move(unit));
        }
        farm.originals.push_back(std::move(original));
    }
    return farm;
}

std::string farm_cache_key(const FarmConfig& config, const SubsetHandle& pool) {
    // FNV-1a over the canonical config JSON plus the pool identity.
    const std::string text = farm_config_to_json(config).dump();
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    mix(pool.size());
    for (std::size_t idx : pool.indices) mix(idx);
    mix(pool.parent->num_rows());
    mix(pool.parent->feature_dim);
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace unleak
