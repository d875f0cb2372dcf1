#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "unleak/classifier.hpp"
#include "unleak/features.hpp"
#include "unleak/unlearn.hpp"

namespace unleak {

enum class UnlearnMethod { Scratch, Sisa };

UnlearnMethod unlearn_method_from_string(const std::string& name);
std::string to_string(UnlearnMethod method);

/// Population parameters for one farm (shadow or target side).
struct FarmConfig {
    std::size_t n_originals = 20;             // S_o / T_o
    std::size_t samples_per_original = 5000;  // S_r / T_r
    std::size_t n_unlearned_per_original = 100;  // S_u / T_u
    std::size_t group_size = 1;               // samples per deletion request
    UnlearnMethod method = UnlearnMethod::Scratch;
    int sisa_k = 5;
    ModelKind model_kind = ModelKind::DecisionTree;
    HyperParams params;
    std::uint64_t seed = 0;
};

/// Either a scratch-trained classifier or a SISA ensemble; both answer
/// posterior queries.
class AnyModel {
public:
    AnyModel() = default;
    explicit AnyModel(std::shared_ptr<const TrainedClassifier> m) : model_(std::move(m)) {}
    explicit AnyModel(std::shared_ptr<const SisaModel> m) : model_(std::move(m)) {}

    Posterior predict(std::span<const double> x) const;
    int num_classes() const;
    double accuracy_on(const SubsetHandle& ds) const;

    bool is_sisa() const { return model_.index() == 1; }
    const TrainedClassifier& scratch() const { return *std::get<0>(model_); }
    const SisaModel& sisa() const { return *std::get<1>(model_); }

private:
    std::variant<std::shared_ptr<const TrainedClassifier>, std::shared_ptr<const SisaModel>>
        model_;
};

/// One deletion request and the model retrained without those rows.
struct FarmUnit {
    DeletionRequest request;
    AnyModel unlearned;
};

struct FarmOriginal {
    SubsetHandle train_set;
    AnyModel original;
    std::uint64_t train_seed = 0;
    std::vector<FarmUnit> units;
};

/// A population of original models with their unlearned counterparts and full
/// deletion bookkeeping. Immutable once built.
struct Farm {
    FarmConfig config;
    std::vector<FarmOriginal> originals;
};

/// The attack model's training/evaluation atom: the two posteriors of one
/// query sample plus its ground-truth membership.
struct CasePair {
    Posterior posterior_original;
    Posterior posterior_unlearned;
    bool is_positive = false;
    int sample_true_label = 0;
    std::size_t origin_original = 0;
    std::size_t origin_request = 0;
};

/// Trains n_originals originals on subsets sampled from the pool and, per
/// original, n_unlearned_per_original disjoint deletion requests of
/// group_size with their unlearned models. All seeds derive from config.seed
/// and the (original, request) position. `workers` bounds the training
/// parallelism; results are independent of it.
Farm build_farm(const SubsetHandle& positive_pool, const FarmConfig& config,
                std::size_t workers = 1);

/// One positive case per deleted sample: both models queried with the sample
/// that the unlearned model forgot.
std::vector<CasePair> positive_cases(const Farm& farm);

/// `count` negative cases: a never-member sample queried against a uniformly
/// chosen (original, unlearned) pair. Sampling is with replacement.
std::vector<CasePair> negative_cases(const Farm& farm, const SubsetHandle& negative_pool,
                                     std::size_t count, std::uint64_t seed);

/// Farm cache: one serialized envelope per model plus a JSON manifest with
/// config, seeds, and deletion bookkeeping.
void save_farm(const Farm& farm, const std::string& dir);
Farm load_farm(const std::string& dir, DatasetPtr parent);

/// Stable hash of a farm configuration plus its pool, for cache keying.
std::string farm_cache_key(const FarmConfig& config, const SubsetHandle& pool);

}  // namespace unleak
