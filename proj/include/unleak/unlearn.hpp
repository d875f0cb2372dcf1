#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "unleak/classifier.hpp"
#include "unleak/dataset.hpp"

namespace unleak {

/// Parent-dataset row indices to delete. Every index must be a member of the
/// training subset it is applied to.
struct DeletionRequest {
    std::vector<std::size_t> indices;  // distinct, non-empty
};

/// Retrains from scratch on train_set minus the requested rows, with the same
/// (kind, params, seed) discipline as the original model.
TrainedClassifier scratch_unlearn(const SubsetHandle& train_set, const DeletionRequest& request,
                                  ModelKind kind, const HyperParams& params, std::uint64_t seed);

/// Sharded model: k disjoint shards, one sub-model per shard, posterior
/// average at prediction time. Values are immutable; unlearning returns a new
/// model sharing the untouched sub-models.
struct SisaModel {
    std::vector<SubsetHandle> shards;
    std::vector<std::shared_ptr<const TrainedClassifier>> sub_models;
    int k = 0;
    ModelKind kind = ModelKind::DecisionTree;
    HyperParams params;
    std::uint64_t base_seed = 0;

    int num_classes() const { return sub_models.front()->num_classes(); }
    std::size_t feature_dim() const { return sub_models.front()->feature_dim(); }
};

/// Partitions the training set into k shards of near-equal size (seeded
/// permutation, contiguous chunks, sizes differ by at most 1) and trains
/// sub-model i with seed + i.
SisaModel sisa_train(const SubsetHandle& train_set, int k, ModelKind kind,
                     const HyperParams& params, std::uint64_t seed);

/// Retrains exactly the shards that intersect the request; other sub-models
/// are shared by reference with the input model.
SisaModel sisa_unlearn(const SisaModel& model, const DeletionRequest& request);

/// Arithmetic mean of the k sub-model posteriors.
Posterior sisa_predict(const SisaModel& model, std::span<const double> x);

/// Framed envelope: k shard index lists followed by k sub-model envelopes.
std::vector<std::uint8_t> serialize(const SisaModel& model);
SisaModel deserialize_sisa(std::span<const std::uint8_t> bytes, DatasetPtr parent);

}  // namespace unleak
