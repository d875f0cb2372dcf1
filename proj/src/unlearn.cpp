#include "unleak/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "unleak/errors.hpp"
#include "unleak/rng.hpp"

namespace unleak {

namespace {

void validate_request(const DeletionRequest& request, const SubsetHandle& train_set) {
    if (request.indices.empty()) throw DataError("deletion request is empty");
    std::set<std::size_t> seen;
    for (std::size_t idx : request.indices) {
        if (!seen.insert(idx).second) throw DataError("deletion request repeats an index");
        if (!train_set.contains(idx))
            throw DataError("deletion request index " + std::to_string(idx) +
                            " is not in the training set");
    }
}

std::vector<std::size_t> remove_indices(const std::vector<std::size_t>& sorted_indices,
                                        const std::vector<std::size_t>& to_delete) {
    std::vector<std::size_t> sorted_delete(to_delete);
    std::sort(sorted_delete.begin(), sorted_delete.end());
    std::vector<std::size_t> out;
    out.reserve(sorted_indices.size() - sorted_delete.size());
    std::set_difference(sorted_indices.begin(), sorted_indices.end(), sorted_delete.begin(),
                        sorted_delete.end(), std::back_inserter(out));
    return out;
}

}  // namespace

TrainedClassifier scratch_unlearn(const SubsetHandle& train_set, const DeletionRequest& request,
                                  ModelKind kind, const HyperParams& params, std::uint64_t seed) {
    validate_request(request, train_set);
    SubsetHandle remainder{train_set.parent, remove_indices(train_set.indices, request.indices)};
    if (remainder.size() == 0) throw DataError("deletion request empties the training set");
    return train(kind, params, remainder, seed);
}

SisaModel sisa_train(const SubsetHandle& train_set, int k, ModelKind kind,
                     const HyperParams& params, std::uint64_t seed) {
    if (k <= 0) throw DataError("shard count must be positive");
    if (static_cast<std::size_t>(k) > train_set.size())
        throw DataError("shard count exceeds training set size");

    // Seeded uniform permutation, contiguous chunks; sizes differ by <= 1.
    std::vector<std::size_t> perm(train_set.indices);
    Rng rng(mix_seed(seed, 0x5348415244ULL));  // shard-assignment stream
    rng.shuffle(perm);

    SisaModel model;
    model.k = k;
    model.kind = kind;
    model.params = params;
    model.base_seed = seed;

    const std::size_t n = perm.size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t offset = 0;
    for (int i = 0; i < k; ++i) {
        const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
        std::vector<std::size_t> shard_idx(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                                           perm.begin() + static_cast<std::ptrdiff_t>(offset + len));
        std::sort(shard_idx.begin(), shard_idx.end());
        offset += len;
        model.shards.push_back(SubsetHandle{train_set.parent, std::move(shard_idx)});
    }
    for (int i = 0; i < k; ++i)
        model.sub_models.push_back(std::make_shared<TrainedClassifier>(
            train(kind, params, model.shards[static_cast<std::size_t>(i)],
                  seed + static_cast<std::uint64_t>(i))));
    return model;
}

SisaModel sisa_unlearn(const SisaModel& model, const DeletionRequest& request) {
    if (request.indices.empty()) throw DataError("deletion request is empty");
    for (std::size_t idx : request.indices) {
        bool found = false;
        for (const auto& shard : model.shards) found = found || shard.contains(idx);
        if (!found)
            throw DataError("deletion request index " + std::to_string(idx) +
                            " is outside the training set");
    }

    SisaModel out;
    out.k = model.k;
    out.kind = model.kind;
    out.params = model.params;
    out.base_seed = model.base_seed;
    for (int i = 0; i < model.k; ++i) {
        const auto& shard = model.shards[static_cast<std::size_t>(i)];
        std::vector<std::size_t> hit;
        for (std::size_t idx : request.indices)
            if (shard.contains(idx)) hit.push_back(idx);
        if (hit.empty()) {
            // Untouched sub-model shared by reference with the input model.
            out.shards.push_back(shard);
            out.sub_models.push_back(model.sub_models[static_cast<std::size_t>(i)]);
            continue;
        }
        SubsetHandle reduced{shard.parent, remove_indices(shard.indices, hit)};
        if (reduced.size() == 0)
            throw DataError("deletion request empties shard " + std::to_string(i));
        out.shards.push_back(reduced);
        out.sub_models.push_back(std::make_shared<TrainedClassifier>(
            train(model.kind, model.params, reduced,
                  model.base_seed + static_cast<std::uint64_t>(i))));
    }
    return out;
}

Posterior sisa_predict(const SisaModel& model, std::span<const double> x) {
    Posterior acc(static_cast<std::size_t>(model.num_classes()), 0.0);
    for (const auto& sub : model.sub_models) {
        const auto p = sub->predict_proba(x);
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
    }
    const double inv = 1.0 / static_cast<double>(model.sub_models.size());
    for (double& v : acc) v *= inv;
    // Renormalize only when the mean drifted measurably; leaves the k=1 case
    // bit-identical to the sub-model's own output.
    double sum = 0.0;
    for (double v : acc) sum += v;
    if (std::abs(sum - 1.0) > 1e-12)
        for (double& v : acc) v /= sum;
    return acc;
}

}  // namespace unleak
