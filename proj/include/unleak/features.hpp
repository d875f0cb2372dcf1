#pragma once

#include <string>
#include <utility>
#include <vector>

#include "unleak/classifier.hpp"

namespace unleak {

enum class FeatureMethod { DirectConcat, SortedConcat, DirectDiff, SortedDiff, EucDist };

FeatureMethod feature_method_from_string(const std::string& name);  // throws ConfigError
std::string to_string(FeatureMethod method);

/// Output length of a construction method for an ℓ-class posterior pair.
std::size_t feature_length(FeatureMethod method, int num_classes);

/// Builds the attack feature from the original/unlearned posterior pair.
/// Sorted methods order the original posterior descending (stable, ties by
/// class index) and apply the same permutation to the unlearned posterior.
std::vector<double> construct(FeatureMethod method, const Posterior& po, const Posterior& pu);

/// What the model owner publishes under the top-k defense: the k largest
/// confidence values with their classes, descending (ties by class index).
std::vector<std::pair<int, double>> publish_topk(const Posterior& p, int k);

/// What the model owner publishes under the label-only defense.
int publish_label(const Posterior& p);

/// Adversary-side reconstruction from a top-k publication: published values
/// at their classes, the remaining confidence spread evenly elsewhere.
Posterior pseudo_posterior_topk(const std::vector<std::pair<int, double>>& published,
                                int num_classes);

/// Adversary-side reconstruction from a label-only publication: one-hot.
Posterior pseudo_posterior_label(int label, int num_classes);

/// Defense configured at the model-owner boundary.
struct Defense {
    enum class Kind { None, TopK, LabelOnly };
    Kind kind = Kind::None;
    int k = 1;  // TopK only

    bool operator==(const Defense&) const = default;
};

Defense defense_from_string(const std::string& name, int k);  // throws ConfigError
std::string to_string(const Defense& defense);

/// Owner-side truncation followed by adversary-side reconstruction. Identity
/// under Defense::Kind::None.
Posterior apply_defense(const Posterior& p, const Defense& defense);

}  // namespace unleak
