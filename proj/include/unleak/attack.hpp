#pragma once

#include <cstdint>
#include <vector>

#include "unleak/farm.hpp"
#include "unleak/features.hpp"

namespace unleak {

/// Binary classifier over constructed posterior-pair features. Class 1 is
/// "member of the original model's training set".
struct AttackClassifier {
    TrainedClassifier inner;  // num_classes == 2
    FeatureMethod method = FeatureMethod::SortedDiff;
    Defense defense;
    int num_classes = 0;  // ℓ of the target task
};

/// Classical single-posterior membership classifier: features are the
/// original model's posterior sorted descending.
struct BaselineClassifier {
    TrainedClassifier inner;  // num_classes == 2
    Defense defense;
    int num_classes = 0;
};

/// Trains the attack model on labeled cases. Cases must contain both labels
/// and be exactly balanced. Defense reconstruction is applied to both
/// posteriors of every case before feature construction.
AttackClassifier train_attack(const std::vector<CasePair>& cases, FeatureMethod method,
                              const Defense& defense, ModelKind kind, const HyperParams& params,
                              std::uint64_t seed);

/// Positive-class probability that the queried sample was a member of the
/// original model's training set.
double infer(const AttackClassifier& attack, const Posterior& po, const Posterior& pu);

/// Trains the classical baseline on the farm: members are the farm's deleted
/// samples queried on their original models, non-members are drawn from the
/// negative pool; balanced. The same defense truncation/reconstruction is
/// applied to every posterior.
BaselineClassifier train_baseline(const Farm& farm, const SubsetHandle& negative_pool,
                                  const Defense& defense, ModelKind kind,
                                  const HyperParams& params, std::uint64_t seed);

/// Membership confidence from the original model's posterior only.
double infer_baseline(const BaselineClassifier& baseline, const Posterior& po);

}  // namespace unleak
