#include "unleak/attack.hpp"

#include <algorithm>

#include "unleak/errors.hpp"
#include "unleak/rng.hpp"

namespace unleak {

namespace {

// Packs feature vectors with binary labels into a dataset the learners can
// train on. Class 0 = non-member, class 1 = member.
SubsetHandle feature_dataset(const std::vector<std::vector<double>>& features,
                             const std::vector<int>& labels) {
    auto ds = std::make_shared<EncodedDataset>();
    ds->feature_dim = features.front().size();
    ds->num_classes = 2;
    ds->class_names = {"non_member", "member"};
    for (std::size_t f = 0; f < ds->feature_dim; ++f)
        ds->feature_names.push_back("f" + std::to_string(f));
    ds->features.reserve(features.size() * ds->feature_dim);
    for (const auto& row : features) {
        if (row.size() != ds->feature_dim) throw DataError("inconsistent feature lengths");
        ds->features.insert(ds->features.end(), row.begin(), row.end());
    }
    ds->labels = labels;
    ds->check();
    return full_subset(std::move(ds));
}

void check_balance(std::size_t n_pos, std::size_t n_neg) {
    if (n_pos == 0 || n_neg == 0)
        throw DataError("attack training needs both positive and negative cases");
    if (n_pos != n_neg)
        throw DataError("attack training set must be balanced: " + std::to_string(n_pos) +
                        " positive vs " + std::to_string(n_neg) + " negative");
}

}  // namespace

AttackClassifier train_attack(const std::vector<CasePair>& cases, FeatureMethod method,
                              const Defense& defense, ModelKind kind, const HyperParams& params,
                              std::uint64_t seed) {
    if (cases.empty()) throw DataError("no attack training cases");
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& c : cases) (c.is_positive ? n_pos : n_neg) += 1;
    check_balance(n_pos, n_neg);

    const int ell = static_cast<int>(cases.front().posterior_original.size());
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    features.reserve(cases.size());
    labels.reserve(cases.size());
    for (const auto& c : cases) {
        features.push_back(construct(method, apply_defense(c.posterior_original, defense),
                                     apply_defense(c.posterior_unlearned, defense)));
        labels.push_back(c.is_positive ? 1 : 0);
    }

    AttackClassifier attack;
    attack.inner = train(kind, params, feature_dataset(features, labels), seed);
    attack.method = method;
    attack.defense = defense;
    attack.num_classes = ell;
    return attack;
}

double infer(const AttackClassifier& attack, const Posterior& po, const Posterior& pu) {
    if (static_cast<int>(po.size()) != attack.num_classes ||
        static_cast<int>(pu.size()) != attack.num_classes)
        throw DataError("posterior length does not match the attack's class count");
    const auto feature = construct(attack.method, apply_defense(po, attack.defense),
                                   apply_defense(pu, attack.defense));
    return attack.inner.predict_proba(feature)[1];
}

BaselineClassifier train_baseline(const Farm& farm, const SubsetHandle& negative_pool,
                                  const Defense& defense, ModelKind kind,
                                  const HyperParams& params, std::uint64_t seed) {
    if (farm.originals.empty()) throw DataError("farm has no originals");
    if (negative_pool.size() == 0) throw DataError("negative pool is empty");
    const auto& parent = *farm.originals.front().train_set.parent;

    auto sorted_feature = [&](Posterior p) {
        p = apply_defense(p, defense);
        std::sort(p.begin(), p.end(), std::greater<double>());
        return std::vector<double>(p.begin(), p.end());
    };

    // Members: the farm's deleted samples queried on their own original.
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (const auto& original : farm.originals)
        for (const auto& unit : original.units)
            for (std::size_t idx : unit.request.indices) {
                features.push_back(sorted_feature(original.original.predict(parent.row(idx))));
                labels.push_back(1);
            }
    const std::size_t n_members = features.size();

    Rng rng(mix_seed(seed, 0x4E65ULL));  // negative-draw stream
    for (std::size_t c = 0; c < n_members; ++c) {
        const std::size_t pos = rng.next_below(negative_pool.size());
        const std::size_t i = rng.next_below(farm.originals.size());
        features.push_back(
            sorted_feature(farm.originals[i].original.predict(negative_pool.row(pos))));
        labels.push_back(0);
    }
    check_balance(n_members, features.size() - n_members);

    BaselineClassifier baseline;
    baseline.inner = train(kind, params, feature_dataset(features, labels), seed);
    baseline.defense = defense;
    baseline.num_classes = farm.originals.front().original.num_classes();
    return baseline;
}

double infer_baseline(const BaselineClassifier& baseline, const Posterior& po) {
    if (static_cast<int>(po.size()) != baseline.num_classes)
        throw DataError("posterior length does not match the baseline's class count");
    Posterior p = apply_defense(po, baseline.defense);
    std::sort(p.begin(), p.end(), std::greater<double>());
    return baseline.inner.predict_proba(p)[1];
}

}  // namespace unleak
