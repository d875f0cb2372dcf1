#include "unleak/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unleak/errors.hpp"

namespace unleak {

FeatureMethod feature_method_from_string(const std::string& name) {
    if (name == "direct_concat") return FeatureMethod::DirectConcat;
    if (name == "sorted_concat") return FeatureMethod::SortedConcat;
    if (name == "direct_diff") return FeatureMethod::DirectDiff;
    if (name == "sorted_diff") return FeatureMethod::SortedDiff;
    if (name == "euc_dist") return FeatureMethod::EucDist;
    throw ConfigError("unknown feature method: " + name);
}

std::string to_string(FeatureMethod method) {
    switch (method) {
        case FeatureMethod::DirectConcat: return "direct_concat";
        case FeatureMethod::SortedConcat: return "sorted_concat";
        case FeatureMethod::DirectDiff: return "direct_diff";
        case FeatureMethod::SortedDiff: return "sorted_diff";
        case FeatureMethod::EucDist: return "euc_dist";
    }
    throw ConfigError("invalid feature method tag");
}

std::size_t feature_length(FeatureMethod method, int num_classes) {
    const auto ell = static_cast<std::size_t>(num_classes);
    switch (method) {
        case FeatureMethod::DirectConcat:
        case FeatureMethod::SortedConcat: return 2 * ell;
        case FeatureMethod::DirectDiff:
        case FeatureMethod::SortedDiff: return ell;
        case FeatureMethod::EucDist: return 1;
    }
    throw ConfigError("invalid feature method tag");
}

namespace {

// Permutation sorting p descending; stable, so ties keep class-index order.
std::vector<std::size_t> descending_order(const Posterior& p) {
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    return perm;
}

}  // namespace

std::vector<double> construct(FeatureMethod method, const Posterior& po, const Posterior& pu) {
    if (po.size() != pu.size()) throw DataError("posterior length mismatch");
    if (po.size() < 2) throw DataError("posterior must cover at least 2 classes");
    const std::size_t ell = po.size();

    switch (method) {
        case FeatureMethod::DirectConcat: {
            std::vector<double> out(po);
            out.insert(out.end(), pu.begin(), pu.end());
            return out;
        }
        case FeatureMethod::SortedConcat: {
            const auto perm = descending_order(po);
            std::vector<double> out;
            out.reserve(2 * ell);
            for (std::size_t i : perm) out.push_back(po[i]);
            for (std::size_t i : perm) out.push_back(pu[i]);
            return out;
        }
        case FeatureMethod::DirectDiff: {
            std::vector<double> out(ell);
            for (std::size_t i = 0; i < ell; ++i) out[i] = po[i] - pu[i];
            return out;
        }
        case FeatureMethod::SortedDiff: {
            const auto perm = descending_order(po);
            std::vector<double> out(ell);
            for (std::size_t i = 0; i < ell; ++i) out[i] = po[perm[i]] - pu[perm[i]];
            return out;
        }
        case FeatureMethod::EucDist: {
            double sq = 0.0;
            for (std::size_t i = 0; i < ell; ++i) sq += (po[i] - pu[i]) * (po[i] - pu[i]);
            return {std::sqrt(sq)};
        }
    }
    throw DataError("invalid feature method tag");
}

std::vector<std::pair<int, double>> publish_topk(const Posterior& p, int k) {
    if (k < 1 || static_cast<std::size_t>(k) >= p.size())
        throw DataError("top-k defense requires 1 <= k < number of classes");
    const auto perm = descending_order(p);
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        out.emplace_back(static_cast<int>(perm[static_cast<std::size_t>(i)]),
                         p[perm[static_cast<std::size_t>(i)]]);
    return out;
}

int publish_label(const Posterior& p) { return argmax_class(p); }

Posterior pseudo_posterior_topk(const std::vector<std::pair<int, double>>& published,
                                int num_classes) {
    const std::size_t k = published.size();
    const auto ell = static_cast<std::size_t>(num_classes);
    if (k == 0 || k >= ell)
        throw DataError("pseudo posterior requires 1 <= k < number of classes");

    double sum = 0.0;
    std::vector<bool> seen(ell, false);
    double prev = 1.0;
    for (const auto& [cls, conf] : published) {
        if (cls < 0 || static_cast<std::size_t>(cls) >= ell)
            throw DataError("published class out of range");
        if (seen[static_cast<std::size_t>(cls)]) throw DataError("published class repeated");
        seen[static_cast<std::size_t>(cls)] = true;
        if (conf < 0.0 || conf > 1.0) throw DataError("published confidence outside [0,1]");
        if (conf > prev + 1e-9) throw DataError("published confidences must be non-increasing");
        prev = conf;
        sum += conf;
    }
    if (sum > 1.0 + 1e-6) throw DataError("published confidences exceed 1");

    const double remainder = std::max(0.0, 1.0 - sum) / static_cast<double>(ell - k);
    Posterior out(ell, remainder);
    for (const auto& [cls, conf] : published) out[static_cast<std::size_t>(cls)] = conf;
    return out;
}

Posterior pseudo_posterior_label(int label, int num_classes) {
    if (label < 0 || label >= num_classes) throw DataError("label out of range");
    Posterior out(static_cast<std::size_t>(num_classes), 0.0);
    out[static_cast<std::size_t>(label)] = 1.0;
    return out;
}

Defense defense_from_string(const std::string& name, int k) {
    if (name == "none") return Defense{Defense::Kind::None, 1};
    if (name == "top_k") {
        if (k < 1) throw ConfigError("top_k defense requires k >= 1");
        return Defense{Defense::Kind::TopK, k};
    }
    if (name == "label_only") return Defense{Defense::Kind::LabelOnly, 1};
    throw ConfigError("unknown defense: " + name);
}

std::string to_string(const Defense& defense) {
    switch (defense.kind) {
        case Defense::Kind::None: return "none";
        case Defense::Kind::TopK: return "top_" + std::to_string(defense.k);
        case Defense::Kind::LabelOnly: return "label_only";
    }
    throw ConfigError("invalid defense tag");
}

Posterior apply_defense(const Posterior& p, const Defense& defense) {
    switch (defense.kind) {
        case Defense::Kind::None: return p;
        case Defense::Kind::TopK:
            return pseudo_posterior_topk(publish_topk(p, defense.k),
                                         static_cast<int>(p.size()));
        case Defense::Kind::LabelOnly:
            return pseudo_posterior_label(publish_label(p), static_cast<int>(p.size()));
    }
    throw ConfigError("invalid defense tag");
}

}  // namespace unleak
