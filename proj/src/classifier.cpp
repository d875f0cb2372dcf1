#include "unleak/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "unleak/errors.hpp"

namespace unleak {

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "logistic_regression") return ModelKind::LogisticRegression;
    if (name == "decision_tree") return ModelKind::DecisionTree;
    if (name == "random_forest") return ModelKind::RandomForest;
    if (name == "mlp") return ModelKind::MultiLayerPerceptron;
    throw ConfigError("unknown model kind: " + name);
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LogisticRegression: return "logistic_regression";
        case ModelKind::DecisionTree: return "decision_tree";
        case ModelKind::RandomForest: return "random_forest";
        case ModelKind::MultiLayerPerceptron: return "mlp";
    }
    throw ConfigError("invalid model kind tag");
}

bool is_valid_posterior(const Posterior& p, double tol) {
    if (p.empty()) return false;
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

int argmax_class(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;
    return static_cast<int>(best);
}

namespace detail {

TrainData materialize(const SubsetHandle& train_set) {
    if (train_set.size() == 0) throw DataError("empty training set");
    TrainData data;
    data.n = train_set.size();
    data.d = train_set.parent->feature_dim;
    data.num_classes = train_set.parent->num_classes;
    data.x.resize(data.n * data.d);
    data.y.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto row = train_set.row(i);
        std::copy(row.begin(), row.end(), data.x.begin() + static_cast<std::ptrdiff_t>(i * data.d));
        data.y[i] = train_set.label(i);
    }
    std::set<int> distinct(data.y.begin(), data.y.end());
    if (distinct.size() < 2) throw DataError("training set contains a single class");
    return data;
}

namespace {

Posterior tree_posterior(const TreeModel& tree, std::span<const double> x, int num_classes) {
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
        const double v = x[static_cast<std::size_t>(node->feature)];
        node = &tree.nodes[static_cast<std::size_t>(v <= node->threshold ? node->left
                                                                         : node->right)];
    }
    // Laplace-smoothed leaf frequencies: never exactly zero.
    std::size_t total = 0;
    for (std::uint32_t c : node->counts) total += c;
    Posterior p(static_cast<std::size_t>(num_classes));
    const double denom = static_cast<double>(total) + static_cast<double>(num_classes);
    for (int c = 0; c < num_classes; ++c)
        p[static_cast<std::size_t>(c)] =
            (static_cast<double>(node->counts[static_cast<std::size_t>(c)]) + 1.0) / denom;
    return p;
}

}  // namespace

}  // namespace detail

Posterior TrainedClassifier::predict_proba(std::span<const double> x) const {
    if (x.size() != feature_dim_)
        throw DataError("feature dimension mismatch: expected " + std::to_string(feature_dim_) +
                        ", got " + std::to_string(x.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("non-finite input feature");

    switch (kind_) {
        case ModelKind::LogisticRegression: {
            const auto& m = impl<LinearModel>();
            const std::size_t cols = feature_dim_ + 1;
            Posterior z(static_cast<std::size_t>(num_classes_));
            for (int c = 0; c < num_classes_; ++c) {
                const double* wc = m.weights.data() + static_cast<std::size_t>(c) * cols;
                double s = wc[feature_dim_];
                for (std::size_t j = 0; j < feature_dim_; ++j) s += wc[j] * x[j];
                z[static_cast<std::size_t>(c)] = s;
            }
            double zmax = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - zmax);
                sum += v;
            }
            for (double& v : z) v /= sum;
            return z;
        }
        case ModelKind::DecisionTree:
            return detail::tree_posterior(impl<TreeModel>(), x, num_classes_);
        case ModelKind::RandomForest: {
            const auto& forest = impl<ForestModel>();
            Posterior acc(static_cast<std::size_t>(num_classes_), 0.0);
            for (const auto& tree : forest.trees) {
                const auto p = detail::tree_posterior(tree, x, num_classes_);
                for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
            }
            const double inv = 1.0 / static_cast<double>(forest.trees.size());
            for (double& v : acc) v *= inv;
            return acc;
        }
        case ModelKind::MultiLayerPerceptron: {
            const auto& m = impl<MlpModel>();
            const auto h = static_cast<std::size_t>(m.hidden);
            std::vector<double> hidden(h);
            for (std::size_t j = 0; j < h; ++j) {
                double z = m.b1[j];
                const double* w = m.w1.data() + j * feature_dim_;
                for (std::size_t k = 0; k < feature_dim_; ++k) z += w[k] * x[k];
                hidden[j] = z > 0.0 ? z : 0.0;
            }
            Posterior p(static_cast<std::size_t>(num_classes_));
            double zmax = -1e300;
            for (int c = 0; c < num_classes_; ++c) {
                double z = m.b2[static_cast<std::size_t>(c)];
                const double* w = m.w2.data() + static_cast<std::size_t>(c) * h;
                for (std::size_t j = 0; j < h; ++j) z += w[j] * hidden[j];
                p[static_cast<std::size_t>(c)] = z;
                zmax = std::max(zmax, z);
            }
            double sum = 0.0;
            for (double& v : p) {
                v = std::exp(v - zmax);
                sum += v;
            }
            for (double& v : p) v /= sum;
            return p;
        }
    }
    throw DataError("invalid model kind");
}

TrainedClassifier train(ModelKind kind, const HyperParams& params, const SubsetHandle& train_set,
                        std::uint64_t seed) {
    const auto data = detail::materialize(train_set);
    switch (kind) {
        case ModelKind::LogisticRegression:
            return {kind, data.num_classes, data.d, seed, detail::train_linear(data, params)};
        case ModelKind::DecisionTree:
            return {kind, data.num_classes, data.d, seed,
                    detail::train_tree(data, params.dt_max_leaf_nodes)};
        case ModelKind::RandomForest:
            return {kind, data.num_classes, data.d, seed, detail::train_forest(data, params, seed)};
        case ModelKind::MultiLayerPerceptron:
            return {kind, data.num_classes, data.d, seed, detail::train_mlp(data, params, seed)};
    }
    throw DataError("invalid model kind");
}

double accuracy(const TrainedClassifier& model, const SubsetHandle& ds) {
    if (ds.size() == 0) throw DataError("accuracy over an empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = model.predict_proba(ds.row(i));
        if (argmax_class(p) == ds.label(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double overfitting_level(const TrainedClassifier& model, const SubsetHandle& train_ds,
                         const SubsetHandle& test_ds) {
    return accuracy(model, train_ds) - accuracy(model, test_ds);
}

}  // namespace unleak
