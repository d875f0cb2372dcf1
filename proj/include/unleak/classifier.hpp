#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "unleak/dataset.hpp"

namespace unleak {

enum class ModelKind { LogisticRegression, DecisionTree, RandomForest, MultiLayerPerceptron };

ModelKind model_kind_from_string(const std::string& name);  // throws ConfigError
std::string to_string(ModelKind kind);

struct HyperParams {
    double lr_l2 = 0.001;
    int lr_epochs = 500;
    int dt_max_leaf_nodes = 10;
    int rf_n_estimators = 100;
    int rf_min_samples_leaf = 30;
    int mlp_hidden = 128;
    double mlp_learning_rate = 0.001;
    double mlp_l2 = 0.0001;
    int mlp_epochs = 200;

    bool operator==(const HyperParams&) const = default;
};

/// Probability vector over the model's classes. Entries in [0,1], sum 1
/// within 1e-6.
using Posterior = std::vector<double>;

bool is_valid_posterior(const Posterior& p, double tol = 1e-6);

/// Argmax with ties broken by lowest class index.
int argmax_class(std::span<const double> probs);

// Kind-specific parameter blocks. Opaque to callers; exposed so the
// serializer and the test oracles can reach them.

struct LinearModel {
    // weights[(d+1) * c + j]: class c, feature j; column d is the bias.
    std::vector<double> weights;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<std::uint32_t> counts;  // per-class training counts (leaves only)
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
    std::vector<TreeModel> trees;
};

struct MlpModel {
    int hidden = 0;
    std::vector<double> w1;  // hidden x d
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // classes x hidden
    std::vector<double> b2;  // classes
};

/// An immutable trained classifier. predict_proba is reentrant.
class TrainedClassifier {
public:
    TrainedClassifier() = default;
    TrainedClassifier(ModelKind kind, int num_classes, std::size_t feature_dim,
                      std::uint64_t train_seed,
                      std::variant<LinearModel, TreeModel, ForestModel, MlpModel> impl)
        : kind_(kind),
          num_classes_(num_classes),
          feature_dim_(feature_dim),
          train_seed_(train_seed),
          impl_(std::move(impl)) {}

    ModelKind kind() const { return kind_; }
    int num_classes() const { return num_classes_; }
    std::size_t feature_dim() const { return feature_dim_; }
    std::uint64_t train_seed() const { return train_seed_; }

    Posterior predict_proba(std::span<const double> x) const;

    template <class T>
    const T& impl() const { return std::get<T>(impl_); }

private:
    ModelKind kind_ = ModelKind::DecisionTree;
    int num_classes_ = 0;
    std::size_t feature_dim_ = 0;
    std::uint64_t train_seed_ = 0;
    std::variant<LinearModel, TreeModel, ForestModel, MlpModel> impl_;
};

/// Trains a classifier of the given kind on the subset. Deterministic given
/// (inputs, seed). Throws DataError on empty or single-class training sets.
TrainedClassifier train(ModelKind kind, const HyperParams& params, const SubsetHandle& train_set,
                        std::uint64_t seed);

/// Fraction of samples whose argmax posterior equals the label.
double accuracy(const TrainedClassifier& model, const SubsetHandle& ds);

/// accuracy(train) - accuracy(test); may be negative.
double overfitting_level(const TrainedClassifier& model, const SubsetHandle& train_ds,
                         const SubsetHandle& test_ds);

/// Self-describing binary envelope: magic "UAUD", version u16, kind tag u8,
/// little-endian payload. Round-trips bit-exactly.
std::vector<std::uint8_t> serialize(const TrainedClassifier& model);
TrainedClassifier deserialize(std::span<const std::uint8_t> bytes);

namespace detail {

/// Dense training inputs materialized from a SubsetHandle.
struct TrainData {
    std::vector<double> x;  // n x d row-major
    std::vector<int> y;
    std::size_t n = 0;
    std::size_t d = 0;
    int num_classes = 0;

    std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

TrainData materialize(const SubsetHandle& train_set);

// Multinomial logistic regression internals (exposed for the gradient-check
// oracle).
double lr_loss(const TrainData& data, const std::vector<double>& weights, double l2);
std::vector<double> lr_gradient(const TrainData& data, const std::vector<double>& weights,
                                double l2);
LinearModel train_linear(const TrainData& data, const HyperParams& params,
                         std::vector<double>* loss_trace = nullptr);

// Single best split of a set of samples: maximizes count-weighted Gini
// decrease; ties broken by (lower feature index, lower threshold). Exposed
// for the exhaustive-search oracle.
struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;  // n*g(node) - nl*g(left) - nr*g(right)
};
SplitChoice choose_best_split(const TrainData& data, const std::vector<std::uint32_t>& members,
                              std::span<const std::size_t> feature_subset,
                              std::size_t min_samples_leaf);

TreeModel train_tree(const TrainData& data, int max_leaf_nodes);
ForestModel train_forest(const TrainData& data, const HyperParams& params, std::uint64_t seed);
MlpModel train_mlp(const TrainData& data, const HyperParams& params, std::uint64_t seed,
                   std::vector<double>* loss_trace = nullptr);
double mlp_loss(const TrainData& data, const MlpModel& m, double l2);

}  // namespace detail

}  // namespace unleak
