#include <algorithm>
#include <cmath>
#include <vector>

#include "unleak/classifier.hpp"
#include "unleak/rng.hpp"

namespace unleak::detail {

namespace {

std::vector<std::uint32_t> leaf_counts(const TrainData& data,
                                       const std::vector<std::uint32_t>& members) {
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(data.num_classes), 0);
    for (std::uint32_t m : members) ++counts[static_cast<std::size_t>(data.y[m])];
    return counts;
}

// One bagged tree: depth-first growth, per-node feature subsampling, both
// children of every split hold at least min_samples_leaf samples.
TreeModel train_bagged_tree(const TrainData& data, const HyperParams& params, Rng& rng) {
    const auto msl = static_cast<std::size_t>(params.rf_min_samples_leaf);
    const auto n_sub =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.d))));

    std::vector<std::uint32_t> bootstrap(data.n);
    for (auto& m : bootstrap) m = static_cast<std::uint32_t>(rng.next_below(data.n));

    TreeModel model;
    struct Pending {
        std::int32_t node_index;
        std::vector<std::uint32_t> members;
    };
    std::vector<Pending> stack;
    model.nodes.emplace_back();
    model.nodes[0].counts = leaf_counts(data, bootstrap);
    stack.push_back({0, std::move(bootstrap)});

    std::vector<std::size_t> subset;
    while (!stack.empty()) {
        Pending node = std::move(stack.back());
        stack.pop_back();

        subset = rng.sample_without_replacement(data.d, n_sub);
        std::sort(subset.begin(), subset.end());
        const SplitChoice split = choose_best_split(data, node.members, subset, msl);
        if (!split.found) continue;  // stays a leaf

        std::vector<std::uint32_t> left, right;
        for (std::uint32_t m : node.members) {
            if (data.x[m * data.d + split.feature] <= split.threshold)
                left.push_back(m);
            else
                right.push_back(m);
        }

        TreeNode left_node, right_node;
        left_node.counts = leaf_counts(data, left);
        right_node.counts = leaf_counts(data, right);
        model.nodes.push_back(std::move(left_node));
        const auto left_index = static_cast<std::int32_t>(model.nodes.size()) - 1;
        model.nodes.push_back(std::move(right_node));
        const auto right_index = static_cast<std::int32_t>(model.nodes.size()) - 1;

        TreeNode& parent = model.nodes[static_cast<std::size_t>(node.node_index)];
        parent.feature = static_cast<std::int32_t>(split.feature);
        parent.threshold = split.threshold;
        parent.left = left_index;
        parent.right = right_index;
        parent.counts.clear();

        // Left pushed last so it is grown first (preorder); keeps the RNG
        // stream independent of anything but the tree shape.
        stack.push_back({right_index, std::move(right)});
        stack.push_back({left_index, std::move(left)});
    }
    return model;
}

}  // namespace

ForestModel train_forest(const TrainData& data, const HyperParams& params, std::uint64_t seed) {
    ForestModel model;
    model.trees.reserve(static_cast<std::size_t>(params.rf_n_estimators));
    for (int t = 0; t < params.rf_n_estimators; ++t) {
        Rng rng(seed + static_cast<std::uint64_t>(t));
        model.trees.push_back(train_bagged_tree(data, params, rng));
    }
    return model;
}

}  // namespace unleak::detail
