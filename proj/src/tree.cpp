#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "unleak/classifier.hpp"
#include "unleak/errors.hpp"

namespace unleak::detail {

namespace {

std::vector<std::uint32_t> class_counts(const TrainData& data,
                                        const std::vector<std::uint32_t>& members) {
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(data.num_classes), 0);
    for (std::uint32_t m : members) ++counts[static_cast<std::size_t>(data.y[m])];
    return counts;
}

// n * gini(node) == n - sum(c^2)/n
double weighted_gini(const std::vector<std::uint32_t>& counts, std::size_t n) {
    double sq = 0.0;
    for (std::uint32_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sq / static_cast<double>(n);
}

bool is_pure(const std::vector<std::uint32_t>& counts) {
    int nonzero = 0;
    for (std::uint32_t c : counts) nonzero += c > 0 ? 1 : 0;
    return nonzero <= 1;
}

}  // namespace

SplitChoice choose_best_split(const TrainData& data, const std::vector<std::uint32_t>& members,
                              std::span<const std::size_t> feature_subset,
                              std::size_t min_samples_leaf) {
    const std::size_t n = members.size();
    SplitChoice best;
    if (n < 2 * min_samples_leaf || n < 2) return best;

    auto counts = class_counts(data, members);
    if (is_pure(counts)) return best;
    const double parent = weighted_gini(counts, n);

    std::vector<std::uint32_t> order(members);
    std::vector<std::uint32_t> left(static_cast<std::size_t>(data.num_classes));
    // Features are visited in ascending index order and thresholds in
    // ascending value order, so keeping only strict improvements implements
    // the (lower feature, lower threshold) tie rule.
    for (std::size_t f : feature_subset) {
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return data.x[a * data.d + f] < data.x[b * data.d + f];
        });
        std::fill(left.begin(), left.end(), 0u);
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (std::uint32_t c : counts) right_sq += static_cast<double>(c) * c;
        auto right = counts;

        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto cls = static_cast<std::size_t>(data.y[order[i]]);
            left_sq += 2.0 * left[cls] + 1.0;
            right_sq += -2.0 * right[cls] + 1.0;
            ++left[cls];
            --right[cls];

            const double lo = data.x[order[i] * data.d + f];
            const double hi = data.x[order[i + 1] * data.d + f];
            if (!(lo < hi)) continue;  // threshold only between distinct values
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < min_samples_leaf || nr < min_samples_leaf) continue;

            const double children =
                static_cast<double>(n) -
                (left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr));
            const double gain = parent - children;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = lo + (hi - lo) / 2.0;
                best.gain = gain;
            }
        }
    }
    if (best.found && best.gain <= 0.0) best.found = false;
    return best;
}

namespace {

struct GrowNode {
    std::int32_t node_index;
    std::vector<std::uint32_t> members;
    SplitChoice split;
};

std::int32_t add_leaf(TreeModel& model, const TrainData& data,
                      const std::vector<std::uint32_t>& members) {
    TreeNode node;
    node.counts = class_counts(data, members);
    model.nodes.push_back(std::move(node));
    return static_cast<std::int32_t>(model.nodes.size()) - 1;
}

void partition(const TrainData& data, const std::vector<std::uint32_t>& members,
               const SplitChoice& split, std::vector<std::uint32_t>& left,
               std::vector<std::uint32_t>& right) {
    for (std::uint32_t m : members) {
        if (data.x[m * data.d + split.feature] <= split.threshold)
            left.push_back(m);
        else
            right.push_back(m);
    }
}

}  // namespace

TreeModel train_tree(const TrainData& data, int max_leaf_nodes) {
    std::vector<std::size_t> all_features(data.d);
    for (std::size_t f = 0; f < data.d; ++f) all_features[f] = f;

    TreeModel model;
    std::vector<std::uint32_t> root_members(data.n);
    for (std::size_t i = 0; i < data.n; ++i) root_members[i] = static_cast<std::uint32_t>(i);

    std::vector<GrowNode> frontier;
    frontier.push_back({add_leaf(model, data, root_members), std::move(root_members),
                        SplitChoice{}});
    frontier.back().split = choose_best_split(data, frontier.back().members, all_features, 1);

    int leaves = 1;
    // Best-first growth: always expand the frontier node with the largest
    // impurity decrease; earliest-created wins ties.
    while (leaves < max_leaf_nodes) {
        std::size_t pick = frontier.size();
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (!frontier[i].split.found) continue;
            if (pick == frontier.size() || frontier[i].split.gain > frontier[pick].split.gain)
                pick = i;
        }
        if (pick == frontier.size()) break;  // nothing splittable remains

        GrowNode node = std::move(frontier[pick]);
        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));

        std::vector<std::uint32_t> left_members, right_members;
        partition(data, node.members, node.split, left_members, right_members);

        const std::int32_t left_index = add_leaf(model, data, left_members);
        const std::int32_t right_index = add_leaf(model, data, right_members);
        TreeNode& parent = model.nodes[static_cast<std::size_t>(node.node_index)];
        parent.feature = static_cast<std::int32_t>(node.split.feature);
        parent.threshold = node.split.threshold;
        parent.left = left_index;
        parent.right = right_index;
        parent.counts.clear();

        GrowNode l{left_index, std::move(left_members), SplitChoice{}};
        l.split = choose_best_split(data, l.members, all_features, 1);
        GrowNode r{right_index, std::move(right_members), SplitChoice{}};
        r.split = choose_best_split(data, r.members, all_features, 1);
        frontier.push_back(std::move(l));
        frontier.push_back(std::move(r));
        ++leaves;
    }
    return model;
}

}  // namespace unleak::detail
