#include <cstring>

#include "unleak/classifier.hpp"
#include "unleak/errors.hpp"
#include "unleak/unlearn.hpp"

namespace unleak {

namespace {

constexpr char kMagic[4] = {'U', 'A', 'U', 'D'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    template <class T>
    T get() {
        if (pos + sizeof(T) > bytes.size()) throw DataError("malformed model: truncated");
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
};

std::uint8_t kind_tag(ModelKind kind) {
    switch (kind) {
        case ModelKind::LogisticRegression: return 0;
        case ModelKind::DecisionTree: return 1;
        case ModelKind::RandomForest: return 2;
        case ModelKind::MultiLayerPerceptron: return 3;
    }
    throw DataError("invalid model kind");
}

ModelKind kind_from_tag(std::uint8_t tag) {
    switch (tag) {
        case 0: return ModelKind::LogisticRegression;
        case 1: return ModelKind::DecisionTree;
        case 2: return ModelKind::RandomForest;
        case 3: return ModelKind::MultiLayerPerceptron;
    }
    throw DataError("malformed model: unknown kind tag");
}

void put_doubles(std::vector<std::uint8_t>& out, const std::vector<double>& v) {
    put<std::uint64_t>(out, v.size());
    for (double x : v) put<double>(out, x);
}

std::vector<double> get_doubles(Reader& r) {
    const auto n = r.get<std::uint64_t>();
    std::vector<double> v(n);
    for (double& x : v) x = r.get<double>();
    return v;
}

void put_tree(std::vector<std::uint8_t>& out, const TreeModel& tree) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
        put<std::int32_t>(out, node.feature);
        if (node.feature >= 0) {
            put<double>(out, node.threshold);
            put<std::int32_t>(out, node.left);
            put<std::int32_t>(out, node.right);
        } else {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(node.counts.size()));
            for (std::uint32_t c : node.counts) put<std::uint32_t>(out, c);
        }
    }
}

TreeModel get_tree(Reader& r) {
    TreeModel tree;
    const auto n = r.get<std::uint32_t>();
    tree.nodes.resize(n);
    for (auto& node : tree.nodes) {
        node.feature = r.get<std::int32_t>();
        if (node.feature >= 0) {
            node.threshold = r.get<double>();
            node.left = r.get<std::int32_t>();
            node.right = r.get<std::int32_t>();
            if (node.left < 0 || node.right < 0 ||
                static_cast<std::uint32_t>(node.left) >= n ||
                static_cast<std::uint32_t>(node.right) >= n)
                throw DataError("malformed model: child index out of range");
        } else {
            const auto k = r.get<std::uint32_t>();
            node.counts.resize(k);
            for (auto& c : node.counts) c = r.get<std::uint32_t>();
        }
    }
    if (tree.nodes.empty()) throw DataError("malformed model: empty tree");
    return tree;
}

}  // namespace

std::vector<std::uint8_t> serialize(const TrainedClassifier& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint16_t>(out, kVersion);
    put<std::uint8_t>(out, kind_tag(model.kind()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_classes()));
    put<std::uint64_t>(out, model.feature_dim());
    put<std::uint64_t>(out, model.train_seed());

    switch (model.kind()) {
        case ModelKind::LogisticRegression:
            put_doubles(out, model.impl<LinearModel>().weights);
            break;
        case ModelKind::DecisionTree:
            put_tree(out, model.impl<TreeModel>());
            break;
        case ModelKind::RandomForest: {
            const auto& forest = model.impl<ForestModel>();
            put<std::uint32_t>(out, static_cast<std::uint32_t>(forest.trees.size()));
            for (const auto& tree : forest.trees) put_tree(out, tree);
            break;
        }
        case ModelKind::MultiLayerPerceptron: {
            const auto& m = model.impl<MlpModel>();
            put<std::int32_t>(out, m.hidden);
            put_doubles(out, m.w1);
            put_doubles(out, m.b1);
            put_doubles(out, m.w2);
            put_doubles(out, m.b2);
            break;
        }
    }
    return out;
}

TrainedClassifier deserialize(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("malformed model: bad magic");
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion)
        throw DataError("unsupported model format version " + std::to_string(version));

    const ModelKind kind = kind_from_tag(r.get<std::uint8_t>());
    const auto num_classes = static_cast<int>(r.get<std::uint32_t>());
    const auto feature_dim = static_cast<std::size_t>(r.get<std::uint64_t>());
    const auto train_seed = r.get<std::uint64_t>();
    if (num_classes < 2) throw DataError("malformed model: class count");

    switch (kind) {
        case ModelKind::LogisticRegression: {
            LinearModel m{get_doubles(r)};
            if (m.weights.size() != static_cast<std::size_t>(num_classes) * (feature_dim + 1))
                throw DataError("malformed model: weight shape");
            return {kind, num_classes, feature_dim, train_seed, std::move(m)};
        }
        case ModelKind::DecisionTree:
            return {kind, num_classes, feature_dim, train_seed, get_tree(r)};
        case ModelKind::RandomForest: {
            ForestModel forest;
            const auto n = r.get<std::uint32_t>();
            forest.trees.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) forest.trees.push_back(get_tree(r));
            if (forest.trees.empty()) throw DataError("malformed model: empty forest");
            return {kind, num_classes, feature_dim, train_seed, std::move(forest)};
        }
        case ModelKind::MultiLayerPerceptron: {
            MlpModel m;
            m.hidden = r.get<std::int32_t>();
            m.w1 = get_doubles(r);
            m.b1 = get_doubles(r);
            m.w2 = get_doubles(r);
            m.b2 = get_doubles(r);
            const auto h = static_cast<std::size_t>(m.hidden);
            if (m.w1.size() != h * feature_dim || m.b1.size() != h ||
                m.w2.size() != static_cast<std::size_t>(num_classes) * h ||
                m.b2.size() != static_cast<std::size_t>(num_classes))
                throw DataError("malformed model: layer shape");
            return {kind, num_classes, feature_dim, train_seed, std::move(m)};
        }
    }
    throw DataError("malformed model");
}

std::vector<std::uint8_t> serialize(const SisaModel& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint16_t>(out, kVersion);
    put<std::uint8_t>(out, 0xFF);  // ensemble frame, distinct from classifier tags
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.k));
    put<std::uint8_t>(out, kind_tag(model.kind));
    put<std::uint64_t>(out, model.base_seed);
    put<double>(out, model.params.lr_l2);
    put<std::int32_t>(out, model.params.lr_epochs);
    put<std::int32_t>(out, model.params.dt_max_leaf_nodes);
    put<std::int32_t>(out, model.params.rf_n_estimators);
    put<std::int32_t>(out, model.params.rf_min_samples_leaf);
    put<std::int32_t>(out, model.params.mlp_hidden);
    put<double>(out, model.params.mlp_learning_rate);
    put<double>(out, model.params.mlp_l2);
    put<std::int32_t>(out, model.params.mlp_epochs);
    for (const auto& shard : model.shards) {
        put<std::uint64_t>(out, shard.indices.size());
        for (std::size_t idx : shard.indices) put<std::uint64_t>(out, idx);
    }
    for (const auto& sub : model.sub_models) {
        const auto envelope = serialize(*sub);
        put<std::uint64_t>(out, envelope.size());
        out.insert(out.end(), envelope.begin(), envelope.end());
    }
    return out;
}

SisaModel deserialize_sisa(std::span<const std::uint8_t> bytes, DatasetPtr parent) {
    Reader r{bytes};
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("malformed model: bad magic");
    if (r.get<std::uint16_t>() != kVersion) throw DataError("unsupported model format version");
    if (r.get<std::uint8_t>() != 0xFF) throw DataError("malformed model: not an ensemble frame");

    SisaModel model;
    model.k = static_cast<int>(r.get<std::uint32_t>());
    model.kind = kind_from_tag(r.get<std::uint8_t>());
    model.base_seed = r.get<std::uint64_t>();
    model.params.lr_l2 = r.get<double>();
    model.params.lr_epochs = r.get<std::int32_t>();
    model.params.dt_max_leaf_nodes = r.get<std::int32_t>();
    model.params.rf_n_estimators = r.get<std::int32_t>();
    model.params.rf_min_samples_leaf = r.get<std::int32_t>();
    model.params.mlp_hidden = r.get<std::int32_t>();
    model.params.mlp_learning_rate = r.get<double>();
    model.params.mlp_l2 = r.get<double>();
    model.params.mlp_epochs = r.get<std::int32_t>();
    if (model.k <= 0) throw DataError("malformed model: shard count");

    for (int i = 0; i < model.k; ++i) {
        const auto n = r.get<std::uint64_t>();
        std::vector<std::size_t> idx(n);
        for (auto& v : idx) v = r.get<std::uint64_t>();
        model.shards.push_back(make_subset(parent, std::move(idx)));
    }
    for (int i = 0; i < model.k; ++i) {
        const auto len = r.get<std::uint64_t>();
        if (r.pos + len > bytes.size()) throw DataError("malformed model: truncated");
        auto sub = deserialize(bytes.subspan(r.pos, len));
        r.pos += len;
        model.sub_models.push_back(std::make_shared<TrainedClassifier>(std::move(sub)));
    }
    return model;
}

}  // namespace unleak
