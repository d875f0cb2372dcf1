#include <algorithm>
#include <set>

#include "doctest.h"
#include "test_helpers.hpp"
#include "unleak/errors.hpp"
#include "unleak/rng.hpp"
#include "unleak/unlearn.hpp"

using namespace unleak;
using unleak::test::make_dataset;

namespace {

SubsetHandle random_training_set(std::uint64_t seed, std::size_t n, std::size_t d = 3,
                                 int classes = 2) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (double& v : row) v = rng.next_unit();
        rows.push_back(std::move(row));
        labels.push_back(i < static_cast<std::size_t>(classes)
                             ? static_cast<int>(i)
                             : static_cast<int>(rng.next_below(classes)));
    }
    return full_subset(make_dataset(rows, labels, classes));
}

std::vector<double> probe(std::uint64_t seed, std::size_t d = 3) {
    Rng rng(seed);
    std::vector<double> x(d);
    for (double& v : x) v = rng.next_unit();
    return x;
}

}  // namespace

TEST_CASE("scratch unlearn trains on the set difference") {
    const auto set = random_training_set(1, 50);
    const DeletionRequest request{{set.indices[3], set.indices[10]}};

    const auto unlearned = scratch_unlearn(set, request, ModelKind::DecisionTree, {}, 9);

    std::vector<std::size_t> remaining;
    for (std::size_t idx : set.indices)
        if (idx != request.indices[0] && idx != request.indices[1]) remaining.push_back(idx);
    CHECK(remaining.size() == 48);
    const auto direct = train(ModelKind::DecisionTree, {},
                              SubsetHandle{set.parent, remaining}, 9);
    CHECK(unlearned.predict_proba(probe(5)) == direct.predict_proba(probe(5)));
}

TEST_CASE("scratch unlearn validates the request") {
    const auto set = random_training_set(2, 20);
    CHECK_THROWS_AS(scratch_unlearn(set, DeletionRequest{{999}}, ModelKind::DecisionTree, {}, 1),
                    DataError);
    CHECK_THROWS_AS(scratch_unlearn(set, DeletionRequest{{}}, ModelKind::DecisionTree, {}, 1),
                    DataError);
    CHECK_THROWS_AS(
        scratch_unlearn(set, DeletionRequest{{set.indices[0], set.indices[0]}},
                        ModelKind::DecisionTree, {}, 1),
        DataError);
    CHECK_THROWS_AS(scratch_unlearn(set, DeletionRequest{set.indices},
                                    ModelKind::DecisionTree, {}, 1),
                    DataError);
}

TEST_CASE("sisa with one shard equals scratch training bit-for-bit") {
    const auto set = random_training_set(3, 40);
    const auto sisa = sisa_train(set, 1, ModelKind::DecisionTree, {}, 21);
    const auto scratch = train(ModelKind::DecisionTree, {}, set, 21);
    for (int i = 0; i < 20; ++i) {
        const auto x = probe(100 + static_cast<std::uint64_t>(i));
        CHECK(sisa_predict(sisa, x) == scratch.predict_proba(x));
    }
}

TEST_CASE("sisa shards partition the training set") {
    const auto set = random_training_set(4, 500);
    const auto sisa = sisa_train(set, 5, ModelKind::DecisionTree, {}, 3);
    CHECK(sisa.shards.size() == 5);
    std::set<std::size_t> all;
    for (const auto& shard : sisa.shards) {
        CHECK(shard.size() == 100);
        for (std::size_t idx : shard.indices) CHECK(all.insert(idx).second);
    }
    CHECK(all.size() == set.size());
}

TEST_CASE("sisa unlearn retrains only the touched shards") {
    const auto set = random_training_set(5, 60);
    const auto sisa = sisa_train(set, 4, ModelKind::DecisionTree, {}, 17);

    SUBCASE("single-shard request") {
        const DeletionRequest request{{sisa.shards[2].indices[0], sisa.shards[2].indices[3]}};
        const auto after = sisa_unlearn(sisa, request);
        CHECK(after.sub_models[0].get() == sisa.sub_models[0].get());
        CHECK(after.sub_models[1].get() == sisa.sub_models[1].get());
        CHECK(after.sub_models[2].get() != sisa.sub_models[2].get());
        CHECK(after.sub_models[3].get() == sisa.sub_models[3].get());
        CHECK(after.shards[2].size() == sisa.shards[2].size() - 2);
    }

    SUBCASE("request spanning two shards") {
        const DeletionRequest request{{sisa.shards[1].indices[0], sisa.shards[3].indices[1]}};
        const auto after = sisa_unlearn(sisa, request);
        int retrained = 0;
        for (int i = 0; i < 4; ++i)
            retrained += after.sub_models[static_cast<std::size_t>(i)].get() !=
                                 sisa.sub_models[static_cast<std::size_t>(i)].get()
                             ? 1
                             : 0;
        CHECK(retrained == 2);
    }

    SUBCASE("deleting an entire shard is degenerate") {
        const DeletionRequest request{sisa.shards[0].indices};
        CHECK_THROWS_AS(sisa_unlearn(sisa, request), DataError);
    }

    SUBCASE("request outside the training set") {
        CHECK_THROWS_AS(sisa_unlearn(sisa, DeletionRequest{{9999}}), DataError);
    }
}

TEST_CASE("deleted indices vanish from every shard") {
    const auto set = random_training_set(6, 80);
    const auto sisa = sisa_train(set, 3, ModelKind::DecisionTree, {}, 2);
    const DeletionRequest request{
        {sisa.shards[0].indices[1], sisa.shards[1].indices[2], sisa.shards[2].indices[0]}};
    const auto after = sisa_unlearn(sisa, request);
    for (std::size_t idx : request.indices)
        for (const auto& shard : after.shards) CHECK_FALSE(shard.contains(idx));
}

TEST_CASE("sisa posterior averaging") {
    // Hand-built ensemble: tree leaves with counts (2,1) give (0.6, 0.4);
    // a linear sub-model with a huge negative logit gives exactly (0, 1).
    auto ds = make_dataset({{0.0}, {1.0}}, {0, 1}, 2);

    TreeModel leaf;
    leaf.nodes.emplace_back();
    leaf.nodes[0].counts = {2, 1};

    LinearModel extreme;
    extreme.weights = {0.0, -800.0, 0.0, 0.0};  // class-0 bias -800: softmax underflows to 0

    SisaModel ensemble;
    ensemble.k = 3;
    ensemble.kind = ModelKind::DecisionTree;
    ensemble.base_seed = 0;
    ensemble.shards = {full_subset(ds), full_subset(ds), full_subset(ds)};
    ensemble.sub_models = {
        std::make_shared<TrainedClassifier>(ModelKind::DecisionTree, 2, 1, 0, leaf),
        std::make_shared<TrainedClassifier>(ModelKind::DecisionTree, 2, 1, 0, leaf),
        std::make_shared<TrainedClassifier>(ModelKind::LogisticRegression, 2, 1, 0, extreme)};

    const auto p = sisa_predict(ensemble, std::vector<double>{0.5});
    CHECK(p[0] == doctest::Approx(0.4));
    CHECK(p[1] == doctest::Approx(0.6));
    CHECK(is_valid_posterior(p));

    SisaModel pair;
    pair.k = 2;
    pair.kind = ModelKind::LogisticRegression;
    pair.base_seed = 0;
    pair.shards = {full_subset(ds), full_subset(ds)};
    LinearModel one_hot0, one_hot1;
    one_hot0.weights = {0.0, 800.0, 0.0, 0.0};
    one_hot1.weights = {0.0, -800.0, 0.0, 0.0};
    pair.sub_models = {
        std::make_shared<TrainedClassifier>(ModelKind::LogisticRegression, 2, 1, 0, one_hot0),
        std::make_shared<TrainedClassifier>(ModelKind::LogisticRegression, 2, 1, 0, one_hot1)};
    const auto q = sisa_predict(pair, std::vector<double>{0.5});
    CHECK(q[0] == doctest::Approx(0.5));
    CHECK(q[1] == doctest::Approx(0.5));
}

TEST_CASE("sisa serialization round-trips") {
    const auto set = random_training_set(7, 40);
    const auto sisa = sisa_train(set, 3, ModelKind::DecisionTree, {}, 8);
    const auto bytes = serialize(sisa);
    const auto back = deserialize_sisa(bytes, set.parent);
    CHECK(back.k == 3);
    for (int i = 0; i < 10; ++i) {
        const auto x = probe(200 + static_cast<std::uint64_t>(i));
        CHECK(sisa_predict(back, x) == sisa_predict(sisa, x));
    }
    for (int i = 0; i < 3; ++i)
        CHECK(back.shards[static_cast<std::size_t>(i)].indices ==
              sisa.shards[static_cast<std::size_t>(i)].indices);
}
