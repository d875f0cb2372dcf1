#include <set>

#include "doctest.h"
#include "test_helpers.hpp"
#include "unleak/errors.hpp"
#include "unleak/farm.hpp"
#include "unleak/rng.hpp"

using namespace unleak;
using unleak::test::make_dataset;
using unleak::test::TempDir;

namespace {

DatasetPtr pool_dataset(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.next_below(2));
        rows.push_back({rng.next_unit() + 0.5 * y, rng.next_unit(), rng.next_unit()});
        labels.push_back(y);
    }
    return make_dataset(rows, labels, 2);
}

FarmConfig small_config() {
    FarmConfig config;
    config.n_originals = 2;
    config.samples_per_original = 100;
    config.n_unlearned_per_original = 3;
    config.group_size = 1;
    config.method = UnlearnMethod::Scratch;
    config.model_kind = ModelKind::DecisionTree;
    config.seed = 42;
    return config;
}

}  // namespace

TEST_CASE("farm counting contract") {
    auto ds = pool_dataset(1, 400);
    const auto pool = full_subset(ds);
    const auto farm = build_farm(pool, small_config());

    CHECK(farm.originals.size() == 2);
    std::size_t unlearned = 0;
    std::set<std::size_t> deleted;
    for (const auto& original : farm.originals)
        for (const auto& unit : original.units) {
            ++unlearned;
            for (std::size_t idx : unit.request.indices) deleted.insert(idx);
        }
    CHECK(unlearned == 6);
    CHECK(deleted.size() == 6);  // disjoint within an original, distinct overall here

    const auto positives = positive_cases(farm);
    CHECK(positives.size() == 6);
    for (const auto& c : positives)
        CHECK(c.posterior_original.size() == c.posterior_unlearned.size());
}

TEST_CASE("group deletion produces group-size cases per request") {
    auto ds = pool_dataset(2, 600);
    auto config = small_config();
    config.n_originals = 1;
    config.group_size = 10;
    config.n_unlearned_per_original = 5;
    config.samples_per_original = 200;
    const auto farm = build_farm(full_subset(ds), config);

    std::set<std::size_t> deleted;
    for (const auto& unit : farm.originals[0].units) {
        CHECK(unit.request.indices.size() == 10);
        for (std::size_t idx : unit.request.indices) CHECK(deleted.insert(idx).second);
    }
    CHECK(deleted.size() == 50);
    CHECK(positive_cases(farm).size() == 50);
}

TEST_CASE("farm rejects oversubscribed deletion plans") {
    auto ds = pool_dataset(3, 300);
    auto config = small_config();
    config.group_size = 40;
    config.n_unlearned_per_original = 3;  // 120 > 100 samples per original
    CHECK_THROWS_AS(build_farm(full_subset(ds), config), ConfigError);
}

TEST_CASE("membership ground truth is auditable") {
    auto ds = pool_dataset(4, 500);
    const auto pool_parts = split_disjoint(ds, {0.8, 0.2}, 7);
    const auto farm = build_farm(pool_parts[0], small_config());

    for (const auto& original : farm.originals)
        for (const auto& unit : original.units)
            for (std::size_t idx : unit.request.indices) {
                CHECK(original.train_set.contains(idx));
            }

    const auto negatives = negative_cases(farm, pool_parts[1], 6, 99);
    CHECK(negatives.size() == 6);
    for (const auto& c : negatives) CHECK_FALSE(c.is_positive);
    // The negative pool is disjoint from the positive pool by construction.
    for (std::size_t idx : pool_parts[1].indices)
        for (const auto& original : farm.originals) CHECK_FALSE(original.train_set.contains(idx));
}

TEST_CASE("negative cases are deterministic in the seed") {
    auto ds = pool_dataset(5, 500);
    const auto parts = split_disjoint(ds, {0.8, 0.2}, 3);
    const auto farm = build_farm(parts[0], small_config());
    const auto a = negative_cases(farm, parts[1], 10, 123);
    const auto b = negative_cases(farm, parts[1], 10, 123);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].posterior_original == b[i].posterior_original);
        CHECK(a[i].posterior_unlearned == b[i].posterior_unlearned);
    }
    CHECK_THROWS_AS(negative_cases(farm, parts[1], 0, 1), DataError);
}

TEST_CASE("farm construction is independent of the worker count") {
    auto ds = pool_dataset(6, 400);
    const auto pool = full_subset(ds);
    const auto farm1 = build_farm(pool, small_config(), 1);
    const auto farm2 = build_farm(pool, small_config(), 4);
    const auto cases1 = positive_cases(farm1);
    const auto cases2 = positive_cases(farm2);
    REQUIRE(cases1.size() == cases2.size());
    for (std::size_t i = 0; i < cases1.size(); ++i) {
        CHECK(cases1[i].posterior_original == cases2[i].posterior_original);
        CHECK(cases1[i].posterior_unlearned == cases2[i].posterior_unlearned);
    }
}

TEST_CASE("sisa farm retrains shards only") {
    auto ds = pool_dataset(7, 400);
    auto config = small_config();
    config.method = UnlearnMethod::Sisa;
    config.sisa_k = 4;
    const auto farm = build_farm(full_subset(ds), config);
    for (const auto& original : farm.originals) {
        REQUIRE(original.original.is_sisa());
        for (const auto& unit : original.units) {
            const auto& before = original.original.sisa();
            const auto& after = unit.unlearned.sisa();
            int retrained = 0;
            for (std::size_t s = 0; s < before.sub_models.size(); ++s)
                retrained += before.sub_models[s].get() != after.sub_models[s].get() ? 1 : 0;
            CHECK(retrained == 1);  // single-sample request touches one shard
        }
    }
}

TEST_CASE("farm cache round-trips") {
    TempDir dir("farmcache");
    auto ds = pool_dataset(8, 400);
    const auto pool = full_subset(ds);
    const auto farm = build_farm(pool, small_config());
    save_farm(farm, dir.file("f"));
    const auto back = load_farm(dir.file("f"), ds);

    REQUIRE(back.originals.size() == farm.originals.size());
    const auto a = positive_cases(farm);
    const auto b = positive_cases(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].posterior_original == b[i].posterior_original);
        CHECK(a[i].posterior_unlearned == b[i].posterior_unlearned);
    }

    CHECK(farm_cache_key(farm.config, pool) == farm_cache_key(farm.config, pool));
    auto other = small_config();
    other.seed = 43;
    CHECK(farm_cache_key(other, pool) != farm_cache_key(farm.config, pool));
}
