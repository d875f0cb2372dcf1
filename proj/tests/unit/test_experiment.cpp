#include <fstream>

#include "doctest.h"
#include "test_helpers.hpp"
#include "unleak/errors.hpp"
#include "unleak/experiment.hpp"
#include "unleak/synth.hpp"

using namespace unleak;
using unleak::test::TempDir;

namespace {

std::string census_csv(const TempDir& dir, std::size_t rows = 3000) {
    const auto path = dir.file("census.csv");
    write_csv(synth_census(rows, 7), path);
    return path;
}

nlohmann::json base_config(const std::string& csv_path) {
    return nlohmann::json{
        {"schema_version", 1},
        {"dataset",
         {{"path", csv_path},
          {"label_column", "income"},
          {"categorical_columns",
           {"workclass", "marital_status", "occupation", "relationship", "race", "sex",
            "native_region"}}}},
        {"seed", 5},
        {"target",
         {{"n_originals", 2},
          {"samples_per_original", 150},
          {"n_unlearned_per_original", 5},
          {"model_kind", "decision_tree"}}},
        {"shadow",
         {{"n_originals", 2},
          {"samples_per_original", 150},
          {"n_unlearned_per_original", 5},
          {"model_kind", "decision_tree"}}},
        {"attack",
         {{"kinds", {"decision_tree"}},
          {"methods", {"sorted_diff"}},
          {"params", {{"mlp_epochs", 20}, {"mlp_hidden", 8}}}}}};
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
    TempDir dir("cfg");
    auto j = base_config(census_csv(dir, 600));

    auto bad = j;
    bad["typo_key"] = 1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    bad = j;
    bad["target"]["surprise"] = 2;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    bad = j;
    bad["attack"]["kinds"] = {"quantum_svm"};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    bad = j;
    bad.erase("dataset");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);

    bad = j;
    bad["split"] = {{"target_fraction", 1.5}};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("experiment runs end to end and is reproducible") {
    TempDir dir("exp");
    const auto config = parse_config(base_config(census_csv(dir)));

    const auto first = run_experiment(config, 1);
    REQUIRE(first.rows.size() == 1);
    const auto& report = first.rows[0].report;
    CHECK(report.n > 0);
    CHECK(report.auc_ours >= 0.0);
    CHECK(report.auc_ours <= 1.0);
    CHECK(report.auc_baseline >= 0.0);
    CHECK(report.auc_baseline <= 1.0);
    CHECK(report.deg_count >= 0.0);
    CHECK(report.deg_count <= 1.0);
    CHECK(report.deg_rate >= -1.0);
    CHECK(report.deg_rate <= 1.0);
    CHECK(first.target_overfitting.size() == 2);

    const auto second = run_experiment(config, 1);
    CHECK(first.to_json(false) == second.to_json(false));

    const auto parallel = run_experiment(config, 4);
    CHECK(first.to_json(false) == parallel.to_json(false));
}

TEST_CASE("grid covers every kind x method combination") {
    TempDir dir("grid");
    auto j = base_config(census_csv(dir));
    j["attack"]["kinds"] = {"logistic_regression", "decision_tree", "random_forest", "mlp"};
    j["attack"]["methods"] =
        {"direct_concat", "sorted_concat", "direct_diff", "sorted_diff", "euc_dist"};
    const auto record = run_experiment(parse_config(j), 2);
    CHECK(record.rows.size() == 20);

    const auto csv = report_csv(record);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 21);  // header + one line per grid cell
}

TEST_CASE("sisa with k=1 reproduces the scratch experiment bit-for-bit") {
    TempDir dir("sisa1");
    auto j = base_config(census_csv(dir));
    auto sisa = j;
    sisa["target"]["method"] = "sisa";
    sisa["target"]["sisa_k"] = 1;
    sisa["shadow"]["method"] = "sisa";
    sisa["shadow"]["sisa_k"] = 1;

    const auto scratch_record = run_experiment(parse_config(j), 2);
    const auto sisa_record = run_experiment(parse_config(sisa), 2);
    REQUIRE(scratch_record.rows.size() == sisa_record.rows.size());
    for (std::size_t i = 0; i < scratch_record.rows.size(); ++i) {
        CHECK(scratch_record.rows[i].report.auc_ours == sisa_record.rows[i].report.auc_ours);
        CHECK(scratch_record.rows[i].report.auc_baseline ==
              sisa_record.rows[i].report.auc_baseline);
        CHECK(scratch_record.rows[i].report.deg_count == sisa_record.rows[i].report.deg_count);
        CHECK(scratch_record.rows[i].report.deg_rate == sisa_record.rows[i].report.deg_rate);
    }
}

TEST_CASE("result records round-trip through json") {
    TempDir dir("rt");
    const auto record = run_experiment(parse_config(base_config(census_csv(dir))), 2);
    const auto j = record.to_json();
    const auto back = ResultRecord::from_json(j);
    CHECK(back.to_json() == j);
}

TEST_CASE("empty grid produces a header-only csv") {
    TempDir dir("empty");
    auto j = base_config(census_csv(dir, 600));
    j["attack"]["kinds"] = nlohmann::json::array();
    j["attack"]["methods"] = nlohmann::json::array();
    const auto record = run_experiment(parse_config(j), 1);
    CHECK(record.rows.empty());
    const auto csv = report_csv(record);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 1);
}

TEST_CASE("farm cache makes reruns identical") {
    TempDir dir("cache");
    const auto config = parse_config(base_config(census_csv(dir)));
    const auto cache = dir.file("farms");
    const auto first = run_experiment(config, 2, cache);
    const auto second = run_experiment(config, 2, cache);  // loads from cache
    CHECK(first.to_json(false) == second.to_json(false));
}

TEST_CASE("write_report emits json and csv files") {
    TempDir dir("files");
    const auto record = run_experiment(parse_config(base_config(census_csv(dir, 800))), 2);

    const auto json_path = dir.file("r.json");
    write_report(record, "json", json_path);
    std::ifstream jf(json_path);
    nlohmann::json parsed;
    jf >> parsed;
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed.contains("rows"));

    const auto csv_path = dir.file("r.csv");
    write_report(record, "csv", csv_path);
    std::ifstream cf(csv_path);
    std::string header;
    std::getline(cf, header);
    CHECK(header.find("auc_ours") != std::string::npos);

    CHECK_THROWS_AS(write_report(record, "yaml", dir.file("r.yaml")), ConfigError);
}
