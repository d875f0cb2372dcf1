#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "unleak/attack.hpp"
#include "unleak/dataset.hpp"
#include "unleak/errors.hpp"
#include "unleak/experiment.hpp"
#include "unleak/metrics.hpp"
#include "unleak/synth.hpp"
#include "unleak/unlearn.hpp"

namespace py = pybind11;
using namespace unleak;

namespace {

std::shared_ptr<EncodedDataset> encode_to_ptr(const RawTable& raw,
                                              const std::string& label_column,
                                              const std::set<std::string>& categorical,
                                              const std::set<std::string>& drop) {
    return std::make_shared<EncodedDataset>(encode(raw, label_column, categorical, drop));
}

}  // namespace

PYBIND11_MODULE(_unleak, m) {
    m.doc() = "Membership-leakage audit for machine unlearning: shadow/target model "
              "farms, two-posterior attacks, classical baseline, and degradation metrics.";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");

    py::enum_<ModelKind>(m, "ModelKind")
        .value("LOGISTIC_REGRESSION", ModelKind::LogisticRegression)
        .value("DECISION_TREE", ModelKind::DecisionTree)
        .value("RANDOM_FOREST", ModelKind::RandomForest)
        .value("MLP", ModelKind::MultiLayerPerceptron);

    py::enum_<FeatureMethod>(m, "FeatureMethod")
        .value("DIRECT_CONCAT", FeatureMethod::DirectConcat)
        .value("SORTED_CONCAT", FeatureMethod::SortedConcat)
        .value("DIRECT_DIFF", FeatureMethod::DirectDiff)
        .value("SORTED_DIFF", FeatureMethod::SortedDiff)
        .value("EUC_DIST", FeatureMethod::EucDist);

    py::enum_<UnlearnMethod>(m, "UnlearnMethod")
        .value("SCRATCH", UnlearnMethod::Scratch)
        .value("SISA", UnlearnMethod::Sisa);

    py::class_<Defense> defense(m, "Defense");
    py::enum_<Defense::Kind>(defense, "Kind")
        .value("NONE", Defense::Kind::None)
        .value("TOP_K", Defense::Kind::TopK)
        .value("LABEL_ONLY", Defense::Kind::LabelOnly);
    defense.def(py::init([](Defense::Kind kind, int k) {
                    return Defense{kind, k};
                }),
                py::arg("kind") = Defense::Kind::None, py::arg("k") = 1)
        .def_readwrite("kind", &Defense::kind)
        .def_readwrite("k", &Defense::k);

    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init<>())
        .def_readwrite("lr_l2", &HyperParams::lr_l2)
        .def_readwrite("lr_epochs", &HyperParams::lr_epochs)
        .def_readwrite("dt_max_leaf_nodes", &HyperParams::dt_max_leaf_nodes)
        .def_readwrite("rf_n_estimators", &HyperParams::rf_n_estimators)
        .def_readwrite("rf_min_samples_leaf", &HyperParams::rf_min_samples_leaf)
        .def_readwrite("mlp_hidden", &HyperParams::mlp_hidden)
        .def_readwrite("mlp_learning_rate", &HyperParams::mlp_learning_rate)
        .def_readwrite("mlp_l2", &HyperParams::mlp_l2)
        .def_readwrite("mlp_epochs", &HyperParams::mlp_epochs);

    py::class_<RawTable>(m, "RawTable")
        .def_readonly("header", &RawTable::header)
        .def_readonly("rows", &RawTable::rows)
        .def("num_rows", &RawTable::num_rows);

    py::class_<EncodedDataset, std::shared_ptr<EncodedDataset>>(m, "EncodedDataset")
        .def_property_readonly("num_rows", &EncodedDataset::num_rows)
        .def_readonly("num_classes", &EncodedDataset::num_classes)
        .def_readonly("feature_dim", &EncodedDataset::feature_dim)
        .def_readonly("feature_names", &EncodedDataset::feature_names)
        .def_readonly("class_names", &EncodedDataset::class_names)
        .def_readonly("labels", &EncodedDataset::labels)
        .def("row", [](const EncodedDataset& ds, std::size_t i) {
            const auto r = ds.row(i);
            return std::vector<double>(r.begin(), r.end());
        });

    py::class_<SubsetHandle>(m, "SubsetHandle")
        .def_readonly("indices", &SubsetHandle::indices)
        .def("__len__", &SubsetHandle::size)
        .def("contains", &SubsetHandle::contains);

    py::class_<TrainedClassifier>(m, "TrainedClassifier")
        .def_property_readonly("kind", &TrainedClassifier::kind)
        .def_property_readonly("num_classes", &TrainedClassifier::num_classes)
        .def_property_readonly("feature_dim", &TrainedClassifier::feature_dim)
        .def("predict_proba", [](const TrainedClassifier& c, const std::vector<double>& x) {
            return c.predict_proba(x);
        });

    py::class_<DeletionRequest>(m, "DeletionRequest")
        .def(py::init([](std::vector<std::size_t> indices) {
                 return DeletionRequest{std::move(indices)};
             }),
             py::arg("indices"))
        .def_readonly("indices", &DeletionRequest::indices);

    py::class_<SisaModel>(m, "SisaModel")
        .def_readonly("k", &SisaModel::k)
        .def("predict", [](const SisaModel& model, const std::vector<double>& x) {
            return sisa_predict(model, x);
        })
        .def_property_readonly("shards", [](const SisaModel& model) { return model.shards; });

    py::class_<FarmConfig>(m, "FarmConfig")
        .def(py::init<>())
        .def_readwrite("n_originals", &FarmConfig::n_originals)
        .def_readwrite("samples_per_original", &FarmConfig::samples_per_original)
        .def_readwrite("n_unlearned_per_original", &FarmConfig::n_unlearned_per_original)
        .def_readwrite("group_size", &FarmConfig::group_size)
        .def_readwrite("method", &FarmConfig::method)
        .def_readwrite("sisa_k", &FarmConfig::sisa_k)
        .def_readwrite("model_kind", &FarmConfig::model_kind)
        .def_readwrite("params", &FarmConfig::params)
        .def_readwrite("seed", &FarmConfig::seed);

    py::class_<CasePair>(m, "CasePair")
        .def_readonly("posterior_original", &CasePair::posterior_original)
        .def_readonly("posterior_unlearned", &CasePair::posterior_unlearned)
        .def_readonly("is_positive", &CasePair::is_positive)
        .def_readonly("sample_true_label", &CasePair::sample_true_label)
        .def_readonly("origin_original", &CasePair::origin_original)
        .def_readonly("origin_request", &CasePair::origin_request);

    py::class_<Farm>(m, "Farm")
        .def_property_readonly("n_originals",
                               [](const Farm& farm) { return farm.originals.size(); });

    py::class_<AttackClassifier>(m, "AttackClassifier")
        .def_readonly("method", &AttackClassifier::method)
        .def_readonly("num_classes", &AttackClassifier::num_classes);

    py::class_<BaselineClassifier>(m, "BaselineClassifier")
        .def_readonly("num_classes", &BaselineClassifier::num_classes);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("auc_ours", &MetricsReport::auc_ours)
        .def_readonly("auc_baseline", &MetricsReport::auc_baseline)
        .def_readonly("deg_count", &MetricsReport::deg_count)
        .def_readonly("deg_rate", &MetricsReport::deg_rate)
        .def_readonly("n", &MetricsReport::n);

    // data
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("label_column"),
          py::arg("categorical_columns") = std::set<std::string>{});
    m.def("encode", &encode_to_ptr, py::arg("raw"), py::arg("label_column"),
          py::arg("categorical_columns") = std::set<std::string>{},
          py::arg("drop_columns") = std::set<std::string>{});
    m.def("full_subset",
          [](const std::shared_ptr<EncodedDataset>& ds) { return full_subset(ds); });
    m.def(
        "split_disjoint",
        [](const std::shared_ptr<EncodedDataset>& ds, const std::vector<double>& fractions,
           std::uint64_t seed) { return split_disjoint(DatasetPtr(ds), fractions, seed); },
        py::arg("dataset"), py::arg("fractions"), py::arg("seed"));
    m.def("sample_subsets", &sample_subsets, py::arg("pool"), py::arg("count"), py::arg("size"),
          py::arg("seed"));

    // learners
    m.def("train", &train, py::arg("kind"), py::arg("params"), py::arg("train_set"),
          py::arg("seed"));
    m.def("accuracy", &accuracy);
    m.def("overfitting_level", &overfitting_level);
    m.def("serialize", [](const TrainedClassifier& model) {
        const auto bytes = serialize(model);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("deserialize", [](const py::bytes& data) {
        const std::string_view view = data;
        return deserialize({reinterpret_cast<const std::uint8_t*>(view.data()), view.size()});
    });

    // unlearn
    m.def("scratch_unlearn", &scratch_unlearn, py::arg("train_set"), py::arg("request"),
          py::arg("kind"), py::arg("params"), py::arg("seed"));
    m.def("sisa_train", &sisa_train, py::arg("train_set"), py::arg("k"), py::arg("kind"),
          py::arg("params"), py::arg("seed"));
    m.def("sisa_unlearn", &sisa_unlearn, py::arg("model"), py::arg("request"));
    m.def("sisa_predict", [](const SisaModel& model, const std::vector<double>& x) {
        return sisa_predict(model, x);
    });

    // farm
    m.def("build_farm", &build_farm, py::arg("positive_pool"), py::arg("config"),
          py::arg("workers") = 1);
    m.def("positive_cases", &positive_cases);
    m.def("negative_cases", &negative_cases, py::arg("farm"), py::arg("negative_pool"),
          py::arg("count"), py::arg("seed"));

    // features
    m.def("construct", &construct, py::arg("method"), py::arg("posterior_original"),
          py::arg("posterior_unlearned"));
    m.def("pseudo_posterior_topk", &pseudo_posterior_topk, py::arg("published"),
          py::arg("num_classes"));
    m.def("pseudo_posterior_label", &pseudo_posterior_label, py::arg("label"),
          py::arg("num_classes"));
    m.def("apply_defense", &apply_defense);

    // attack
    m.def("train_attack", &train_attack, py::arg("cases"), py::arg("method"), py::arg("defense"),
          py::arg("kind"), py::arg("params"), py::arg("seed"));
    m.def("infer", &infer, py::arg("attack"), py::arg("posterior_original"),
          py::arg("posterior_unlearned"));
    m.def("train_baseline", &train_baseline, py::arg("farm"), py::arg("negative_pool"),
          py::arg("defense"), py::arg("kind"), py::arg("params"), py::arg("seed"));
    m.def("infer_baseline", &infer_baseline, py::arg("baseline"),
          py::arg("posterior_original"));

    // metrics
    m.def("auc", &auc, py::arg("scores"), py::arg("labels"));
    m.def("deg_count", [](const std::vector<std::tuple<bool, double, double>>& records) {
        std::vector<EvalRecord> rs;
        for (const auto& [b, pu, pm] : records) rs.push_back({b, pu, pm});
        return deg_count(rs);
    });
    m.def("deg_rate", [](const std::vector<std::tuple<bool, double, double>>& records) {
        std::vector<EvalRecord> rs;
        for (const auto& [b, pu, pm] : records) rs.push_back({b, pu, pm});
        return deg_rate(rs);
    });

    // experiment pipeline
    m.def(
        "run_experiment",
        [](const std::string& config_json, std::size_t workers, const std::string& cache_dir) {
            const auto config = parse_config(nlohmann::json::parse(config_json));
            return run_experiment(config, workers, cache_dir).to_json().dump();
        },
        py::arg("config_json"), py::arg("workers") = 1, py::arg("cache_dir") = std::string{},
        "Runs an experiment from a config JSON string; returns the result record as JSON.");

    // synthetic data
    m.def("synth_census", &synth_census, py::arg("rows"), py::arg("seed"));
    m.def("write_csv", &write_csv, py::arg("table"), py::arg("path"));
}
