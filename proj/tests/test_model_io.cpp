#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "radiofp/model_io.hpp"
#include "radiofp/pipeline.hpp"

using namespace radiofp;

namespace {

PipelineConfig config_for(ModelKind kind) {
  PipelineConfig cfg;
  cfg.model = kind;
  cfg.layout = FeatureLayout{FeatureKind::Reduced, LinkSet::all()};
  cfg.hp.n_trees = 8;
  cfg.hp.filters = 2;
  cfg.hp.hidden = {6, 5, 4};
  cfg.hp.epochs = 1;
  cfg.hp.batch_size = 8;
  return cfg;
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("base64 doubles") {
    const std::vector<double> v{0.0, -1.5, 1e-300, 3.141592653589793, -0.0, 1e308};
    const auto text = encode_doubles(v);
    const auto back = decode_doubles(text);
    REQUIRE(back.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::signbit(back[i]) == std::signbit(v[i]));
    CHECK(back == v);
    CHECK(decode_doubles(encode_doubles(std::vector<double>{})).empty());
    CHECK_THROWS_AS(decode_doubles("abc"), std::invalid_argument);
    CHECK_THROWS_AS(decode_doubles("ab!d"), std::invalid_argument);
  }

  TEST_CASE("model names") {
    for (auto k : {ModelKind::L1L2Svm, ModelKind::L2L2Svm, ModelKind::RbfSvm, ModelKind::Forest, ModelKind::ConvNet})
      CHECK(model_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(model_kind_from_string("perceptron"), std::invalid_argument);
    PipelineConfig cfg;
    CHECK(cfg.standardize());
    cfg.model = ModelKind::Forest;
    CHECK_FALSE(cfg.standardize());
    cfg.hp.standardize = true;
    CHECK(cfg.standardize());
  }

  TEST_CASE("every model kind survives a JSON round trip") {
    const auto d = testing::generated(3, 21);
    for (auto kind : {ModelKind::L1L2Svm, ModelKind::L2L2Svm, ModelKind::RbfSvm, ModelKind::Forest, ModelKind::ConvNet}) {
      for (auto task : {Task::Fine, Task::Coarse}) {
        CAPTURE(to_string(kind));
        auto cfg = config_for(kind);
        cfg.task = task;
        const auto model = train_classifier(cfg, d, 5);
        const auto j = model->to_json();
        CHECK(j.at("format") == "radiofp-model");
        const auto text = j.dump();
        const auto loaded = load_classifier(nlohmann::json::parse(text));
        CHECK(loaded->to_json().dump() == text);
        for (const auto& fp : d) CHECK(loaded->predict(fp) == model->predict(fp));
        CHECK(loaded->size().to_json() == model->size().to_json());
        CHECK((linear_model_of(*model) != nullptr) == (kind == ModelKind::L1L2Svm || kind == ModelKind::L2L2Svm));
      }
    }
  }

  TEST_CASE("RBF support vectors in base64 form") {
    const auto d = testing::generated(2, 4);
    const Matrix x = standardize_apply(standardize_fit(feature_matrix(d, FeatureLayout{FeatureKind::Reduced, LinkSet::all()})),
                                       feature_matrix(d, FeatureLayout{FeatureKind::Reduced, LinkSet::all()}));
    std::vector<int> labels;
    for (const auto& fp : d) labels.push_back(ordinal(fp.fine));
    const auto classes = task_classes(Task::Fine);
    const auto m = train_rbf_multiclass(x, labels, classes, RbfOptions{});
    for (bool b64 : {false, true}) {
      const auto j = to_json(m, b64);
      CHECK(j.contains("support_vectors_b64") == b64);
      const auto back = rbf_model_from_json(nlohmann::json::parse(j.dump()));
      CHECK(back.support_vectors == m.support_vectors);
      CHECK(back.support_index == m.support_index);
      for (std::size_t r = 0; r < x.rows(); ++r) CHECK(decision_values(back, x.row(r)) == decision_values(m, x.row(r)));
    }
  }

  TEST_CASE("forest trees are nested objects") {
    const Matrix x(4, 1, std::vector<double>{0, 1, 2, 3});
    const std::vector<int> y{1, 1, 2, 2};
    ForestOptions fo;
    fo.n_trees = 2;
    fo.bootstrap = false;
    const auto f = train_forest(x, y, fo);
    const auto j = to_json(f);
    const auto& root = j.at("trees").at(0);
    CHECK(root.at("idx") == 0);
    CHECK(root.at("val") == 1.5);
    CHECK(root.at("children").size() == 2);
    CHECK(root.at("children").at(0).at("val") == 1);
    const auto back = forest_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.node_count() == f.node_count());
    CHECK(predict_forest(back, std::vector<double>{1.5}) == 1);
  }

  TEST_CASE("malformed model JSON") {
    CHECK_THROWS_AS(load_classifier(nlohmann::json::object()), std::invalid_argument);
    auto j = nlohmann::json::parse(R"({"format":"radiofp-model","version":1,"model":"nope","task":"fine"})");
    CHECK_THROWS_AS(load_classifier(j), std::invalid_argument);
    j["model"] = "forest";
    CHECK_THROWS_AS(load_classifier(j), std::invalid_argument);
  }
}
