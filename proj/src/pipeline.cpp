#include "radiofp/pipeline.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "radiofp/convnet.hpp"
#include "radiofp/kernel_svm.hpp"
#include "radiofp/linear_svm.hpp"
#include "radiofp/model_io.hpp"
#include "radiofp/random_forest.hpp"

namespace radiofp {

std::string_view to_string(Task task) noexcept { return task == Task::Fine ? "fine" : "coarse"; }

Task task_from_string(std::string_view text) {
  if (text == "fine") return Task::Fine;
  if (text == "coarse") return Task::Coarse;
  throw std::invalid_argument("unknown task '" + std::string(text) + "' (expected fine or coarse)");
}

int task_label(const Fingerprint& fp, Task task) {
  return task == Task::Fine ? ordinal(fp.fine) : ordinal(coarse_of(fp.fine));
}

std::vector<int> task_classes(Task task) {
  std::vector<int> out;
  if (task == Task::Fine) {
    for (auto c : kFineClasses) out.push_back(ordinal(c));
  } else {
    for (auto c : kCoarseClasses) out.push_back(ordinal(c));
  }
  return out;
}

std::string class_name(Task task, int ord) {
  if (task == Task::Fine) return std::string(canonical_name(fine_from_ordinal(ord)));
  if (ord == ordinal(CoarseClass::CarLike)) return std::string(canonical_name(CoarseClass::CarLike));
  if (ord == ordinal(CoarseClass::TruckLike)) return std::string(canonical_name(CoarseClass::TruckLike));
  throw std::invalid_argument("coarse ordinal out of range: " + std::to_string(ord));
}

nlohmann::ordered_json ModelSize::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  if (kind == "l1l2_svm" || kind == "l2l2_svm") {
    j["nonzero_weights"] = nonzero_weights;
    j["nonzero_first_vector"] = nonzero_first_vector;
  }
  if (kind == "rbf_svm") j["support_vectors"] = support_vectors;
  if (kind == "forest") {
    j["trees"] = trees;
    j["tree_nodes"] = tree_nodes;
  }
  j["parameters"] = parameters;
  return j;
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::L1L2Svm: return "l1l2_svm";
    case ModelKind::L2L2Svm: return "l2l2_svm";
    case ModelKind::RbfSvm: return "rbf_svm";
    case ModelKind::Forest: return "forest";
    case ModelKind::ConvNet: return "convnet";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view text) {
  for (auto k : {ModelKind::L1L2Svm, ModelKind::L2L2Svm, ModelKind::RbfSvm, ModelKind::Forest,
                 ModelKind::ConvNet}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown model '" + std::string(text) +
                              "' (expected l1l2_svm, l2l2_svm, rbf_svm, forest or convnet)");
}

bool PipelineConfig::standardize() const {
  if (hp.standardize) return *hp.standardize;
  return model == ModelKind::L1L2Svm || model == ModelKind::L2L2Svm || model == ModelKind::RbfSvm;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = std::string(to_string(model));
  j["task"] = std::string(to_string(task));
  if (model != ModelKind::ConvNet) {
    j["features"] = radiofp::to_json(layout);
    j["standardize"] = standardize();
  }
  switch (model) {
    case ModelKind::L1L2Svm:
    case ModelKind::L2L2Svm:
      j["C"] = hp.linear_c;
      j["tol"] = hp.linear_tol;
      j["max_iter"] = hp.linear_max_iter;
      break;
    case ModelKind::RbfSvm:
      j["C"] = hp.rbf_c;
      j["gamma"] = hp.rbf_gamma;
      j["tol"] = hp.rbf_tol;
      break;
    case ModelKind::Forest:
      j["n_trees"] = hp.n_trees;
      j["max_depth"] = hp.max_depth;
      j["min_leaf"] = hp.min_leaf;
      j["feature_subset"] = hp.feature_subset;
      j["bootstrap"] = hp.bootstrap;
      j["per_node_sampling"] = hp.per_node_sampling;
      break;
    case ModelKind::ConvNet:
      j["filters"] = hp.filters;
      j["filter_width"] = hp.filter_width;
      j["conv_stride"] = hp.conv_stride;
      j["pool_window"] = hp.pool_window;
      j["pool_stride"] = hp.pool_stride;
      j["hidden"] = hp.hidden;
      j["epochs"] = hp.epochs;
      j["batch_size"] = hp.batch_size;
      j["learning_rate"] = hp.learning_rate;
      break;
  }
  return j;
}

namespace {

constexpr int kFormatVersion = 1;

std::vector<int> present_classes(std::span<const int> labels) {
  std::vector<int> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

nlohmann::ordered_json header(ModelKind kind, Task task) {
  nlohmann::ordered_json j;
  j["format"] = "radiofp-model";
  j["version"] = kFormatVersion;
  j["model"] = std::string(to_string(kind));
  j["task"] = std::string(to_string(task));
  return j;
}

// Feature extraction plus optional z-scoring shared by the vector models.
class VectorClassifier : public Classifier {
 public:
  VectorClassifier(ModelKind kind, Task task, FeatureLayout layout, std::optional<Scaler> scaler)
      : kind_(kind), task_(task), layout_(std::move(layout)), scaler_(std::move(scaler)) {}

  const Scaler* scaler() const override { return scaler_ ? &*scaler_ : nullptr; }

 protected:
  std::vector<double> featurize(const Fingerprint& fp) const {
    auto x = extract_features(fp, layout_);
    if (scaler_) standardize_apply_inplace(*scaler_, x);
    return x;
  }

  nlohmann::ordered_json base_json() const {
    auto j = header(kind_, task_);
    j["scaler"] = scaler_ ? radiofp::to_json(*scaler_) : nlohmann::ordered_json(nullptr);
    return j;
  }

  ModelKind kind_;
  Task task_;
  FeatureLayout layout_;
  std::optional<Scaler> scaler_;
};

class LinearClassifier final : public VectorClassifier {
 public:
  LinearClassifier(ModelKind kind, Task task, std::optional<Scaler> scaler, LinearModel m)
      : VectorClassifier(kind, task, m.layout, std::move(scaler)), model_(std::move(m)) {}

  int predict(const Fingerprint& fp) const override { return radiofp::predict(model_, featurize(fp)); }

  ModelSize size() const override {
    ModelSize s;
    s.kind = std::string(to_string(kind_));
    for (const auto& w : model_.weights) s.nonzero_weights += nonzero_weights(w);
    if (!model_.weights.empty()) s.nonzero_first_vector = nonzero_weights(model_.weights.front());
    s.parameters = s.nonzero_weights;
    return s;
  }

  nlohmann::ordered_json to_json() const override {
    auto j = base_json();
    j["linear"] = radiofp::to_json(model_);
    return j;
  }

  const LinearModel& model() const { return model_; }

 private:
  LinearModel model_;
};

class RbfClassifier final : public VectorClassifier {
 public:
  RbfClassifier(Task task, std::optional<Scaler> scaler, RbfModel m)
      : VectorClassifier(ModelKind::RbfSvm, task, m.layout, std::move(scaler)), model_(std::move(m)) {}

  int predict(const Fingerprint& fp) const override { return predict_rbf(model_, featurize(fp)); }

  ModelSize size() const override {
    ModelSize s;
    s.kind = "rbf_svm";
    s.support_vectors = support_vector_count(model_);
    s.parameters = model_.support_vectors.rows() * model_.support_vectors.cols();
    for (const auto& p : model_.parts) s.parameters += p.coef.size() + 1;
    return s;
  }

  nlohmann::ordered_json to_json() const override {
    auto j = base_json();
    j["rbf"] = radiofp::to_json(model_);
    return j;
  }

 private:
  RbfModel model_;
};

class ForestClassifier final : public VectorClassifier {
 public:
  ForestClassifier(Task task, std::optional<Scaler> scaler, Forest f)
      : VectorClassifier(ModelKind::Forest, task, f.layout, std::move(scaler)), forest_(std::move(f)) {}

  int predict(const Fingerprint& fp) const override { return predict_forest(forest_, featurize(fp)); }

  ModelSize size() const override {
    ModelSize s;
    s.kind = "forest";
    s.trees = forest_.trees.size();
    s.tree_nodes = forest_.node_count();
    // A split stores a feature index and a threshold, a leaf its label.
    for (const auto& t : forest_.trees) {
      for (const auto& n : t.nodes) s.parameters += n.is_leaf() ? 1 : 2;
    }
    return s;
  }

  nlohmann::ordered_json to_json() const override {
    auto j = base_json();
    j["forest"] = radiofp::to_json(forest_);
    return j;
  }

 private:
  Forest forest_;
};

class ConvNetClassifier final : public Classifier {
 public:
  ConvNetClassifier(Task task, NetworkSpec spec, NetworkParams params, LinkStandardizer standardizer,
                    std::vector<int> classes)
      : task_(task),
        spec_(spec),
        params_(std::move(params)),
        standardizer_(std::move(standardizer)),
        classes_(std::move(classes)) {}

  int predict(const Fingerprint& fp) const override {
    return classes_.at(static_cast<std::size_t>(predict_net(params_, spec_, standardizer_.apply(fp.series))));
  }

  ModelSize size() const override {
    ModelSize s;
    s.kind = "convnet";
    s.parameters = params_.parameter_count();
    return s;
  }

  nlohmann::ordered_json to_json() const override {
    auto j = header(ModelKind::ConvNet, task_);
    j["classes"] = classes_;
    j["standardizer"] = {{"mean", standardizer_.mean}, {"stddev", standardizer_.stddev}};
    j["spec"] = radiofp::to_json(spec_);
    j["params"] = radiofp::to_json(params_);
    return j;
  }

 private:
  Task task_;
  NetworkSpec spec_;
  NetworkParams params_;
  LinkStandardizer standardizer_;
  std::vector<int> classes_;
};

NetworkSpec network_spec(const Hyperparameters& hp, std::size_t n_classes) {
  NetworkSpec s;
  s.filters = hp.filters;
  s.filter_width = hp.filter_width;
  s.conv_stride = hp.conv_stride;
  s.pool_window = hp.pool_window;
  s.pool_stride = hp.pool_stride;
  s.hidden = hp.hidden;
  s.n_classes = n_classes;
  s.validate();
  return s;
}

std::unique_ptr<Classifier> train_vector(const PipelineConfig& cfg,
                                         std::span<const Fingerprint* const> records,
                                         std::span<const int> labels, std::uint64_t seed) {
  Matrix x = feature_matrix(records, cfg.layout);
  std::optional<Scaler> scaler;
  if (cfg.standardize()) {
    scaler = standardize_fit(x);
    x = standardize_apply(*scaler, x);
  }
  const auto classes = present_classes(labels);
  const auto& hp = cfg.hp;
  switch (cfg.model) {
    case ModelKind::L1L2Svm:
    case ModelKind::L2L2Svm: {
      const auto reg = cfg.model == ModelKind::L1L2Svm ? Regularizer::L1 : Regularizer::L2;
      LinearSolverOptions opts{hp.linear_tol, hp.linear_max_iter};
      auto m = train_multiclass(x, labels, classes, hp.linear_c, reg, opts);
      m.layout = cfg.layout;
      return std::make_unique<LinearClassifier>(cfg.model, cfg.task, std::move(scaler), std::move(m));
    }
    case ModelKind::RbfSvm: {
      RbfOptions opts;
      opts.c = hp.rbf_c;
      opts.gamma = hp.rbf_gamma;
      opts.tol = hp.rbf_tol;
      opts.cache_rows = hp.rbf_cache_rows;
      auto m = train_rbf_multiclass(x, labels, classes, opts);
      m.layout = cfg.layout;
      return std::make_unique<RbfClassifier>(cfg.task, std::move(scaler), std::move(m));
    }
    case ModelKind::Forest: {
      ForestOptions opts;
      opts.n_trees = hp.n_trees;
      opts.max_depth = hp.max_depth;
      opts.min_leaf = hp.min_leaf;
      opts.feature_subset = hp.feature_subset;
      opts.bootstrap = hp.bootstrap;
      opts.per_node_sampling = hp.per_node_sampling;
      opts.seed = seed;
      auto f = train_forest(x, labels, opts);
      f.layout = cfg.layout;
      return std::make_unique<ForestClassifier>(cfg.task, std::move(scaler), std::move(f));
    }
    case ModelKind::ConvNet:
      break;
  }
  throw std::logic_error("train_vector: not a vector model");
}

std::unique_ptr<Classifier> train_convnet(const PipelineConfig& cfg,
                                          std::span<const Fingerprint* const> records,
                                          std::span<const int> labels, std::uint64_t seed) {
  const auto classes = present_classes(labels);
  std::vector<Matrix> raw;
  raw.reserve(records.size());
  for (const auto* r : records) raw.push_back(r->series);
  auto standardizer = LinkStandardizer::fit(raw);
  std::vector<Matrix> inputs;
  inputs.reserve(raw.size());
  for (const auto& m : raw) inputs.push_back(standardizer.apply(m));
  std::vector<int> index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    index[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  }
  const auto spec = network_spec(cfg.hp, classes.size());
  NetTrainOptions opts;
  opts.epochs = cfg.hp.epochs;
  opts.batch_size = cfg.hp.batch_size;
  opts.lr = cfg.hp.learning_rate;
  opts.seed = seed;
  auto params = train_net(spec, inputs, index, opts);
  return std::make_unique<ConvNetClassifier>(cfg.task, spec, std::move(params), std::move(standardizer),
                                             classes);
}

}  // namespace

Trainer make_trainer(const PipelineConfig& config) {
  if (config.model != ModelKind::ConvNet && config.layout.links.empty()) {
    throw std::invalid_argument("pipeline: empty link set");
  }
  if (config.model == ModelKind::ConvNet) network_spec(config.hp, 2);
  return [config](std::span<const Fingerprint* const> records, std::span<const int> labels,
                  std::uint64_t seed) -> std::unique_ptr<Classifier> {
    if (records.size() != labels.size()) throw std::invalid_argument("trainer: records/labels size mismatch");
    if (records.empty()) throw std::invalid_argument("trainer: no training records");
    if (config.model == ModelKind::ConvNet) return train_convnet(config, records, labels, seed);
    return train_vector(config, records, labels, seed);
  };
}

std::unique_ptr<Classifier> train_classifier(const PipelineConfig& config, const Dataset& d,
                                             std::uint64_t seed) {
  std::vector<const Fingerprint*> records;
  std::vector<int> labels;
  for (const auto& fp : d) {
    records.push_back(&fp);
    labels.push_back(task_label(fp, config.task));
  }
  return make_trainer(config)(records, labels, seed);
}

const LinearModel* linear_model_of(const Classifier& c) {
  const auto* lc = dynamic_cast<const LinearClassifier*>(&c);
  return lc ? &lc->model() : nullptr;
}

namespace {

std::unique_ptr<Classifier> load_checked(const nlohmann::json& j) {
  if (j.value("format", "") != "radiofp-model") throw std::invalid_argument("not a radiofp model file");
  if (j.value("version", 0) != kFormatVersion) throw std::invalid_argument("unsupported model version");
  const auto kind = model_kind_from_string(j.at("model").get<std::string>());
  const auto task = task_from_string(j.at("task").get<std::string>());
  if (kind == ModelKind::ConvNet) {
    LinkStandardizer st{j.at("standardizer").at("mean").get<std::vector<double>>(),
                        j.at("standardizer").at("stddev").get<std::vector<double>>()};
    return std::make_unique<ConvNetClassifier>(task, network_spec_from_json(j.at("spec")),
                                               network_params_from_json(j.at("params")), std::move(st),
                                               j.at("classes").get<std::vector<int>>());
  }
  std::optional<Scaler> scaler;
  if (!j.at("scaler").is_null()) scaler = scaler_from_json(j.at("scaler"));
  switch (kind) {
    case ModelKind::L1L2Svm:
    case ModelKind::L2L2Svm:
      return std::make_unique<LinearClassifier>(kind, task, std::move(scaler),
                                                linear_model_from_json(j.at("linear")));
    case ModelKind::RbfSvm:
      return std::make_unique<RbfClassifier>(task, std::move(scaler), rbf_model_from_json(j.at("rbf")));
    case ModelKind::Forest:
      return std::make_unique<ForestClassifier>(task, std::move(scaler), forest_from_json(j.at("forest")));
    case ModelKind::ConvNet:
      break;
  }
  throw std::logic_error("load_classifier: unreachable");
}

}  // namespace

std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model json: expected an object");
  try {
    return load_checked(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model json: ") + e.what());
  }
}

}  // namespace radiofp
