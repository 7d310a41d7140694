#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "radiofp/classifier.hpp"
#include "radiofp/features.hpp"

namespace radiofp {

enum class ModelKind { L1L2Svm, L2L2Svm, RbfSvm, Forest, ConvNet };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view text);

struct Hyperparameters {
  double linear_c = 1.0;
  double linear_tol = 1e-3;
  int linear_max_iter = 1000;

  double rbf_c = 10.0;
  double rbf_gamma = 1e-2;
  double rbf_tol = 1e-3;
  std::size_t rbf_cache_rows = 4096;

  std::size_t n_trees = 128;
  std::size_t max_depth = 32;
  std::size_t min_leaf = 1;
  std::size_t feature_subset = 0;  // 0: floor(sqrt(d))
  bool bootstrap = true;
  bool per_node_sampling = true;

  std::size_t filters = 16;
  std::size_t filter_width = 20;
  std::size_t conv_stride = 1;
  std::size_t pool_window = 10;
  std::size_t pool_stride = 10;
  std::array<std::size_t, 3> hidden = {128, 64, 32};
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;

  // Feature z-scoring; unset means on for the SVMs and off for the forest.
  std::optional<bool> standardize;
};

struct PipelineConfig {
  ModelKind model = ModelKind::RbfSvm;
  FeatureLayout layout;  // ignored by the conv net, which reads 9x800 tensors
  Task task = Task::Fine;
  Hyperparameters hp;

  bool standardize() const;
  nlohmann::ordered_json to_json() const;
};

Trainer make_trainer(const PipelineConfig& config);

// Trains on every record of the dataset.
std::unique_ptr<Classifier> train_classifier(const PipelineConfig& config, const Dataset& d,
                                             std::uint64_t seed);

struct LinearModel;
// The linear model inside a linear-SVM classifier, otherwise nullptr.
const LinearModel* linear_model_of(const Classifier& c);

// Restores a classifier written by Classifier::to_json.
std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j);

}  // namespace radiofp
