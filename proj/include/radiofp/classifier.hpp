#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "radiofp/domain.hpp"
#include "radiofp/features.hpp"

namespace radiofp {

enum class Task { Fine, Coarse };

std::string_view to_string(Task task) noexcept;
Task task_from_string(std::string_view text);

// Class ordinal of a record under the task (fine 1..9, coarse 1..2).
int task_label(const Fingerprint& fp, Task task);
std::vector<int> task_classes(Task task);
std::string class_name(Task task, int ordinal);

struct ModelSize {
  std::string kind;
  std::size_t nonzero_weights = 0;       // linear: all one-vs-all vectors
  std::size_t nonzero_first_vector = 0;  // linear: first vector only
  std::size_t support_vectors = 0;
  std::size_t trees = 0;
  std::size_t tree_nodes = 0;
  std::size_t parameters = 0;  // stored real numbers

  nlohmann::ordered_json to_json() const;
};

// A trained model with its feature pipeline; predicts task ordinals.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int predict(const Fingerprint& fp) const = 0;
  virtual ModelSize size() const = 0;
  virtual nlohmann::ordered_json to_json() const = 0;
  // Feature scaler fitted on the training records, if the pipeline uses one.
  virtual const Scaler* scaler() const { return nullptr; }
};

// Fits a classifier on the given records and task labels.
using Trainer = std::function<std::unique_ptr<Classifier>(
    std::span<const Fingerprint* const> records, std::span<const int> labels, std::uint64_t seed)>;

}  // namespace radiofp
