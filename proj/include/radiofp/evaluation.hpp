#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiofp/classifier.hpp"
#include "radiofp/domain.hpp"
#include "radiofp/features.hpp"
#include "radiofp/linear_svm.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct CvStatistics {
  double acc_k = 0.0;
  double sigma = 0.0;  // sqrt(mean(ACC_i^2) - ACC_k^2)
};

CvStatistics cv_statistics(std::span<const double> fold_accuracies);

struct FoldSplit {
  std::vector<std::vector<std::size_t>> folds;  // each sorted ascending
};

// Stratified mode shuffles each class with the seed and deals its members
// round-robin over the folds; the dealing position carries over from one class
// to the next so fold sizes stay within one of each other. Classes with fewer
// than k members land in as many folds as they have members.
FoldSplit kfold_split(std::size_t n, std::span<const int> labels, std::size_t k, std::uint64_t seed,
                      bool stratified);

struct ConfusionMatrix {
  std::vector<int> classes;  // row / column order
  Matrix counts;             // rows = true class, columns = predicted

  std::size_t total() const;
  std::size_t row_total(std::size_t r) const;
  double trace_accuracy() const;
  // Row-normalized; empty rows stay 0.
  Matrix normalized() const;
  nlohmann::ordered_json to_json() const;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const int> class_order);

// Per fine class (ordinals 1..9): share of its samples whose predicted fine
// class has the correct coarse class. Empty rows are absent.
std::vector<std::optional<double>> accuracy_quotient(const ConfusionMatrix& fine);

// Fine-ordinal predictions mapped to coarse ordinals.
std::vector<int> map_to_coarse(std::span<const int> fine_ordinals);

enum class RareClassPolicy { Keep, Skip };

struct CvOptions {
  Task task = Task::Fine;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  bool stratified = true;  // by fine class
  // Keep: train on the classes each fold has, count unseen test classes as
  // errors. Skip: drop classes that would not reach two folds.
  RareClassPolicy rare_classes = RareClassPolicy::Keep;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double accuracy = 0.0;
  ModelSize size;
  std::optional<Scaler> scaler;  // the statistics fitted on this fold's training part
};

struct PredictionRecord {
  std::string id;
  int truth = 0;
  int predicted = 0;
  std::size_t fold = 0;
};

struct EvaluationReport {
  CvOptions options;
  double acc_k = 0.0;
  double sigma = 0.0;
  std::vector<FoldResult> folds;
  ConfusionMatrix confusion;  // task classes
  // Fine task only: coarse results derived by mapping the fine predictions.
  std::optional<ConfusionMatrix> coarse_mapped;
  std::optional<double> coarse_mapped_accuracy;
  std::vector<std::optional<double>> quotients;
  std::vector<PredictionRecord> predictions;  // fold order, then index order
  std::vector<std::string> warnings;
  nlohmann::ordered_json config;  // echo of the pipeline configuration

  nlohmann::ordered_json to_json() const;
};

// Per fold: fit on the remaining folds, predict the held-out one. Folds run
// concurrently; fold i trains with derive_seed(seed, i).
EvaluationReport cross_validate(const Trainer& trainer, const Dataset& d, const CvOptions& options);

struct AblationRow {
  LinkSet links;
  std::size_t dim = 0;
  double acc_k = 0.0;
  double sigma = 0.0;
};

std::vector<LinkSet> default_ablation_subsets();

// One cross-validation per subset; `make` builds the trainer for a layout.
std::vector<AblationRow> link_ablation(
    const std::function<Trainer(const FeatureLayout&)>& make, FeatureKind kind, const Dataset& d,
    std::span<const LinkSet> subsets, const CvOptions& options);

struct ImportanceTable {
  std::vector<int> classes;
  Matrix counts;      // classes x links, nonzero weights
  Matrix normalized;  // each nonzero link column sums to 1
  bool all_zero = false;
};

// Requires an L1 model on the raw layout.
ImportanceTable importance_report(const LinearModel& m, double epsilon = 1e-9);

void write_confusion_csv(const ConfusionMatrix& cm, Task task, bool normalized, std::ostream& out);
void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
void write_importance_csv(const ImportanceTable& t, bool normalized, std::ostream& out);
void write_quotient_csv(std::span<const std::optional<double>> quotients, std::ostream& out);
void write_matrix_csv(const Matrix& m, std::span<const std::string> labels, std::ostream& out);

}  // namespace radiofp
