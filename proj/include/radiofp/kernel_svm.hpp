#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include "radiofp/features.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

// exp(-gamma * ||a - b||^2)
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Full kernel matrix. The OpenMP version fills disjoint cells and matches the
// serial reference bit for bit.
Matrix gram_matrix(const Matrix& x, double gamma);
Matrix gram_matrix_serial(const Matrix& x, double gamma);

// Row access to the kernel matrix of a training set. Holds the full matrix
// when it fits in `cache_rows`, otherwise an LRU set of rows. Not thread-safe.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t cache_rows);

  std::span<const double> row(std::size_t i);
  std::size_t size() const noexcept { return x_->rows(); }
  double gamma() const noexcept { return gamma_; }
  bool full() const noexcept { return !gram_.empty(); }
  std::size_t computed_rows() const noexcept { return computed_rows_; }

 private:
  const Matrix* x_;
  double gamma_;
  std::size_t capacity_;
  Matrix gram_;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
  std::size_t computed_rows_ = 0;
};

struct RbfOptions {
  double c = 10.0;
  double gamma = 1e-2;
  double tol = 1e-3;  // bound on the maximal KKT violation
  std::size_t cache_rows = 4096;
  std::size_t max_iter = 0;  // 0: max(100000, 100 n)
};

struct RbfBinaryFit {
  std::vector<double> alpha;  // one per training point, 0 <= alpha <= C
  double bias = 0.0;          // f(x) = sum alpha_i y_i K(x_i, x) + bias
  double kkt_violation = 0.0;
  double dual_objective = 0.0;  // 0.5 a'Qa - e'a
  std::size_t iterations = 0;
  bool converged = false;
};

// SMO on the dual with maximal-violating-pair working sets. y holds +1/-1.
RbfBinaryFit train_rbf(const Matrix& x, std::span<const int> y, const RbfOptions& opts);
RbfBinaryFit train_rbf(KernelCache& kernel, std::span<const int> y, const RbfOptions& opts);

// 0.5 a'Qa - e'a with Q_ij = y_i y_j K_ij, evaluated from scratch.
double rbf_dual_objective(const Matrix& gram, std::span<const int> y, std::span<const double> alpha);

struct RbfPart {
  std::vector<std::uint32_t> sv;  // rows of RbfModel::support_vectors
  std::vector<double> coef;       // alpha_i * y_i
  double bias = 0.0;
};

struct RbfModel {
  double c = 10.0;
  double gamma = 1e-2;
  std::vector<int> classes;  // ascending ordinals, one part per class
  std::vector<RbfPart> parts;
  Matrix support_vectors;                 // distinct support vectors
  std::vector<std::size_t> support_index;  // their training-set rows
  FeatureLayout layout;
  std::vector<double> kkt_violation;  // per part
};

// One-vs-all over `classes` (ascending, each present in labels); the parts
// share one kernel cache.
RbfModel train_rbf_multiclass(const Matrix& x, std::span<const int> labels,
                              std::span<const int> classes, const RbfOptions& opts);

std::vector<double> decision_values(const RbfModel& m, std::span<const double> x);
// argmax of the per-class decision values; ties go to the lowest ordinal.
int predict_rbf(const RbfModel& m, std::span<const double> x);
std::size_t support_vector_count(const RbfModel& m) noexcept;

}  // namespace radiofp
