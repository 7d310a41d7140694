#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "radiofp/domain.hpp"
#include "radiofp/features.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

enum class Regularizer { L1, L2 };

std::string_view to_string(Regularizer reg) noexcept;

// reg(beta) + C * sum_i max(0, 1 - y_i <beta, x_i>)^2, with reg = ||.||_1 or
// 0.5 ||.||_2^2. No bias term.
double objective(std::span<const double> beta, const Matrix& x, std::span<const int> y, double c,
                 Regularizer reg);

struct LinearSolverOptions {
  double tol = 1e-3;  // bound on the optimality residual
  int max_outer_iters = 1000;
};

struct BinaryFit {
  std::vector<double> beta;
  bool converged = false;
  double residual = 0.0;  // max projected-gradient (L2) or min-norm subgradient (L1)
  int iterations = 0;
};

// y holds +1 / -1 labels. L2 is solved by dual coordinate descent on the
// squared-hinge dual, L1 by primal coordinate descent with soft thresholding.
BinaryFit train_binary(const Matrix& x, std::span<const int> y, double c, Regularizer reg,
                       const LinearSolverOptions& opts = {});

struct LinearModel {
  Regularizer reg = Regularizer::L2;
  double c = 1.0;
  std::vector<int> classes;                // ascending ordinals
  std::vector<std::vector<double>> weights;  // one vector per class
  FeatureLayout layout;
  std::vector<BinaryFit> fits;  // solver reports, weights moved out

  std::size_t dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

// One-vs-all: one binary problem per entry of `classes` (ascending ordinals);
// every class must occur in `labels`.
LinearModel train_multiclass(const Matrix& x, std::span<const int> labels,
                             std::span<const int> classes, double c, Regularizer reg,
                             const LinearSolverOptions& opts = {});

std::vector<double> class_scores(const LinearModel& m, std::span<const double> x);
// argmax of <beta_y, x>; ties go to the lowest ordinal.
int predict(const LinearModel& m, std::span<const double> x);

struct NonzeroTable {
  std::vector<int> classes;
  Matrix counts;  // classes x kLinkCount; links outside the layout stay 0
};

// Counts |w| > epsilon per (class, link) cell of a raw-layout model.
NonzeroTable nonzero_counts(const LinearModel& m, double epsilon = 1e-9);
std::size_t nonzero_weights(std::span<const double> w, double epsilon = 1e-9);

}  // namespace radiofp
