#include "radiofp/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radiofp {

std::string_view to_string(Regularizer reg) noexcept { return reg == Regularizer::L1 ? "l1" : "l2"; }

double objective(std::span<const double> beta, const Matrix& x, std::span<const int> y, double c,
                 Regularizer reg) {
  if (beta.size() != x.cols() || y.size() != x.rows()) {
    throw std::invalid_argument("objective: dimension mismatch");
  }
  double r = 0.0;
  for (double b : beta) r += reg == Regularizer::L1 ? std::abs(b) : 0.5 * b * b;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double m = std::max(0.0, 1.0 - y[i] * dot(beta, x.row(i)));
    loss += m * m;
  }
  return r + c * loss;
}

namespace {

void check_binary_input(const Matrix& x, std::span<const int> y, double c) {
  if (y.size() != x.rows()) throw std::invalid_argument("train_binary: label count mismatch");
  if (!(c > 0)) throw std::invalid_argument("train_binary: C must be > 0");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw std::invalid_argument("train_binary: labels must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("train_binary: both classes must be present");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("train_binary: non-finite feature");
  }
}

// Dual coordinate descent for 0.5||w||^2 + C sum max(0, 1 - y w.x)^2.
// The dual is min 0.5 a'(Q + D)a - e'a, a >= 0, D_ii = 1/(2C).
BinaryFit solve_l2(const Matrix& x, std::span<const int> y, double c,
                   const LinearSolverOptions& opts) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double diag = 0.5 / c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qd(n);
  for (std::size_t i = 0; i < n; ++i) qd[i] = dot(x.row(i), x.row(i)) + diag;

  BinaryFit fit;
  fit.beta.assign(d, 0.0);
  auto& w = fit.beta;
  for (int iter = 0; iter < opts.max_outer_iters; ++iter) {
    double max_pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = x.row(i);
      const double g = y[i] * dot(w, xi) - 1.0 + diag * alpha[i];
      const double pg = alpha[i] == 0.0 ? std::min(g, 0.0) : g;
      max_pg = std::max(max_pg, std::abs(pg));
      if (std::abs(pg) > 1e-14) {
        const double old = alpha[i];
        alpha[i] = std::max(old - g / qd[i], 0.0);
        const double step = (alpha[i] - old) * y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += step * xi[j];
      }
    }
    fit.iterations = iter + 1;
    fit.residual = max_pg;
    if (max_pg <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

// Primal coordinate descent for ||w||_1 + C sum max(0, 1 - y w.x)^2 using a
// one-dimensional Newton step on the smooth part, soft thresholding for the
// l1 term, an Armijo line search, and shrinking of coordinates pinned at 0.
BinaryFit solve_l1(const Matrix& x, std::span<const int> y, double c,
                   const LinearSolverOptions& opts) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  constexpr double kSigma = 0.01;
  constexpr int kMaxLineSearch = 30;

  Matrix xt(d, n);  // column access
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xt(j, i) = x(i, j);

  std::vector<double> margin(n, 1.0);  // b_i = 1 - y_i w.x_i
  std::vector<double> trial(n);
  BinaryFit fit;
  fit.beta.assign(d, 0.0);
  auto& w = fit.beta;

  std::vector<std::size_t> active(d);
  std::iota(active.begin(), active.end(), std::size_t{0});
  double gmax_old = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_outer_iters; ++iter) {
    double gmax_new = 0.0;
    std::size_t keep = 0;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const std::size_t j = active[s];
      const auto col = xt.row(j);
      double g = 0.0, h = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (margin[i] > 0) {
          g -= y[i] * col[i] * margin[i];
          h += col[i] * col[i];
        }
      }
      g *= 2.0 * c;
      h = 2.0 * c * h + 1e-12;

      const double gp = g + 1.0;
      const double gn = g - 1.0;
      double violation = 0.0;
      if (w[j] == 0.0) {
        if (gp < 0) violation = -gp;
        else if (gn > 0) violation = gn;
        else if (gp > gmax_old / static_cast<double>(n) && gn < -gmax_old / static_cast<double>(n)) {
          continue;  // shrink: stays at zero with a comfortable margin
        }
      } else {
        violation = w[j] > 0 ? std::abs(gp) : std::abs(gn);
      }
      active[keep++] = j;
      gmax_new = std::max(gmax_new, violation);

      double dir;
      if (gp < h * w[j]) dir = -gp / h;
      else if (gn > h * w[j]) dir = -gn / h;
      else dir = -w[j];
      if (std::abs(dir) < 1e-14) continue;

      double old_loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (margin[i] > 0) old_loss += margin[i] * margin[i];
      }
      old_loss *= c;
      const double delta = g * dir + std::abs(w[j] + dir) - std::abs(w[j]);
      double lambda = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < kMaxLineSearch; ++ls) {
        const double step = lambda * dir;
        double new_loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = margin[i] - step * y[i] * col[i];
          if (trial[i] > 0) new_loss += trial[i] * trial[i];
        }
        new_loss *= c;
        const double change =
            new_loss - old_loss + std::abs(w[j] + step) - std::abs(w[j]);
        if (change <= kSigma * lambda * delta) {
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) continue;
      w[j] += lambda * dir;
      margin.swap(trial);
    }
    active.resize(keep);
    fit.iterations = iter + 1;
    fit.residual = gmax_new;

    if (gmax_new <= opts.tol) {
      if (active.size() == d) {
        fit.converged = true;
        break;
      }
      // Re-check every coordinate before declaring convergence.
      active.resize(d);
      std::iota(active.begin(), active.end(), std::size_t{0});
      gmax_old = std::numeric_limits<double>::infinity();
      continue;
    }
    gmax_old = gmax_new;
  }
  return fit;
}

}  // namespace

BinaryFit train_binary(const Matrix& x, std::span<const int> y, double c, Regularizer reg,
                       const LinearSolverOptions& opts) {
  check_binary_input(x, y, c);
  return reg == Regularizer::L2 ? solve_l2(x, y, c, opts) : solve_l1(x, y, c, opts);
}

LinearModel train_multiclass(const Matrix& x, std::span<const int> labels,
                             std::span<const int> classes, double c, Regularizer reg,
                             const LinearSolverOptions& opts) {
  if (labels.size() != x.rows()) throw std::invalid_argument("train_multiclass: label mismatch");
  if (classes.size() < 2) throw std::invalid_argument("train_multiclass: need >= 2 classes");
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw std::invalid_argument("train_multiclass: classes must be ascending and unique");
  }
  for (int cls : classes) {
    if (std::find(labels.begin(), labels.end(), cls) == labels.end()) {
      throw std::invalid_argument("train_multiclass: class " + std::to_string(cls) +
                                  " absent from training data");
    }
  }

  LinearModel m;
  m.reg = reg;
  m.c = c;
  m.classes.assign(classes.begin(), classes.end());
  m.weights.resize(classes.size());
  m.fits.resize(classes.size());

  const auto k = static_cast<std::ptrdiff_t>(classes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < k; ++ci) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == classes[ci] ? 1 : -1;
    auto fit = train_binary(x, y, c, reg, opts);
    m.weights[ci] = std::move(fit.beta);
    fit.beta.clear();
    m.fits[ci] = std::move(fit);
  }
  return m;
}

std::vector<double> class_scores(const LinearModel& m, std::span<const double> x) {
  if (x.size() != m.dim()) throw std::invalid_argument("predict: dimension mismatch");
  std::vector<double> scores(m.weights.size());
  for (std::size_t c = 0; c < m.weights.size(); ++c) scores[c] = dot(m.weights[c], x);
  return scores;
}

int predict(const LinearModel& m, std::span<const double> x) {
  const auto scores = class_scores(m, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return m.classes[best];
}

std::size_t nonzero_weights(std::span<const double> w, double epsilon) {
  return static_cast<std::size_t>(
      std::count_if(w.begin(), w.end(), [epsilon](double v) { return std::abs(v) > epsilon; }));
}

NonzeroTable nonzero_counts(const LinearModel& m, double epsilon) {
  if (m.layout.kind != FeatureKind::Raw || m.dim() != m.layout.dim()) {
    throw std::invalid_argument("nonzero_counts: model must use the raw feature layout");
  }
  NonzeroTable t{m.classes, Matrix(m.classes.size(), kLinkCount)};
  for (std::size_t c = 0; c < m.weights.size(); ++c) {
    std::size_t offset = 0;
    for (auto link : m.layout.links) {
      const std::span<const double> block(m.weights[c].data() + offset, kSamplesPerLink);
      t.counts(c, link - 1) = static_cast<double>(nonzero_weights(block, epsilon));
      offset += kSamplesPerLink;
    }
  }
  return t;
}

}  // namespace radiofp
