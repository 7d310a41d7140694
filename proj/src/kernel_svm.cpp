#include "radiofp/kernel_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace radiofp {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
  if (!(gamma > 0)) throw std::invalid_argument("rbf_kernel: gamma must be > 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

Matrix gram_matrix_serial(const Matrix& x, double gamma) {
  const std::size_t n = x.rows();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
    }
  }
  return k;
}

Matrix gram_matrix(const Matrix& x, double gamma) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  Matrix k(x.rows(), x.rows());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    k(ui, ui) = 1.0;
    for (std::size_t j = ui + 1; j < x.rows(); ++j) {
      k(ui, j) = k(j, ui) = rbf_kernel(x.row(ui), x.row(j), gamma);
    }
  }
  return k;
}

KernelCache::KernelCache(const Matrix& x, double gamma, std::size_t cache_rows)
    : x_(&x), gamma_(gamma), capacity_(std::max<std::size_t>(cache_rows, 2)) {
  if (!(gamma > 0)) throw std::invalid_argument("KernelCache: gamma must be > 0");
  if (x.rows() <= capacity_) {
    gram_ = gram_matrix(x, gamma);
    computed_rows_ = x.rows();
  }
}

std::span<const double> KernelCache::row(std::size_t i) {
  if (full()) return gram_.row(i);
  if (auto it = index_.find(i); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }
  if (lru_.size() >= capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  std::vector<double> r(x_->rows());
  for (std::size_t j = 0; j < r.size(); ++j) {
    r[j] = j == i ? 1.0 : rbf_kernel(x_->row(i), x_->row(j), gamma_);
  }
  ++computed_rows_;
  lru_.emplace_front(i, std::move(r));
  index_[i] = lru_.begin();
  return lru_.front().second;
}

double rbf_dual_objective(const Matrix& gram, std::span<const int> y, std::span<const double> alpha) {
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    lin += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      quad += alpha[i] * alpha[j] * y[i] * y[j] * gram(i, j);
    }
  }
  return 0.5 * quad - lin;
}

RbfBinaryFit train_rbf(const Matrix& x, std::span<const int> y, const RbfOptions& opts) {
  KernelCache cache(x, opts.gamma, opts.cache_rows);
  return train_rbf(cache, y, opts);
}

RbfBinaryFit train_rbf(KernelCache& kernel, std::span<const int> y, const RbfOptions& opts) {
  const std::size_t n = kernel.size();
  if (y.size() != n) throw std::invalid_argument("train_rbf: label count mismatch");
  if (!(opts.c > 0) || !(opts.gamma > 0)) throw std::invalid_argument("train_rbf: C, gamma > 0");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw std::invalid_argument("train_rbf: labels must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("train_rbf: both classes must be present");

  constexpr double kTau = 1e-12;
  const double c = opts.c;
  const std::size_t max_iter =
      opts.max_iter > 0 ? opts.max_iter : std::max<std::size_t>(100000, 100 * n);

  RbfBinaryFit fit;
  auto& alpha = fit.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // G = Q alpha - e

  auto in_up = [&](std::size_t t) { return y[t] == 1 ? alpha[t] < c : alpha[t] > 0; };
  auto in_low = [&](std::size_t t) { return y[t] == 1 ? alpha[t] > 0 : alpha[t] < c; };

  double violation = 0.0;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    violation = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (violation <= opts.tol) {
      fit.converged = true;
      break;
    }

    const auto ki = kernel.row(i);
    const double kij = ki[j];
    const auto kj = kernel.row(j);
    const double qij = y[i] * y[j] * kij;
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = 1.0 + 1.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 1.0 + 1.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    // kernel.row(j) may have evicted row i in LRU mode; re-fetch.
    const auto ki2 = kernel.row(i);
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki2[t] * dai + y[j] * kj[t] * daj);
    }
  }
  fit.iterations = iter;
  fit.kkt_violation = violation;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  fit.bias = -rho;

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
  fit.dual_objective = 0.5 * obj;
  return fit;
}

RbfModel train_rbf_multiclass(const Matrix& x, std::span<const int> labels,
                              std::span<const int> classes, const RbfOptions& opts) {
  if (labels.size() != x.rows()) throw std::invalid_argument("train_rbf_multiclass: label mismatch");
  if (classes.size() < 2) throw std::invalid_argument("train_rbf_multiclass: need >= 2 classes");
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw std::invalid_argument("train_rbf_multiclass: classes must be ascending and unique");
  }
  for (int cls : classes) {
    if (std::find(labels.begin(), labels.end(), cls) == labels.end()) {
      throw std::invalid_argument("train_rbf_multiclass: class " + std::to_string(cls) +
                                  " absent from training data");
    }
  }

  KernelCache cache(x, opts.gamma, opts.cache_rows);
  std::vector<RbfBinaryFit> fits;
  for (int cls : classes) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == cls ? 1 : -1;
    fits.push_back(train_rbf(cache, y, opts));
  }

  RbfModel m;
  m.c = opts.c;
  m.gamma = opts.gamma;
  m.classes.assign(classes.begin(), classes.end());
  std::vector<std::int64_t> slot(x.rows(), -1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (const auto& f : fits) {
      if (f.alpha[i] > 0) {
        slot[i] = static_cast<std::int64_t>(m.support_index.size());
        m.support_index.push_back(i);
        break;
      }
    }
  }
  m.support_vectors = Matrix(m.support_index.size(), x.cols());
  for (std::size_t s = 0; s < m.support_index.size(); ++s) {
    const auto r = x.row(m.support_index[s]);
    std::copy(r.begin(), r.end(), m.support_vectors.row(s).begin());
  }
  for (std::size_t p = 0; p < fits.size(); ++p) {
    RbfPart part;
    part.bias = fits[p].bias;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (fits[p].alpha[i] > 0) {
        part.sv.push_back(static_cast<std::uint32_t>(slot[i]));
        part.coef.push_back(fits[p].alpha[i] * (labels[i] == classes[p] ? 1.0 : -1.0));
      }
    }
    m.parts.push_back(std::move(part));
    m.kkt_violation.push_back(fits[p].kkt_violation);
  }
  return m;
}

std::vector<double> decision_values(const RbfModel& m, std::span<const double> x) {
  if (m.support_vectors.rows() > 0 && x.size() != m.support_vectors.cols()) {
    throw std::invalid_argument("predict_rbf: dimension mismatch");
  }
  std::vector<double> k(m.support_vectors.rows());
  for (std::size_t s = 0; s < k.size(); ++s) k[s] = rbf_kernel(m.support_vectors.row(s), x, m.gamma);
  std::vector<double> out(m.parts.size());
  for (std::size_t p = 0; p < m.parts.size(); ++p) {
    double f = m.parts[p].bias;
    for (std::size_t s = 0; s < m.parts[p].sv.size(); ++s) f += m.parts[p].coef[s] * k[m.parts[p].sv[s]];
    out[p] = f;
  }
  return out;
}

int predict_rbf(const RbfModel& m, std::span<const double> x) {
  const auto f = decision_values(m, x);
  if (f.empty()) throw std::invalid_argument("predict_rbf: empty model");
  std::size_t best = 0;
  for (std::size_t p = 1; p < f.size(); ++p) {
    if (f[p] > f[best]) best = p;
  }
  return m.classes[best];
}

std::size_t support_vector_count(const RbfModel& m) noexcept { return m.support_vectors.rows(); }

}  // namespace radiofp
