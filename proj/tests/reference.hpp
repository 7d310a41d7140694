#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "radiofp/linear_svm.hpp"
#include "radiofp/matrix.hpp"

namespace testing {

// Accelerated proximal gradient (FISTA with backtracking) on the squared-hinge
// objective: smooth part C * loss (+ 0.5 ||b||^2 for L2), prox of ||b||_1 for L1.
inline std::vector<double> reference_linear_svm(const radiofp::Matrix& x, std::span<const int> y, double c,
                                                radiofp::Regularizer reg, int iters = 200000,
                                                double step_tol = 1e-14) {
  const std::size_t n = x.rows(), d = x.cols();
  const bool l1 = reg == radiofp::Regularizer::L1;
  auto smooth = [&](const std::vector<double>& b, std::vector<double>* grad) {
    double f = 0.0;
    if (grad) grad->assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0;
      for (std::size_t j = 0; j < d; ++j) m += b[j] * x(i, j);
      const double slack = 1.0 - y[i] * m;
      if (slack > 0) {
        f += c * slack * slack;
        if (grad)
          for (std::size_t j = 0; j < d; ++j) (*grad)[j] += -2.0 * c * slack * y[i] * x(i, j);
      }
    }
    if (!l1) {
      for (std::size_t j = 0; j < d; ++j) {
        f += 0.5 * b[j] * b[j];
        if (grad) (*grad)[j] += b[j];
      }
    }
    return f;
  };
  auto prox = [&](std::vector<double> v, double t) {
    if (!l1) return v;
    for (auto& e : v) e = e > t ? e - t : (e < -t ? e + t : 0.0);
    return v;
  };
  std::vector<double> b(d, 0.0), z = b, g;
  double t = 1.0, lip = 1.0;
  for (int it = 0; it < iters; ++it) {
    const double fz = smooth(z, &g);
    std::vector<double> next;
    for (;;) {
      std::vector<double> step(d);
      for (std::size_t j = 0; j < d; ++j) step[j] = z[j] - g[j] / lip;
      next = prox(step, 1.0 / lip);
      double quad = fz;
      for (std::size_t j = 0; j < d; ++j) {
        const double dj = next[j] - z[j];
        quad += g[j] * dj + 0.5 * lip * dj * dj;
      }
      if (smooth(next, nullptr) <= quad + 1e-15 * std::abs(quad)) break;
      lip *= 2.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double moved = 0.0;
    std::vector<double> z_next(d);
    for (std::size_t j = 0; j < d; ++j) {
      z_next[j] = next[j] + (t - 1.0) / t_next * (next[j] - b[j]);
      moved = std::max(moved, std::abs(next[j] - b[j]));
    }
    // Monotone restart keeps the objective from oscillating.
    if (radiofp::objective(next, x, y, c, reg) > radiofp::objective(b, x, y, c, reg)) {
      z = b;
      t = 1.0;
      continue;
    }
    b = std::move(next);
    z = std::move(z_next);
    t = t_next;
    if (moved < step_tol && it > 100) break;
  }
  return b;
}

// Minimizes 0.5 a'Qa - e'a subject to 0 <= a <= C, y'a = 0 by sweeping every
// pair (i, j) with an exact line search along a_i += y_i t, a_j -= y_j t.
inline std::vector<double> reference_rbf_dual(const radiofp::Matrix& k, std::span<const int> y, double c,
                                              int max_sweeps = 20000, double tol = 1e-13) {
  const std::size_t n = y.size();
  std::vector<double> a(n, 0.0), g(n, -1.0);  // g = Qa - e
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double biggest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double slope = y[i] * g[i] - y[j] * g[j];
        const double curv = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if (curv <= 1e-15) continue;
        double t = -slope / curv;
        // a_i + y_i t and a_j - y_j t must stay inside [0, C].
        auto clip = [&](double value, int sign) {
          const double lo = sign > 0 ? -value : value - c;
          const double hi = sign > 0 ? c - value : value;
          t = std::min(std::max(t, lo), hi);
        };
        clip(a[i], y[i]);
        clip(a[j], -y[j]);
        if (t == 0.0) continue;
        const double di = y[i] * t, dj = -y[j] * t;
        a[i] += di;
        a[j] += dj;
        for (std::size_t r = 0; r < n; ++r) g[r] += y[r] * (y[i] * k(r, i) * di + y[j] * k(r, j) * dj);
        biggest = std::max(biggest, std::abs(t));
      }
    }
    if (biggest < tol) break;
  }
  return a;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(radiofp::Matrix a, int sweeps = 100) {
  const std::size_t n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = cs * arp - sn * arq;
          a(r, q) = sn * arp + cs * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = cs * apr - sn * aqr;
          a(q, r) = sn * apr + cs * aqr;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  return ev;
}

// Information gain from label counts, written out term by term.
inline double entropy_bits(const std::map<int, int>& counts) {
  int n = 0;
  for (auto [k, c] : counts) n += c;
  double h = 0;
  for (auto [k, c] : counts)
    if (c) h -= (double(c) / n) * std::log2(double(c) / n);
  return h;
}

inline double brute_mutual_information(const std::vector<int>& l, const std::vector<int>& r) {
  std::map<int, int> cl, cr, cp;
  for (int v : l) ++cl[v], ++cp[v];
  for (int v : r) ++cr[v], ++cp[v];
  const double n = double(l.size() + r.size());
  return entropy_bits(cp) - (l.size() / n) * entropy_bits(cl) - (r.size() / n) * entropy_bits(cr);
}

// Exponential recursion over the three predecessor cells.
inline double naive_dtw(const std::vector<double>& a, const std::vector<double>& b, std::size_t i, std::size_t j) {
  const double cost = std::abs(a[i] - b[j]);
  if (i == 0 && j == 0) return cost;
  double best = INFINITY;
  if (i > 0) best = std::min(best, naive_dtw(a, b, i - 1, j));
  if (j > 0) best = std::min(best, naive_dtw(a, b, i, j - 1));
  if (i > 0 && j > 0) best = std::min(best, naive_dtw(a, b, i - 1, j - 1));
  return cost + best;
}

}  // namespace testing
