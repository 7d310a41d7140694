#include "radiofp/timewarp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace radiofp {

double dtw(std::span<const double> a, std::span<const double> b, std::optional<std::size_t> band) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw: empty series");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> prev(m, kInf), cur(m, kInf);

  auto in_band = [&](std::size_t i, std::size_t j) {
    if (!band) return true;
    return (i > j ? i - j : j - i) <= *band;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j)) {
        cur[j] = kInf;
        continue;
      }
      const double cost = std::abs(a[i] - b[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

std::vector<std::size_t> class_block_order(const Dataset& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (d[x].fine != d[y].fine) return ordinal(d[x].fine) < ordinal(d[y].fine);
    return d[x].id < d[y].id;
  });
  return order;
}

namespace {

void check_link(std::size_t link) {
  if (link < 1 || link > kLinkCount) throw std::invalid_argument("link must lie in 1..9");
}

}  // namespace

Matrix pairwise_dtw_serial(const Dataset& d, std::size_t link, std::span<const std::size_t> order,
                           std::optional<std::size_t> band) {
  check_link(link);
  const std::size_t n = order.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out(i, j) = out(j, i) =
          dtw(d[order[i]].series.row(link - 1), d[order[j]].series.row(link - 1), band);
    }
  }
  return out;
}

Matrix pairwise_dtw(const Dataset& d, std::size_t link, std::span<const std::size_t> order,
                    std::optional<std::size_t> band) {
  check_link(link);
  const std::size_t n = order.size();
  Matrix out(n, n);
  // Enumerate the upper triangle as a flat index so the work is balanced.
  const auto pairs = static_cast<std::ptrdiff_t>(n * (n - (n > 0 ? 1 : 0)) / 2);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t p = 0; p < pairs; ++p) {
    std::size_t k = static_cast<std::size_t>(p);
    std::size_t i = 0;
    while (k >= n - 1 - i) {
      k -= n - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + k;
    out(i, j) = out(j, i) =
        dtw(d[order[i]].series.row(link - 1), d[order[j]].series.row(link - 1), band);
  }
  return out;
}

Matrix standardize_off_diagonal(const Matrix& raw) {
  const std::size_t n = raw.rows();
  if (n < 2 || raw.cols() != n) throw std::invalid_argument("standardize: need a square matrix, n >= 2");
  double sum = 0.0;
  const double count = static_cast<double>(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sum += raw(i, j);
  const double mean = sum / count;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) ss += (raw(i, j) - mean) * (raw(i, j) - mean);
  const double sd = std::sqrt(ss / count);

  Matrix out(n, n);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = ((i == j ? 0.0 : raw(i, j)) - mean) / sd;
    }
  }
  return out;
}

DtwMatrix standardized_dtw_matrix(const Dataset& d, std::size_t link,
                                  std::optional<std::size_t> band) {
  if (d.size() < 2) throw std::invalid_argument("standardized_dtw_matrix: need >= 2 records");
  DtwMatrix m;
  m.order = class_block_order(d);
  m.values = standardize_off_diagonal(pairwise_dtw(d, link, m.order, band));
  return m;
}

Matrix similarity(const Matrix& standardized) {
  Matrix out = standardized;
  for (auto& v : out.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("similarity: non-finite entry");
    v = std::exp(-v);
  }
  return out;
}

}  // namespace radiofp
