#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "radiofp/domain.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

// Classic DTW with absolute-difference cost and symmetric match / insert /
// delete steps. `band` limits |i - j| when set.
double dtw(std::span<const double> a, std::span<const double> b,
           std::optional<std::size_t> band = std::nullopt);

// Record order with class blocks contiguous: by fine class, then id.
std::vector<std::size_t> class_block_order(const Dataset& d);

// Raw pairwise DTW of one link (1-based) over the given record order. The
// OpenMP version fills disjoint cells and matches the serial reference.
Matrix pairwise_dtw(const Dataset& d, std::size_t link, std::span<const std::size_t> order,
                    std::optional<std::size_t> band = std::nullopt);
Matrix pairwise_dtw_serial(const Dataset& d, std::size_t link, std::span<const std::size_t> order,
                           std::optional<std::size_t> band = std::nullopt);

// z-scores a distance matrix over its off-diagonal entries (population std).
// The diagonal receives the standardized value of a raw 0. A constant
// off-diagonal population maps every entry to 0.
Matrix standardize_off_diagonal(const Matrix& raw);

struct DtwMatrix {
  std::vector<std::size_t> order;  // dataset indices, class-blockwise
  Matrix values;
};

DtwMatrix standardized_dtw_matrix(const Dataset& d, std::size_t link,
                                  std::optional<std::size_t> band = std::nullopt);

// Element-wise exp(-x).
Matrix similarity(const Matrix& standardized);

}  // namespace radiofp
