#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "radiofp/features.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

// Information gain in bits of splitting the union of two label multisets.
double mutual_information(std::span<const int> labels_left, std::span<const int> labels_right);
// Same quantity from per-class counts (equal length vectors).
double mutual_information_counts(std::span<const double> left, std::span<const double> right);

// Flat binary tree. Internal nodes route x[feature] <= threshold left, else
// right; leaves carry the predicted class ordinal.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  int label = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
  std::size_t leaf_count() const;
};

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

struct TreeOptions {
  std::size_t max_depth = 32;
  std::size_t min_leaf = 1;
  std::size_t features_per_node = 0;  // 0: all features
  // Non-empty: draw per-node candidates from this pool only (per-tree sampling).
  std::vector<std::size_t> feature_pool;
};

// Grows a tree on the given rows of x (rows may repeat, as in a bootstrap
// sample). Candidate thresholds are midpoints of consecutive distinct values;
// the best split maximizes information gain with ties to the lowest feature
// index, then the lowest threshold.
Tree grow_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
               const TreeOptions& opts, std::mt19937_64& rng);

int predict_tree(const Tree& t, std::span<const double> x);

struct ForestOptions {
  std::size_t n_trees = 128;
  std::size_t max_depth = 32;
  std::size_t min_leaf = 1;
  std::size_t feature_subset = 0;  // 0: floor(sqrt(d)); >= d disables sampling
  bool bootstrap = true;
  bool per_node_sampling = true;  // false: one feature subset per tree
  std::uint64_t seed = 1;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> tree_seeds;
  std::vector<int> classes;  // ascending ordinals seen in training
  ForestOptions options;
  FeatureLayout layout;
  std::size_t dim = 0;

  std::size_t node_count() const;
};

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept;

// Trees grow concurrently from per-tree seeds; the result does not depend on
// the thread count.
Forest train_forest(const Matrix& x, std::span<const int> labels, const ForestOptions& opts);

// Per-class vote counts aligned with f.classes.
std::vector<std::size_t> vote_tally(const Forest& f, std::span<const double> x);
// Majority vote; ties go to the lowest ordinal.
int predict_forest(const Forest& f, std::span<const double> x);

}  // namespace radiofp
