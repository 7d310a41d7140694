#include "radiofp/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace radiofp {

double mutual_information_counts(std::span<const double> left, std::span<const double> right) {
  if (left.size() != right.size()) throw std::invalid_argument("mutual_information: size mismatch");
  double n_left = 0, n_right = 0;
  for (double c : left) n_left += c;
  for (double c : right) n_right += c;
  const double n = n_left + n_right;
  if (n <= 0) throw std::invalid_argument("mutual_information: both sides empty");

  // I(side; class) = sum p(s, c) log2(p(s, c) / (p(s) p(c))). The ratio is
  // formed from integer counts so identical distributions give exactly 0.
  double mi = 0.0;
  for (std::size_t k = 0; k < left.size(); ++k) {
    const double class_total = left[k] + right[k];
    if (left[k] > 0) mi += left[k] / n * std::log2(left[k] * n / (n_left * class_total));
    if (right[k] > 0) mi += right[k] / n * std::log2(right[k] * n / (n_right * class_total));
  }
  return std::max(mi, 0.0);
}

double mutual_information(std::span<const int> labels_left, std::span<const int> labels_right) {
  std::vector<int> classes(labels_left.begin(), labels_left.end());
  classes.insert(classes.end(), labels_right.begin(), labels_right.end());
  if (classes.empty()) throw std::invalid_argument("mutual_information: both sides empty");
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  auto index = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) -
                                    classes.begin());
  };
  std::vector<double> left(classes.size(), 0.0), right(classes.size(), 0.0);
  for (int l : labels_left) left[index(l)] += 1;
  for (int l : labels_right) right[index(l)] += 1;
  return mutual_information_counts(left, right);
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const int> labels, const TreeOptions& opts,
             std::mt19937_64& rng)
      : x_(x), labels_(labels), opts_(opts), rng_(rng) {
    classes_.assign(labels.begin(), labels.end());
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
    if (opts.feature_pool.empty()) {
      pool_.resize(x.cols());
      std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    } else {
      pool_ = opts.feature_pool;
    }
    dense_.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      dense_[i] = static_cast<std::size_t>(
          std::lower_bound(classes_.begin(), classes_.end(), labels[i]) - classes_.begin());
    }
  }

  Tree grow(std::vector<std::size_t> rows) {
    Tree t;
    build(t, std::move(rows), 0);
    return t;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
  };

  std::int32_t build(Tree& t, std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();

    std::vector<double> counts(classes_.size(), 0.0);
    for (auto r : rows) counts[dense_[r]] += 1;
    std::size_t majority = 0;
    std::size_t distinct = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] > 0) ++distinct;
      if (counts[k] > counts[majority]) majority = k;
    }
    t.nodes[static_cast<std::size_t>(id)].label = classes_[majority];

    if (distinct <= 1 || depth >= opts_.max_depth || rows.size() < 2 * opts_.min_leaf) return id;
    const Split best = find_split(rows, counts);
    if (best.gain < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto l = build(t, std::move(left), depth + 1);
    const auto r = build(t, std::move(right), depth + 1);
    auto& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<std::size_t> candidates() {
    const std::size_t k = opts_.features_per_node;
    if (k == 0 || k >= pool_.size()) {
      auto all = pool_;
      std::sort(all.begin(), all.end());
      return all;
    }
    // Partial Fisher-Yates over a scratch copy of the pool.
    scratch_ = pool_;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, scratch_.size() - 1);
      std::swap(scratch_[i], scratch_[pick(rng_)]);
    }
    std::vector<std::size_t> out(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
    return out;
  }

  Split find_split(const std::vector<std::size_t>& rows, const std::vector<double>& total) {
    Split best;
    std::vector<std::pair<double, std::size_t>> column(rows.size());
    std::vector<double> left(total.size()), right(total.size());
    for (auto f : candidates()) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), dense_[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;

      std::fill(left.begin(), left.end(), 0.0);
      right = total;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left[column[i].second] += 1;
        right[column[i].second] -= 1;
        const double a = column[i].first;
        const double b = column[i + 1].first;
        if (a == b) continue;
        const std::size_t n_left = i + 1;
        if (n_left < opts_.min_leaf || column.size() - n_left < opts_.min_leaf) continue;
        const double gain = mutual_information_counts(left, right);
        if (gain > best.gain) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;  // adjacent doubles
          best = {f, mid, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> labels_;
  const TreeOptions& opts_;
  std::mt19937_64& rng_;
  std::vector<int> classes_;
  std::vector<std::size_t> dense_;
  std::vector<std::size_t> pool_;
  std::vector<std::size_t> scratch_;
};

}  // namespace

Tree grow_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
               const TreeOptions& opts, std::mt19937_64& rng) {
  if (rows.empty()) throw std::invalid_argument("grow_tree: empty training set");
  if (labels.size() != x.rows()) throw std::invalid_argument("grow_tree: label count mismatch");
  TreeGrower grower(x, labels, opts, rng);
  return grower.grow(std::vector<std::size_t>(rows.begin(), rows.end()));
}

int predict_tree(const Tree& t, std::span<const double> x) {
  if (t.nodes.empty()) throw std::invalid_argument("predict_tree: empty tree");
  std::size_t id = 0;
  while (!t.nodes[id].is_leaf()) {
    const auto& node = t.nodes[id];
    const auto f = static_cast<std::size_t>(node.feature);
    if (f >= x.size()) throw std::invalid_argument("predict_tree: feature vector too short");
    id = static_cast<std::size_t>(x[f] <= node.threshold ? node.left : node.right);
  }
  return t.nodes[id].label;
}

std::size_t Forest::node_count() const {
  std::size_t n = 0;
  for (const auto& t : trees) n += t.nodes.size();
  return n;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) noexcept {
  // splitmix64 finalizer over (master, counter)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Forest train_forest(const Matrix& x, std::span<const int> labels, const ForestOptions& opts) {
  if (x.rows() == 0) throw std::invalid_argument("train_forest: empty training set");
  if (labels.size() != x.rows()) throw std::invalid_argument("train_forest: label count mismatch");
  if (opts.n_trees < 1) throw std::invalid_argument("train_forest: n_trees must be >= 1");

  Forest f;
  f.options = opts;
  f.dim = x.cols();
  f.classes.assign(labels.begin(), labels.end());
  std::sort(f.classes.begin(), f.classes.end());
  f.classes.erase(std::unique(f.classes.begin(), f.classes.end()), f.classes.end());

  const std::size_t d = x.cols();
  std::size_t k = opts.feature_subset == 0
                      ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))))
                      : opts.feature_subset;
  k = std::max<std::size_t>(k, 1);
  const bool sample = k < d;

  f.trees.resize(opts.n_trees);
  f.tree_seeds.resize(opts.n_trees);
  for (std::size_t t = 0; t < opts.n_trees; ++t) f.tree_seeds[t] = derive_seed(opts.seed, t);

  const auto n_trees = static_cast<std::ptrdiff_t>(opts.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    std::mt19937_64 rng(f.tree_seeds[static_cast<std::size_t>(t)]);
    std::vector<std::size_t> rows(x.rows());
    if (opts.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeOptions topts;
    topts.max_depth = opts.max_depth;
    topts.min_leaf = opts.min_leaf;
    if (sample && opts.per_node_sampling) {
      topts.features_per_node = k;
    } else if (sample) {
      std::vector<std::size_t> all(d);
      std::iota(all.begin(), all.end(), std::size_t{0});
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(all[i], all[pick(rng)]);
      }
      topts.feature_pool.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    }
    f.trees[static_cast<std::size_t>(t)] = grow_tree(x, labels, rows, topts, rng);
  }
  return f;
}

std::vector<std::size_t> vote_tally(const Forest& f, std::span<const double> x) {
  std::vector<std::size_t> votes(f.classes.size(), 0);
  for (const auto& t : f.trees) {
    const int label = predict_tree(t, x);
    const auto it = std::lower_bound(f.classes.begin(), f.classes.end(), label);
    ++votes[static_cast<std::size_t>(it - f.classes.begin())];
  }
  return votes;
}

int predict_forest(const Forest& f, std::span<const double> x) {
  if (f.trees.empty()) throw std::invalid_argument("predict_forest: empty forest");
  const auto votes = vote_tally(f, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return f.classes[best];
}

}  // namespace radiofp
