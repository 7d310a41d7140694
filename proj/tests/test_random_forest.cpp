#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "radiofp/random_forest.hpp"
#include "reference.hpp"

using namespace radiofp;

namespace {

// Separate recursive interpreter for flat trees.
int interpret(const Tree& t, std::int32_t node, std::span<const double> x) {
  const auto& v = t.nodes[static_cast<std::size_t>(node)];
  if (v.feature < 0) return v.label;
  return interpret(t, x[static_cast<std::size_t>(v.feature)] <= v.threshold ? v.left : v.right, x);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

struct Data {
  Matrix x;
  std::vector<int> y;
};

// Labels from a noisy nonlinear rule over the first two features.
Data labeled_points(std::size_t n, std::size_t d, std::uint64_t seed, double label_noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution flip(label_noise);
  Data out{Matrix(n, d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.x(i, j) = u(rng);
    int c = out.x(i, 0) * out.x(i, 1) > 0 ? 1 : 3;
    if (out.x(i, 0) > 0.6) c = 7;
    if (flip(rng)) c = c == 1 ? 3 : 1;
    out.y[i] = c;
  }
  return out;
}

}  // namespace

TEST_SUITE("random_forest") {
  TEST_CASE("mutual information examples") {
    CHECK(mutual_information(std::vector<int>{1, 1, 1, 1}, std::vector<int>{2, 2, 2, 2}) == doctest::Approx(1.0));
    CHECK(mutual_information(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 1, 2, 2}) ==
          doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mutual_information(std::vector<int>{1, 1, 1, 2}, std::vector<int>{2, 2, 2, 2}) ==
          doctest::Approx(0.548795).epsilon(1e-6));
    CHECK(mutual_information(std::vector<int>{}, std::vector<int>{3, 3}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(mutual_information(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  }

  TEST_CASE("mutual information against direct entropy arithmetic") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> cls(1, 4), len(0, 12);
    for (int t = 0; t < 200; ++t) {
      std::vector<int> l(static_cast<std::size_t>(len(rng))), r(static_cast<std::size_t>(len(rng) + 1));
      for (int& v : l) v = cls(rng);
      for (int& v : r) v = cls(rng);
      const double mi = mutual_information(l, r);
      CHECK(mi >= -1e-15);
      CHECK(std::abs(mi - testing::brute_mutual_information(l, r)) <= 1e-9 * std::max(1.0, std::abs(mi)));
      std::vector<double> cl(4, 0), cr(4, 0);
      for (int v : l) cl[static_cast<std::size_t>(v - 1)] += 1;
      for (int v : r) cr[static_cast<std::size_t>(v - 1)] += 1;
      CHECK(mutual_information_counts(cl, cr) == doctest::Approx(mi).epsilon(1e-12));
    }
  }

  TEST_CASE("pure data gives a single leaf") {
    const Matrix x(3, 2, std::vector<double>{0, 1, 2, 3, 4, 5});
    const std::vector<int> y{4, 4, 4};
    std::mt19937_64 rng(1);
    const auto rows = all_rows(3);
    const auto t = grow_tree(x, y, rows, TreeOptions{}, rng);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
    CHECK(predict_tree(t, std::vector<double>{100, -100}) == 4);
  }

  TEST_CASE("one-dimensional split at the midpoint, boundary goes left") {
    const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
    const std::vector<int> y{1, 2};
    std::mt19937_64 rng(1);
    const auto rows = all_rows(2);
    const auto t = grow_tree(x, y, rows, TreeOptions{}, rng);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 0.5);
    CHECK(predict_tree(t, std::vector<double>{0.5}) == 1);
    CHECK(predict_tree(t, std::vector<double>{0.5000001}) == 2);
    CHECK(t.depth() == 1);
    CHECK(t.leaf_count() == 2);
    CHECK_THROWS_AS(predict_tree(t, std::vector<double>{}), std::invalid_argument);
  }

  TEST_CASE("ties in gain go to the lowest feature") {
    // Both columns split the labels perfectly.
    const Matrix x(4, 2, std::vector<double>{0, 10, 0, 10, 1, 20, 1, 20});
    const std::vector<int> y{1, 1, 2, 2};
    std::mt19937_64 rng(1);
    const auto rows = all_rows(4);
    const auto t = grow_tree(x, y, rows, TreeOptions{}, rng);
    CHECK(t.nodes[0].feature == 0);
  }

  TEST_CASE("consistent data is fit exactly without depth limit") {
    const auto d = labeled_points(300, 4, 2);
    TreeOptions o;
    o.max_depth = kUnlimitedDepth;
    std::mt19937_64 rng(3);
    const auto rows = all_rows(300);
    const auto t = grow_tree(d.x, d.y, rows, o, rng);
    for (std::size_t i = 0; i < 300; ++i) CHECK(predict_tree(t, d.x.row(i)) == d.y[i]);
  }

  TEST_CASE("flat and recursive interpreters agree, depth bounded") {
    const auto d = labeled_points(400, 5, 6, 0.2);
    for (std::size_t depth : {1u, 3u, 6u}) {
      TreeOptions o;
      o.max_depth = depth;
      o.features_per_node = 2;
      std::mt19937_64 rng(depth);
      const auto rows = all_rows(400);
      const auto t = grow_tree(d.x, d.y, rows, o, rng);
      CHECK(t.depth() <= depth);
      std::mt19937_64 probe(9);
      std::uniform_real_distribution<double> u(-1.2, 1.2);
      for (int k = 0; k < 200; ++k) {
        std::vector<double> q(5);
        for (auto& v : q) v = u(probe);
        CHECK(predict_tree(t, q) == interpret(t, 0, q));
      }
    }
  }

  TEST_CASE("degenerate forest equals its tree") {
    const auto d = labeled_points(150, 3, 8, 0.1);
    ForestOptions fo;
    fo.n_trees = 1;
    fo.bootstrap = false;
    fo.feature_subset = 3;
    const auto f = train_forest(d.x, d.y, fo);
    TreeOptions to;
    to.max_depth = fo.max_depth;
    std::mt19937_64 rng(f.tree_seeds[0]);
    const auto rows = all_rows(150);
    const auto t = grow_tree(d.x, d.y, rows, to, rng);
    std::mt19937_64 probe(10);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> q{u(probe), u(probe), u(probe)};
      CHECK(predict_forest(f, q) == predict_tree(t, q));
      CHECK(predict_forest(f, q) == predict_tree(f.trees[0], q));
    }
  }

  TEST_CASE("fixed seed gives identical forests") {
    const auto d = labeled_points(200, 6, 12, 0.1);
    ForestOptions fo;
    fo.n_trees = 16;
    fo.seed = 77;
    const auto a = train_forest(d.x, d.y, fo);
    const auto b = train_forest(d.x, d.y, fo);
    REQUIRE(a.trees.size() == 16);
    CHECK(a.classes == std::vector<int>{1, 3, 7});
    CHECK(a.tree_seeds == b.tree_seeds);
    for (std::size_t t = 0; t < 16; ++t) {
      REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
      for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
        CHECK(a.trees[t].nodes[k].feature == b.trees[t].nodes[k].feature);
        CHECK(a.trees[t].nodes[k].threshold == b.trees[t].nodes[k].threshold);
        CHECK(a.trees[t].nodes[k].label == b.trees[t].nodes[k].label);
      }
    }
    for (std::size_t i = 0; i < 200; ++i) CHECK(predict_forest(a, d.x.row(i)) == predict_forest(b, d.x.row(i)));
    CHECK(derive_seed(77, 0) != derive_seed(77, 1));
  }

  TEST_CASE("vote tally, majority, and order invariance") {
    const auto d = labeled_points(200, 4, 13, 0.3);
    ForestOptions fo;
    fo.n_trees = 15;
    fo.max_depth = 4;
    const auto f = train_forest(d.x, d.y, fo);
    for (const auto& t : f.trees) CHECK(t.depth() <= 4);
    auto reversed = f;
    std::reverse(reversed.trees.begin(), reversed.trees.end());
    std::mt19937_64 probe(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> q{u(probe), u(probe), u(probe), u(probe)};
      std::map<int, std::size_t> brute;
      for (const auto& t : f.trees) ++brute[predict_tree(t, q)];
      const auto tally = vote_tally(f, q);
      REQUIRE(tally.size() == f.classes.size());
      std::size_t best = 0;
      for (std::size_t c = 0; c < f.classes.size(); ++c) {
        CHECK(tally[c] == brute[f.classes[c]]);
        if (tally[c] > tally[best]) best = c;
      }
      CHECK(predict_forest(f, q) == f.classes[best]);
      CHECK(predict_forest(reversed, q) == predict_forest(f, q));
    }
  }

  TEST_CASE("three votes A, A, B give A and ties go low") {
    Forest f;
    f.classes = {2, 5};
    f.dim = 1;
    auto leaf = [](int label) {
      Tree t;
      t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, label});
      return t;
    };
    f.trees = {leaf(5), leaf(5), leaf(2)};
    CHECK(predict_forest(f, std::vector<double>{0.0}) == 5);
    f.trees = {leaf(5), leaf(2)};
    CHECK(predict_forest(f, std::vector<double>{0.0}) == 2);
    CHECK_THROWS_AS(predict_forest(Forest{}, std::vector<double>{0.0}), std::invalid_argument);
  }

  TEST_CASE("training accuracy is at least test accuracy on average") {
    double train_acc = 0, test_acc = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto tr = labeled_points(200, 6, seed, 0.15);
      const auto te = labeled_points(200, 6, seed + 100, 0.15);
      ForestOptions fo;
      fo.n_trees = 32;
      fo.seed = seed;
      const auto f = train_forest(tr.x, tr.y, fo);
      for (std::size_t i = 0; i < 200; ++i) {
        train_acc += predict_forest(f, tr.x.row(i)) == tr.y[i];
        test_acc += predict_forest(f, te.x.row(i)) == te.y[i];
      }
    }
    CHECK(train_acc >= test_acc);
  }

  TEST_CASE("invalid input") {
    ForestOptions fo;
    CHECK_THROWS_AS(train_forest(Matrix(0, 3), std::vector<int>{}, fo), std::invalid_argument);
    fo.n_trees = 0;
    CHECK_THROWS_AS(train_forest(Matrix(2, 1, 0.0), std::vector<int>{1, 2}, fo), std::invalid_argument);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(grow_tree(Matrix(2, 1, 0.0), std::vector<int>{1, 2}, std::vector<std::size_t>{}, TreeOptions{}, rng),
                    std::invalid_argument);
  }
}
