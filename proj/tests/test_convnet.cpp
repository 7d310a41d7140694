#include <doctest.h>

#include <cmath>
#include <random>

#include "radiofp/convnet.hpp"

using namespace radiofp;

namespace {

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.links = 2;
  s.input_len = 12;
  s.filters = 2;
  s.filter_width = 3;
  s.pool_window = 2;
  s.pool_stride = 2;
  s.hidden = {5, 4, 3};
  s.n_classes = 3;
  return s;
}

std::vector<Matrix> random_inputs(const NetworkSpec& s, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix m(s.links, s.input_len);
    for (auto& v : m.data()) v = g(rng);
    out.push_back(std::move(m));
  }
  return out;
}

double loss_of(const NetworkParams& p, const NetworkSpec& s, const std::vector<Matrix>& batch,
               const std::vector<int>& labels) {
  return cross_entropy(forward(p, s, batch, Mode::Train), labels);
}

}  // namespace

TEST_SUITE("convnet") {
  TEST_CASE("default shapes") {
    NetworkSpec s;
    CHECK(s.conv_out() == 781);
    CHECK(s.pool_out() == 78);
    CHECK(s.flat_dim() == 16 * 78);
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    bad.filter_width = 801;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.n_classes = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    const auto p = init_params(s, 1);
    const Matrix x(9, 800, 0.5);
    const auto a = conv_activations(p, s, x);
    CHECK(a.rows() == 16);
    CHECK(a.cols() == 781);
  }

  TEST_CASE("zero parameters give uniform probabilities") {
    const auto s = tiny_spec();
    const auto p = zero_params(s);
    const auto in = random_inputs(s, 4, 1);
    const auto probs = forward(p, s, in, Mode::Eval);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 3; ++c) CHECK(probs(r, c) == doctest::Approx(1.0 / 3.0));
    CHECK(cross_entropy(probs, std::vector<int>{0, 1, 2, 0}) == doctest::Approx(std::log(3.0)));
  }

  TEST_CASE("softmax rows sum to one") {
    const auto s = tiny_spec();
    const auto p = init_params(s, 3);
    const auto in = random_inputs(s, 6, 2);
    for (auto mode : {Mode::Train, Mode::Eval}) {
      const auto probs = forward(p, s, in, mode);
      for (std::size_t r = 0; r < 6; ++r) {
        double sum = 0;
        for (std::size_t c = 0; c < 3; ++c) {
          CHECK(probs(r, c) >= 0.0);
          sum += probs(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    CHECK_THROWS_AS(forward(p, s, std::span<const Matrix>(in.data(), 1), Mode::Train), std::invalid_argument);
  }

  TEST_CASE("cross-entropy against direct evaluation") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int t = 0; t < 100; ++t) {
      Matrix probs(5, 4);
      std::vector<int> labels(5);
      long double want = 0;
      for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0;
        for (std::size_t c = 0; c < 4; ++c) sum += probs(r, c) = u(rng);
        for (std::size_t c = 0; c < 4; ++c) probs(r, c) /= sum;
        labels[r] = static_cast<int>(rng() % 4);
        want -= std::log(static_cast<long double>(probs(r, static_cast<std::size_t>(labels[r]))));
      }
      const double got = cross_entropy(probs, labels);
      CHECK(std::abs(got - static_cast<double>(want / 5)) <= 1e-9 * std::abs(got));
    }
    Matrix zero(1, 2, std::vector<double>{0.0, 1.0});
    CHECK(cross_entropy(zero, std::vector<int>{0}) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy(zero, std::vector<int>{2}), std::invalid_argument);
  }

  TEST_CASE("analytic gradients match central differences") {
    const auto s = tiny_spec();
    auto p = init_params(s, 5);
    // Nonzero biases so that no ReLU sits exactly at its kink.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto* t : p.trainable())
      for (auto& v : *t) v += u(rng);
    const auto batch = random_inputs(s, 5, 8);
    const std::vector<int> labels{0, 1, 2, 1, 0};
    const auto res = backward(p, s, batch, labels);
    CHECK(res.loss == doctest::Approx(loss_of(p, s, batch, labels)).epsilon(1e-12));
    const auto grads = res.grads.trainable();
    auto params = p.trainable();
    REQUIRE(grads.size() == params.size());
    const double h = 1e-6;
    std::size_t checked = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
      REQUIRE(grads[t]->size() == params[t]->size());
      for (std::size_t i = 0; i < params[t]->size(); i += 1 + params[t]->size() / 7) {
        const double keep = (*params[t])[i];
        (*params[t])[i] = keep + h;
        const double up = loss_of(p, s, batch, labels);
        (*params[t])[i] = keep - h;
        const double down = loss_of(p, s, batch, labels);
        (*params[t])[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double analytic = (*grads[t])[i];
        CHECK(std::abs(numeric - analytic) <= 1e-4 * std::max(std::abs(numeric), std::abs(analytic)) + 1e-8);
        ++checked;
      }
    }
    CHECK(checked > 20);
  }

  TEST_CASE("first ADAM step moves by the learning rate against the gradient") {
    const auto s = tiny_spec();
    auto p = init_params(s, 9);
    const auto before = p;
    auto g = zero_params(s);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto* t : g.trainable())
      for (auto& v : *t) v = u(rng);
    auto state = AdamState::for_params(p, 0.01);
    adam_step(state, p, g);
    CHECK(state.step == 1);
    const auto pa = p.trainable();
    const auto pb = before.trainable();
    const auto gg = g.trainable();
    for (std::size_t t = 0; t < pa.size(); ++t)
      for (std::size_t i = 0; i < pa[t]->size(); ++i) {
        const double want = (*gg[t])[i] > 0 ? -0.01 : 0.01;
        CHECK(((*pa[t])[i] - (*pb[t])[i]) == doctest::Approx(want).epsilon(1e-6));
      }
  }

  TEST_CASE("conv features: parallel equals serial") {
    NetworkSpec s;
    const auto p = init_params(s, 2);
    std::vector<Matrix> batch;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
      Matrix m(9, 800);
      for (auto& v : m.data()) v = g(rng);
      batch.push_back(std::move(m));
    }
    const auto a = conv_features(p, s, batch);
    CHECK(a.rows() == 6);
    CHECK(a.cols() == s.flat_dim());
    CHECK(a == conv_features_serial(p, s, batch));
  }

  TEST_CASE("link standardizer") {
    std::vector<Matrix> in{Matrix(2, 3, std::vector<double>{0, 0, 0, 1, 2, 3}),
                           Matrix(2, 3, std::vector<double>{2, 2, 2, 1, 2, 3})};
    const auto z = LinkStandardizer::fit(in);
    CHECK(z.mean[0] == 1.0);
    CHECK(z.stddev[0] == 1.0);
    CHECK(z.mean[1] == 2.0);
    const auto out = z.apply(in[0]);
    CHECK(out(0, 0) == -1.0);
    CHECK(out(1, 1) == 0.0);
    CHECK_THROWS_AS(z.apply(Matrix(3, 3)), std::invalid_argument);
  }

  TEST_CASE("training reduces the loss on a separable toy problem") {
    const auto s = tiny_spec();
    std::vector<Matrix> in;
    std::vector<int> labels;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int i = 0; i < 60; ++i) {
      const int c = i % 3;
      Matrix m(2, 12);
      for (std::size_t t = 0; t < 12; ++t) {
        m(0, t) = g(rng) + (t / 4 == static_cast<std::size_t>(c) ? -2.0 : 0.0);
        m(1, t) = g(rng);
      }
      in.push_back(std::move(m));
      labels.push_back(c);
    }
    NetTrainOptions o;
    o.epochs = 40;
    o.batch_size = 10;
    o.lr = 0.01;
    std::vector<EpochStats> log;
    const auto p = train_net(s, in, labels, o, &log);
    REQUIRE(log.size() == 40);
    CHECK(log.back().loss < log.front().loss);
    int correct = 0;
    for (std::size_t i = 0; i < in.size(); ++i) correct += predict_net(p, s, in[i]) == labels[i];
    CHECK(correct >= 54);
    CHECK(train_net(s, in, labels, o) == p);
  }
}
