// Serial reference vs OpenMP versions of the parallel kernels.
#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

#include "radiofp/convnet.hpp"
#include "radiofp/kernel_svm.hpp"
#include "radiofp/parallel.hpp"
#include "radiofp/random_forest.hpp"
#include "radiofp/synthgen.hpp"
#include "radiofp/timewarp.hpp"

using namespace radiofp;

namespace {

const Dataset& records() {
  static const Dataset d = [] {
    auto cfg = GeneratorConfig::defaults();
    cfg.seed = 7;
    return generate(cfg, uniform_counts(4)).dataset;
  }();
  return d;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

void BM_DtwSerial(benchmark::State& st) {
  const auto order = class_block_order(records());
  for (auto _ : st) benchmark::DoNotOptimize(pairwise_dtw_serial(records(), 1, order, 100));
}

void BM_DtwParallel(benchmark::State& st) {
  const auto order = class_block_order(records());
  for (auto _ : st) benchmark::DoNotOptimize(pairwise_dtw(records(), 1, order, 100));
}

void BM_GramSerial(benchmark::State& st) {
  const auto x = random_matrix(static_cast<std::size_t>(st.range(0)), 135, 1);
  for (auto _ : st) benchmark::DoNotOptimize(gram_matrix_serial(x, 1e-2));
}

void BM_GramParallel(benchmark::State& st) {
  const auto x = random_matrix(static_cast<std::size_t>(st.range(0)), 135, 1);
  for (auto _ : st) benchmark::DoNotOptimize(gram_matrix(x, 1e-2));
}

std::vector<Matrix> conv_batch() {
  std::vector<Matrix> b;
  for (std::uint64_t i = 0; i < 16; ++i) b.push_back(random_matrix(kLinkCount, kSamplesPerLink, i));
  return b;
}

void BM_ConvSerial(benchmark::State& st) {
  const NetworkSpec spec;
  const auto p = init_params(spec, 1);
  const auto batch = conv_batch();
  for (auto _ : st) benchmark::DoNotOptimize(conv_features_serial(p, spec, batch));
}

void BM_ConvParallel(benchmark::State& st) {
  const NetworkSpec spec;
  const auto p = init_params(spec, 1);
  const auto batch = conv_batch();
  for (auto _ : st) benchmark::DoNotOptimize(conv_features(p, spec, batch));
}

// The forest has no separate serial path; one thread stands in for it.
void BM_Forest(benchmark::State& st) {
  const auto x = random_matrix(300, 135, 2);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < 300; ++i) y[i] = x(i, 0) + x(i, 1) > 0 ? 1 : 2;
  ForestOptions o;
  o.n_trees = 32;
  const int before = omp_get_max_threads();
  set_jobs(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(train_forest(x, y, o));
  set_jobs(before);
}

}  // namespace

BENCHMARK(BM_DtwSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DtwParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
