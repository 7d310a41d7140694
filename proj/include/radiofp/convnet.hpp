#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "radiofp/domain.hpp"
#include "radiofp/matrix.hpp"

namespace radiofp {

// conv(filters x links x filter_width) -> ReLU -> average pool along time ->
// FC(hidden[0]) -> batch norm -> ReLU -> FC(hidden[1]) -> ReLU ->
// FC(hidden[2]) -> ReLU -> FC(n_classes) -> softmax.
// Each filter spans every link, so the convolution only slides along time.
struct NetworkSpec {
  std::size_t links = kLinkCount;
  std::size_t input_len = kSamplesPerLink;
  std::size_t filters = 16;
  std::size_t filter_width = 20;
  std::size_t conv_stride = 1;
  bool pooling = true;
  std::size_t pool_window = 10;
  std::size_t pool_stride = 10;
  std::array<std::size_t, 3> hidden = {128, 64, 32};
  std::size_t n_classes = 9;
  bool batch_norm = true;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

  std::size_t conv_out() const noexcept { return (input_len - filter_width) / conv_stride + 1; }
  std::size_t pool_out() const noexcept {
    return pooling ? (conv_out() - pool_window) / pool_stride + 1 : conv_out();
  }
  std::size_t flat_dim() const noexcept { return filters * pool_out(); }
  void validate() const;
};

struct NetworkParams {
  std::vector<double> conv_w;  // filters x links x filter_width
  std::vector<double> conv_b;  // filters
  // Three hidden layers then the output layer; fc_w[i] is out x in row-major.
  std::array<std::vector<double>, 4> fc_w;
  std::array<std::vector<double>, 4> fc_b;
  std::vector<double> bn_gamma;
  std::vector<double> bn_beta;
  std::vector<double> bn_running_mean;  // not trained by gradient
  std::vector<double> bn_running_var;

  // Trainable tensors in a fixed order.
  std::vector<std::vector<double>*> trainable();
  std::vector<const std::vector<double>*> trainable() const;
  std::size_t parameter_count() const;
  bool operator==(const NetworkParams&) const = default;
};

// Every weight 0, batch-norm scale 1 and shift 0, running variance 1.
NetworkParams zero_params(const NetworkSpec& spec);
// Uniform(-a, a) with a = sqrt(6 / fan_in), zero biases.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

enum class Mode { Train, Eval };

// Post-ReLU activation map (filters x conv_out) of one input.
Matrix conv_activations(const NetworkParams& p, const NetworkSpec& spec, const Matrix& input);

// Pooled conv features of a batch (batch x flat_dim). The OpenMP version
// processes samples concurrently and matches the serial reference exactly.
Matrix conv_features(const NetworkParams& p, const NetworkSpec& spec, std::span<const Matrix> batch);
Matrix conv_features_serial(const NetworkParams& p, const NetworkSpec& spec,
                            std::span<const Matrix> batch);

// Class probabilities (batch x n_classes). Train mode normalizes with batch
// statistics and needs at least two inputs; eval mode uses running statistics.
Matrix forward(const NetworkParams& p, const NetworkSpec& spec, std::span<const Matrix> batch,
               Mode mode);

// Mean of -log p[label], with p clamped at 1e-12.
double cross_entropy(const Matrix& probs, std::span<const int> labels);

struct BackwardResult {
  NetworkParams grads;  // running statistics left empty
  double loss = 0.0;
  Matrix probs;
  std::vector<double> batch_mean;  // first-layer batch statistics (train mode)
  std::vector<double> batch_var;
};

// Gradient of the mean cross-entropy in train mode.
BackwardResult backward(const NetworkParams& p, const NetworkSpec& spec,
                        std::span<const Matrix> batch, std::span<const int> labels);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  NetworkParams m;  // shaped like the trainable tensors
  NetworkParams v;

  static AdamState for_params(const NetworkParams& p, double lr = 1e-3);
};

void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads);

// Per-link z-scoring over all time steps of the training inputs.
struct LinkStandardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static LinkStandardizer fit(std::span<const Matrix> inputs);
  Matrix apply(const Matrix& input) const;
};

struct NetTrainOptions {
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch;
  double loss;
  double train_accuracy;
};

// Mini-batch ADAM on already standardized inputs; labels are 0..n_classes-1.
// A trailing batch of one is merged into the previous batch.
NetworkParams train_net(const NetworkSpec& spec, std::span<const Matrix> inputs,
                        std::span<const int> labels, const NetTrainOptions& opts,
                        std::vector<EpochStats>* log = nullptr);

// argmax of eval-mode probabilities; ties go to the lowest index.
int predict_net(const NetworkParams& p, const NetworkSpec& spec, const Matrix& input);

}  // namespace radiofp
