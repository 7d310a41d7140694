#include "radiofp/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace radiofp {

void NetworkSpec::validate() const {
  if (links == 0 || input_len == 0) throw std::invalid_argument("NetworkSpec: empty input");
  if (filters == 0 || filter_width == 0 || filter_width > input_len) {
    throw std::invalid_argument("NetworkSpec: filter width must lie in 1..input_len");
  }
  if (conv_stride == 0) throw std::invalid_argument("NetworkSpec: conv stride must be >= 1");
  if (pooling && (pool_window == 0 || pool_stride == 0 || pool_window > conv_out())) {
    throw std::invalid_argument("NetworkSpec: pooling window must lie in 1..conv_out");
  }
  for (auto h : hidden) {
    if (h == 0) throw std::invalid_argument("NetworkSpec: hidden widths must be positive");
  }
  if (n_classes < 2) throw std::invalid_argument("NetworkSpec: need >= 2 classes");
}

std::vector<std::vector<double>*> NetworkParams::trainable() {
  return {&conv_w,   &conv_b,   &fc_w[0], &fc_b[0], &bn_gamma, &bn_beta, &fc_w[1],
          &fc_b[1],  &fc_w[2],  &fc_b[2], &fc_w[3], &fc_b[3]};
}

std::vector<const std::vector<double>*> NetworkParams::trainable() const {
  return {&conv_w,   &conv_b,   &fc_w[0], &fc_b[0], &bn_gamma, &bn_beta, &fc_w[1],
          &fc_b[1],  &fc_w[2],  &fc_b[2], &fc_w[3], &fc_b[3]};
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : trainable()) n += t->size();
  return n;
}

namespace {

std::array<std::size_t, 5> layer_widths(const NetworkSpec& s) {
  return {s.flat_dim(), s.hidden[0], s.hidden[1], s.hidden[2], s.n_classes};
}

void check_batch(const NetworkSpec& spec, std::span<const Matrix> batch) {
  if (batch.empty()) throw std::invalid_argument("convnet: empty batch");
  for (const auto& x : batch) {
    if (x.rows() != spec.links || x.cols() != spec.input_len) {
      throw std::invalid_argument("convnet: input must be " + std::to_string(spec.links) + "x" +
                                  std::to_string(spec.input_len));
    }
  }
}

void check_params(const NetworkParams& p, const NetworkSpec& spec) {
  const auto w = layer_widths(spec);
  bool ok = p.conv_w.size() == spec.filters * spec.links * spec.filter_width &&
            p.conv_b.size() == spec.filters && p.bn_gamma.size() == spec.hidden[0] &&
            p.bn_beta.size() == spec.hidden[0];
  for (std::size_t i = 0; i < 4; ++i) {
    ok = ok && p.fc_w[i].size() == w[i + 1] * w[i] && p.fc_b[i].size() == w[i + 1];
  }
  if (!ok) throw std::invalid_argument("convnet: parameter shapes do not match the spec");
}

// ReLU activations (filters x conv_out) and pooled features of one input.
void conv_sample(const NetworkParams& p, const NetworkSpec& s, const Matrix& x,
                 std::span<double> act, std::span<double> pooled) {
  const std::size_t w_out = s.conv_out();
  for (std::size_t f = 0; f < s.filters; ++f) {
    double* a = act.data() + f * w_out;
    std::fill(a, a + w_out, p.conv_b[f]);
    for (std::size_t l = 0; l < s.links; ++l) {
      const double* xl = x.row(l).data();
      const double* wk = p.conv_w.data() + (f * s.links + l) * s.filter_width;
      for (std::size_t k = 0; k < s.filter_width; ++k) {
        const double wv = wk[k];
        const double* src = xl + k;
        if (s.conv_stride == 1) {
          for (std::size_t t = 0; t < w_out; ++t) a[t] += wv * src[t];
        } else {
          for (std::size_t t = 0; t < w_out; ++t) a[t] += wv * src[t * s.conv_stride];
        }
      }
    }
    for (std::size_t t = 0; t < w_out; ++t) a[t] = std::max(a[t], 0.0);
  }
  const std::size_t p_out = s.pool_out();
  for (std::size_t f = 0; f < s.filters; ++f) {
    const double* a = act.data() + f * w_out;
    double* out = pooled.data() + f * p_out;
    if (!s.pooling) {
      std::copy(a, a + w_out, out);
      continue;
    }
    for (std::size_t q = 0; q < p_out; ++q) {
      double sum = 0.0;
      for (std::size_t k = 0; k < s.pool_window; ++k) sum += a[q * s.pool_stride + k];
      out[q] = sum / static_cast<double>(s.pool_window);
    }
  }
}

// Accumulates conv weight/bias gradients of one input given d(pooled).
void conv_sample_backward(const NetworkParams& p, const NetworkSpec& s, const Matrix& x,
                          std::span<const double> act, std::span<const double> dpooled,
                          std::span<double> dw, std::span<double> db) {
  (void)p;
  const std::size_t w_out = s.conv_out();
  const std::size_t p_out = s.pool_out();
  std::vector<double> dz(w_out);
  for (std::size_t f = 0; f < s.filters; ++f) {
    std::fill(dz.begin(), dz.end(), 0.0);
    const double* dp = dpooled.data() + f * p_out;
    if (s.pooling) {
      const double inv = 1.0 / static_cast<double>(s.pool_window);
      for (std::size_t q = 0; q < p_out; ++q) {
        for (std::size_t k = 0; k < s.pool_window; ++k) dz[q * s.pool_stride + k] += dp[q] * inv;
      }
    } else {
      std::copy(dp, dp + w_out, dz.begin());
    }
    const double* a = act.data() + f * w_out;
    double bias_grad = 0.0;
    for (std::size_t t = 0; t < w_out; ++t) {
      if (!(a[t] > 0)) dz[t] = 0.0;
      bias_grad += dz[t];
    }
    db[f] += bias_grad;
    for (std::size_t l = 0; l < s.links; ++l) {
      const double* xl = x.row(l).data();
      double* gk = dw.data() + (f * s.links + l) * s.filter_width;
      for (std::size_t k = 0; k < s.filter_width; ++k) {
        double g = 0.0;
        const double* src = xl + k;
        for (std::size_t t = 0; t < w_out; ++t) g += dz[t] * src[t * s.conv_stride];
        gk[k] += g;
      }
    }
  }
}

// out = in * W' + b, W is out_dim x in_dim.
Matrix affine(const Matrix& in, const std::vector<double>& w, const std::vector<double>& b) {
  const std::size_t out_dim = b.size();
  const std::size_t in_dim = in.cols();
  Matrix out(in.rows(), out_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) {
      out(r, o) = b[o] + dot(std::span<const double>(w.data() + o * in_dim, in_dim), x);
    }
  }
  return out;
}

// Gradients of an affine layer; returns d(in).
Matrix affine_backward(const Matrix& in, const Matrix& dout, const std::vector<double>& w,
                       std::vector<double>& dw, std::vector<double>& db) {
  const std::size_t out_dim = dout.cols();
  const std::size_t in_dim = in.cols();
  dw.assign(out_dim * in_dim, 0.0);
  db.assign(out_dim, 0.0);
  Matrix din(in.rows(), in_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    auto dx = din.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double g = dout(r, o);
      if (g == 0.0) continue;
      db[o] += g;
      double* dwo = dw.data() + o * in_dim;
      const double* wo = w.data() + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) {
        dwo[i] += g * x[i];
        dx[i] += g * wo[i];
      }
    }
  }
  return din;
}

void relu_inplace(Matrix& m) {
  for (auto& v : m.data()) v = std::max(v, 0.0);
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
}

struct ForwardCache {
  std::vector<double> act;  // batch x filters x conv_out
  Matrix flat;
  Matrix h1;    // first affine output
  Matrix xhat;  // normalized h1 (equals h1 when batch norm is off)
  Matrix r1, r2, r3;
  Matrix probs;
  std::vector<double> mean, var, inv_std;
};

ForwardCache run_forward(const NetworkParams& p, const NetworkSpec& s, std::span<const Matrix> batch,
                         Mode mode) {
  s.validate();
  check_batch(s, batch);
  check_params(p, s);
  if (mode == Mode::Train && s.batch_norm && batch.size() < 2) {
    throw std::invalid_argument("convnet: train-mode batch norm needs a batch of >= 2");
  }
  ForwardCache c;
  const std::size_t b = batch.size();
  const std::size_t act_size = s.filters * s.conv_out();
  c.act.assign(b * act_size, 0.0);
  c.flat = Matrix(b, s.flat_dim());
  const auto nb = static_cast<std::ptrdiff_t>(b);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    conv_sample(p, s, batch[ui], std::span<double>(c.act.data() + ui * act_size, act_size),
                c.flat.row(ui));
  }

  c.h1 = affine(c.flat, p.fc_w[0], p.fc_b[0]);
  const std::size_t h = s.hidden[0];
  c.xhat = c.h1;
  c.r1 = Matrix(b, h);
  if (s.batch_norm) {
    c.mean.assign(h, 0.0);
    c.var.assign(h, 0.0);
    c.inv_std.assign(h, 0.0);
    if (mode == Mode::Train) {
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < h; ++j) c.mean[j] += c.h1(r, j);
      for (auto& m : c.mean) m /= static_cast<double>(b);
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < h; ++j) {
          const double d = c.h1(r, j) - c.mean[j];
          c.var[j] += d * d;
        }
      for (auto& v : c.var) v /= static_cast<double>(b);
    } else {
      c.mean = p.bn_running_mean;
      c.var = p.bn_running_var;
    }
    for (std::size_t j = 0; j < h; ++j) c.inv_std[j] = 1.0 / std::sqrt(c.var[j] + s.bn_eps);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t j = 0; j < h; ++j) {
        c.xhat(r, j) = (c.h1(r, j) - c.mean[j]) * c.inv_std[j];
        c.r1(r, j) = p.bn_gamma[j] * c.xhat(r, j) + p.bn_beta[j];
      }
  } else {
    c.r1 = c.h1;
  }
  relu_inplace(c.r1);
  c.r2 = affine(c.r1, p.fc_w[1], p.fc_b[1]);
  relu_inplace(c.r2);
  c.r3 = affine(c.r2, p.fc_w[2], p.fc_b[2]);
  relu_inplace(c.r3);
  c.probs = affine(c.r3, p.fc_w[3], p.fc_b[3]);
  softmax_rows(c.probs);
  return c;
}

void mask_relu(Matrix& grad, const Matrix& activated) {
  for (std::size_t i = 0; i < grad.data().size(); ++i) {
    if (!(activated.data()[i] > 0)) grad.data()[i] = 0.0;
  }
}

}  // namespace

NetworkParams zero_params(const NetworkSpec& spec) {
  spec.validate();
  const auto w = layer_widths(spec);
  NetworkParams p;
  p.conv_w.assign(spec.filters * spec.links * spec.filter_width, 0.0);
  p.conv_b.assign(spec.filters, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    p.fc_w[i].assign(w[i + 1] * w[i], 0.0);
    p.fc_b[i].assign(w[i + 1], 0.0);
  }
  p.bn_gamma.assign(spec.hidden[0], 1.0);
  p.bn_beta.assign(spec.hidden[0], 0.0);
  p.bn_running_mean.assign(spec.hidden[0], 0.0);
  p.bn_running_var.assign(spec.hidden[0], 1.0);
  return p;
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkParams p = zero_params(spec);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t fan_in) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& x : v) x = u(rng);
  };
  fill(p.conv_w, spec.links * spec.filter_width);
  const auto w = layer_widths(spec);
  for (std::size_t i = 0; i < 4; ++i) fill(p.fc_w[i], w[i]);
  return p;
}

Matrix conv_activations(const NetworkParams& p, const NetworkSpec& spec, const Matrix& input) {
  spec.validate();
  check_params(p, spec);
  check_batch(spec, std::span<const Matrix>(&input, 1));
  Matrix act(spec.filters, spec.conv_out());
  std::vector<double> pooled(spec.flat_dim());
  conv_sample(p, spec, input, act.data(), pooled);
  return act;
}

Matrix conv_features_serial(const NetworkParams& p, const NetworkSpec& spec,
                            std::span<const Matrix> batch) {
  spec.validate();
  check_params(p, spec);
  check_batch(spec, batch);
  Matrix out(batch.size(), spec.flat_dim());
  std::vector<double> act(spec.filters * spec.conv_out());
  for (std::size_t i = 0; i < batch.size(); ++i) conv_sample(p, spec, batch[i], act, out.row(i));
  return out;
}

Matrix conv_features(const NetworkParams& p, const NetworkSpec& spec, std::span<const Matrix> batch) {
  spec.validate();
  check_params(p, spec);
  check_batch(spec, batch);
  Matrix out(batch.size(), spec.flat_dim());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel
  {
    std::vector<double> act(spec.filters * spec.conv_out());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      conv_sample(p, spec, batch[ui], act, out.row(ui));
    }
  }
  return out;
}

Matrix forward(const NetworkParams& p, const NetworkSpec& spec, std::span<const Matrix> batch,
               Mode mode) {
  return run_forward(p, spec, batch, mode).probs;
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() != labels.size() || probs.rows() == 0) {
    throw std::invalid_argument("cross_entropy: shape mismatch");
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
      throw std::invalid_argument("cross_entropy: label out of range");
    }
    sum -= std::log(std::max(probs(r, static_cast<std::size_t>(y)), 1e-12));
  }
  return sum / static_cast<double>(probs.rows());
}

BackwardResult backward(const NetworkParams& p, const NetworkSpec& s, std::span<const Matrix> batch,
                        std::span<const int> labels) {
  if (labels.size() != batch.size()) throw std::invalid_argument("backward: label count mismatch");
  auto c = run_forward(p, s, batch, Mode::Train);
  BackwardResult res;
  res.loss = cross_entropy(c.probs, labels);
  const std::size_t b = batch.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  Matrix dlogits = c.probs;
  for (std::size_t r = 0; r < b; ++r) {
    dlogits(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (auto& v : dlogits.row(r)) v *= inv_b;
  }
  // Gradients through the clamp are ignored; the clamp only binds for
  // probabilities below 1e-12.
  auto& g = res.grads;
  Matrix d3 = affine_backward(c.r3, dlogits, p.fc_w[3], g.fc_w[3], g.fc_b[3]);
  mask_relu(d3, c.r3);
  Matrix d2 = affine_backward(c.r2, d3, p.fc_w[2], g.fc_w[2], g.fc_b[2]);
  mask_relu(d2, c.r2);
  Matrix d1 = affine_backward(c.r1, d2, p.fc_w[1], g.fc_w[1], g.fc_b[1]);
  mask_relu(d1, c.r1);

  const std::size_t h = s.hidden[0];
  Matrix dh1(b, h);
  g.bn_gamma.assign(h, 0.0);
  g.bn_beta.assign(h, 0.0);
  if (s.batch_norm) {
    for (std::size_t j = 0; j < h; ++j) {
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (std::size_t r = 0; r < b; ++r) {
        g.bn_gamma[j] += d1(r, j) * c.xhat(r, j);
        g.bn_beta[j] += d1(r, j);
        const double dxhat = d1(r, j) * p.bn_gamma[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * c.xhat(r, j);
      }
      for (std::size_t r = 0; r < b; ++r) {
        const double dxhat = d1(r, j) * p.bn_gamma[j];
        dh1(r, j) = inv_b * c.inv_std[j] *
                    (static_cast<double>(b) * dxhat - sum_dxhat - c.xhat(r, j) * sum_dxhat_xhat);
      }
    }
    res.batch_mean = c.mean;
    res.batch_var = c.var;
  } else {
    dh1 = d1;
  }
  Matrix dflat = affine_backward(c.flat, dh1, p.fc_w[0], g.fc_w[0], g.fc_b[0]);

  const std::size_t act_size = s.filters * s.conv_out();
  const std::size_t wsize = p.conv_w.size();
  std::vector<double> per_sample(b * (wsize + s.filters), 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(b);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double* slot = per_sample.data() + ui * (wsize + s.filters);
    conv_sample_backward(p, s, batch[ui],
                         std::span<const double>(c.act.data() + ui * act_size, act_size),
                         dflat.row(ui), std::span<double>(slot, wsize),
                         std::span<double>(slot + wsize, s.filters));
  }
  // Fixed summation order keeps the result independent of the thread count.
  g.conv_w.assign(wsize, 0.0);
  g.conv_b.assign(s.filters, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const double* slot = per_sample.data() + i * (wsize + s.filters);
    for (std::size_t k = 0; k < wsize; ++k) g.conv_w[k] += slot[k];
    for (std::size_t f = 0; f < s.filters; ++f) g.conv_b[f] += slot[wsize + f];
  }
  res.probs = std::move(c.probs);
  return res;
}

AdamState AdamState::for_params(const NetworkParams& p, double lr) {
  AdamState s;
  s.lr = lr;
  auto src = p.trainable();
  auto m = s.m.trainable();
  auto v = s.v.trainable();
  for (std::size_t i = 0; i < src.size(); ++i) {
    m[i]->assign(src[i]->size(), 0.0);
    v[i]->assign(src[i]->size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads) {
  auto p = params.trainable();
  auto g = grads.trainable();
  auto m = state.m.trainable();
  auto v = state.v.trainable();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]->size() != p[i]->size() || m[i]->size() != p[i]->size() ||
        v[i]->size() != p[i]->size()) {
      throw std::invalid_argument("adam_step: shape mismatch");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& pv = *p[i];
    const auto& gv = *g[i];
    auto& mv = *m[i];
    auto& vv = *v[i];
    for (std::size_t k = 0; k < pv.size(); ++k) {
      mv[k] = state.beta1 * mv[k] + (1.0 - state.beta1) * gv[k];
      vv[k] = state.beta2 * vv[k] + (1.0 - state.beta2) * gv[k] * gv[k];
      pv[k] -= state.lr * (mv[k] / c1) / (std::sqrt(vv[k] / c2) + state.eps);
    }
  }
}

LinkStandardizer LinkStandardizer::fit(std::span<const Matrix> inputs) {
  if (inputs.empty()) throw std::invalid_argument("LinkStandardizer: no inputs");
  const std::size_t links = inputs.front().rows();
  LinkStandardizer s{std::vector<double>(links, 0.0), std::vector<double>(links, 0.0)};
  double count = 0.0;
  for (const auto& x : inputs) {
    for (std::size_t l = 0; l < links; ++l)
      for (double v : x.row(l)) s.mean[l] += v;
    count += static_cast<double>(x.cols());
  }
  for (auto& m : s.mean) m /= count;
  for (const auto& x : inputs) {
    for (std::size_t l = 0; l < links; ++l)
      for (double v : x.row(l)) s.stddev[l] += (v - s.mean[l]) * (v - s.mean[l]);
  }
  for (auto& sd : s.stddev) sd = std::sqrt(sd / count);
  return s;
}

Matrix LinkStandardizer::apply(const Matrix& input) const {
  if (input.rows() != mean.size()) throw std::invalid_argument("LinkStandardizer: link mismatch");
  Matrix out = input;
  for (std::size_t l = 0; l < out.rows(); ++l) {
    for (auto& v : out.row(l)) v = stddev[l] > 0 ? (v - mean[l]) / stddev[l] : 0.0;
  }
  return out;
}

NetworkParams train_net(const NetworkSpec& spec, std::span<const Matrix> inputs,
                        std::span<const int> labels, const NetTrainOptions& opts,
                        std::vector<EpochStats>* log) {
  spec.validate();
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw std::invalid_argument("train_net: empty dataset or label mismatch");
  }
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw std::invalid_argument("train_net: need >= 2 classes");
  if (distinct.front() < 0 || static_cast<std::size_t>(distinct.back()) >= spec.n_classes) {
    throw std::invalid_argument("train_net: label out of range");
  }
  if (spec.batch_norm && inputs.size() < 2) throw std::invalid_argument("train_net: need >= 2 inputs");
  if (opts.batch_size < 2 && spec.batch_norm) {
    throw std::invalid_argument("train_net: batch size must be >= 2 with batch norm");
  }

  NetworkParams params = init_params(spec, opts.seed);
  AdamState adam = AdamState::for_params(params, opts.lr);
  std::mt19937_64 rng(opts.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      batches.emplace_back(start, std::min(order.size(), start + opts.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& [lo, hi] : batches) {
      std::vector<Matrix> xb;
      std::vector<int> yb;
      for (std::size_t i = lo; i < hi; ++i) {
        xb.push_back(inputs[order[i]]);
        yb.push_back(labels[order[i]]);
      }
      auto res = backward(params, spec, xb, yb);
      loss_sum += res.loss * static_cast<double>(xb.size());
      for (std::size_t r = 0; r < xb.size(); ++r) {
        const auto row = res.probs.row(r);
        const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == yb[r]) ++correct;
      }
      if (spec.batch_norm) {
        for (std::size_t j = 0; j < spec.hidden[0]; ++j) {
          params.bn_running_mean[j] = spec.bn_momentum * params.bn_running_mean[j] +
                                      (1.0 - spec.bn_momentum) * res.batch_mean[j];
          params.bn_running_var[j] = spec.bn_momentum * params.bn_running_var[j] +
                                     (1.0 - spec.bn_momentum) * res.batch_var[j];
        }
      }
      adam_step(adam, params, res.grads);
    }
    if (log) {
      const double n = static_cast<double>(inputs.size());
      log->push_back({epoch + 1, loss_sum / n, static_cast<double>(correct) / n});
    }
  }
  return params;
}

int predict_net(const NetworkParams& p, const NetworkSpec& spec, const Matrix& input) {
  const Matrix probs = forward(p, spec, std::span<const Matrix>(&input, 1), Mode::Eval);
  const auto row = probs.row(0);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace radiofp
