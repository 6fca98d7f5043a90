// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "saedrift/actstore.hpp"
#include "saedrift/error.hpp"
#include "saedrift/io.hpp"
#include "saedrift/numkit.hpp"
#include "saedrift/sae_params.hpp"

namespace saedrift {

/// Post-ReLU feature activations, batch x m. Every element is >= 0.
template <typename T>
using HiddenCode = BasicMatrix<T>;

struct LossBreakdown {
  double mse = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
};

struct TrainConfig {
  double lambda = 1e-3;
  double learning_rate = 2e-5;
  std::uint32_t epochs = 10;
  std::uint32_t batch_size = 64;
  std::uint32_t hidden_dim = 1024;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorKind::config, "learning rate must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::config, "lambda must be >= 0");
    if (batch_size < 1) fail(ErrorKind::config, "batch size must be >= 1");
    if (hidden_dim < 1) fail(ErrorKind::config, "hidden dim must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      fail(ErrorKind::config, "Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) fail(ErrorKind::config, "Adam epsilon must be > 0");
  }
};

/// Adam moment buffers share the parameter layout and are kept in double.
struct AdamState {
  SaeParams<double> first_moment;
  SaeParams<double> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t input_dim, std::size_t hidden_dim) {
    return {SaeParams<double>::zeros(input_dim, hidden_dim), SaeParams<double>::zeros(input_dim, hidden_dim), 0};
  }
};

using TrainHistory = std::vector<LossBreakdown>;

namespace detail {

template <typename T>
void check_input(const SaeParams<T>& params, const BasicMatrix<T>& x) {
  if (!params.consistent()) fail(ErrorKind::shape, "inconsistent autoencoder parameter shapes");
  if (x.cols() != params.input_dim()) {
    fail(ErrorKind::shape, "input has " + std::to_string(x.cols()) + " columns, encoder expects " +
                               std::to_string(params.input_dim()));
  }
}

/// pre = x W_e^T + b_e in double, accumulated over input coordinates in order.
template <typename T>
std::vector<double> pre_activations(const SaeParams<T>& params, const BasicMatrix<T>& x) {
  const std::size_t batch = x.rows();
  const std::size_t d = params.input_dim();
  const std::size_t m = params.hidden_dim();
  // encoder weight transposed to d x m so the inner loop runs over features
  std::vector<double> wt(d * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < d; ++i) wt[i * m + j] = params.encoder_weight(j, i);

  std::vector<double> pre(batch * m);
  for (std::size_t b = 0; b < batch; ++b) {
    double* out = pre.data() + b * m;
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x(b, i);
      const double* w = wt.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) out[j] += xi * w[j];
    }
    for (std::size_t j = 0; j < m; ++j) out[j] += params.encoder_bias(0, j);
  }
  return pre;
}

/// xhat = h W_d^T + b_d in double. Zero code entries contribute nothing and
/// are skipped.
template <typename T>
std::vector<double> reconstruct(const SaeParams<T>& params, const std::vector<double>& h, std::size_t batch) {
  const std::size_t d = params.input_dim();
  const std::size_t m = params.hidden_dim();
  std::vector<double> wt(m * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j) wt[j * d + i] = params.decoder_weight(i, j);

  std::vector<double> xhat(batch * d);
  for (std::size_t b = 0; b < batch; ++b) {
    double* out = xhat.data() + b * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double hj = h[b * m + j];
      if (hj == 0.0) continue;
      const double* w = wt.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) out[i] += hj * w[i];
    }
    for (std::size_t i = 0; i < d; ++i) out[i] += params.decoder_bias(0, i);
  }
  return xhat;
}

inline void relu_in_place(std::vector<double>& v) {
  for (auto& e : v) e = e > 0.0 ? e : 0.0;
}

template <typename T>
BasicMatrix<T> to_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  BasicMatrix<T> out(rows, cols);
  for (std::size_t k = 0; k < v.size(); ++k) out.values()[k] = static_cast<T>(v[k]);
  return out;
}

}  // namespace detail

/// h = ReLU(x W_e^T + b_e).
template <typename T>
HiddenCode<T> encode(const SaeParams<T>& params, const BasicMatrix<T>& x) {
  detail::check_input(params, x);
  auto pre = detail::pre_activations(params, x);
  detail::relu_in_place(pre);
  auto h = detail::to_matrix<T>(pre, x.rows(), params.hidden_dim());
  detail::require_finite(h, "encode");
  return h;
}

/// xhat = h W_d^T + b_d. No output nonlinearity.
template <typename T>
BasicMatrix<T> decode(const SaeParams<T>& params, const HiddenCode<T>& h) {
  if (!params.consistent()) fail(ErrorKind::shape, "inconsistent autoencoder parameter shapes");
  if (h.cols() != params.hidden_dim()) {
    fail(ErrorKind::shape, "code has " + std::to_string(h.cols()) + " columns, decoder expects " +
                               std::to_string(params.hidden_dim()));
  }
  std::vector<double> hd(h.values().begin(), h.values().end());
  auto xhat = detail::to_matrix<T>(detail::reconstruct(params, hd, h.rows()), h.rows(), params.input_dim());
  detail::require_finite(xhat, "decode");
  return xhat;
}

/// mse averages over batch and coordinates; sparsity is lambda times the
/// per-sample L1 norm of the code, averaged over the batch.
template <typename T>
LossBreakdown loss(const BasicMatrix<T>& x, const BasicMatrix<T>& xhat, const HiddenCode<T>& h, double lambda) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
    fail(ErrorKind::shape, "reconstruction " + detail::dims(xhat.rows(), xhat.cols()) + " vs input " +
                               detail::dims(x.rows(), x.cols()));
  }
  if (h.rows() != x.rows()) fail(ErrorKind::shape, "code batch differs from input batch");
  if (x.rows() == 0) fail(ErrorKind::empty_input, "loss over an empty batch");
  accum_t sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const accum_t r = static_cast<accum_t>(xhat.values()[k]) - static_cast<accum_t>(x.values()[k]);
    sq += r * r;
  }
  accum_t l1 = 0.0;
  for (const T& v : h.values()) l1 += std::abs(static_cast<accum_t>(v));
  LossBreakdown out;
  out.mse = sq / static_cast<double>(x.size());
  out.sparsity = lambda * (l1 / static_cast<double>(x.rows()));
  out.total = out.mse + out.sparsity;
  return out;
}

/// Loss and exact gradients of one batch. Intermediates stay in double; only
/// the returned gradients are rounded to T.
///
///   g_xhat = 2 (xhat - x) / (B d)
///   dW_d   = g_xhat^T h            db_d = sum_b g_xhat
///   g_h    = g_xhat W_d + lambda / B
///   g_pre  = g_h where pre > 0, else 0
///   dW_e   = g_pre^T x             db_e = sum_b g_pre
template <typename T>
LossBreakdown loss_and_gradients(const SaeParams<T>& params, const BasicMatrix<T>& x, double lambda,
                                 SaeParams<T>& grads) {
  detail::check_input(params, x);
  const std::size_t batch = x.rows();
  const std::size_t d = params.input_dim();
  const std::size_t m = params.hidden_dim();
  if (batch == 0) fail(ErrorKind::empty_input, "gradients over an empty batch");

  auto pre = detail::pre_activations(params, x);
  std::vector<double> h = pre;
  detail::relu_in_place(h);
  const auto xhat = detail::reconstruct(params, h, batch);

  LossBreakdown lb;
  std::vector<double> g_xhat(batch * d);
  const double mse_scale = 2.0 / static_cast<double>(batch * d);
  accum_t sq = 0.0;
  for (std::size_t k = 0; k < batch * d; ++k) {
    const double r = xhat[k] - static_cast<double>(x.values()[k]);
    sq += r * r;
    g_xhat[k] = mse_scale * r;
  }
  accum_t l1 = 0.0;
  for (double v : h) l1 += v;
  lb.mse = sq / static_cast<double>(batch * d);
  lb.sparsity = lambda * (l1 / static_cast<double>(batch));
  lb.total = lb.mse + lb.sparsity;

  std::vector<double> dwd(d * m, 0.0);
  std::vector<double> dbd(d, 0.0);
  std::vector<double> g_pre(batch * m, 0.0);
  const double l1_grad = lambda / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* hb = h.data() + b * m;
    const double* gb = g_xhat.data() + b * d;
    double* gp = g_pre.data() + b * m;
    for (std::size_t i = 0; i < d; ++i) {
      const double gi = gb[i];
      dbd[i] += gi;
      double* row = dwd.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += gi * hb[j];
      const T* wrow = params.decoder_weight.row(i).data();
      for (std::size_t j = 0; j < m; ++j) gp[j] += gi * static_cast<double>(wrow[j]);
    }
    for (std::size_t j = 0; j < m; ++j) gp[j] = pre[b * m + j] > 0.0 ? gp[j] + l1_grad : 0.0;
  }

  std::vector<double> dwe(m * d, 0.0);
  std::vector<double> dbe(m, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* gp = g_pre.data() + b * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double gj = gp[j];
      if (gj == 0.0) continue;
      dbe[j] += gj;
      double* row = dwe.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) row[i] += gj * static_cast<double>(x(b, i));
    }
  }

  grads.encoder_weight = detail::to_matrix<T>(dwe, m, d);
  grads.encoder_bias = detail::to_matrix<T>(dbe, 1, m);
  grads.decoder_weight = detail::to_matrix<T>(dwd, d, m);
  grads.decoder_bias = detail::to_matrix<T>(dbd, 1, d);
  return lb;
}

template <typename T>
SaeParams<T> gradients(const SaeParams<T>& params, const BasicMatrix<T>& x, double lambda) {
  SaeParams<T> grads;
  loss_and_gradients(params, x, lambda, grads);
  return grads;
}

/// One bias-corrected Adam update; increments `state.step`.
template <typename T>
void adam_step(SaeParams<T>& params, const SaeParams<T>& grads, AdamState& state, const TrainConfig& cfg) {
  if (!(params.consistent() && grads.consistent() && params.input_dim() == grads.input_dim() &&
        params.hidden_dim() == grads.hidden_dim() && state.first_moment.input_dim() == params.input_dim() &&
        state.first_moment.hidden_dim() == params.hidden_dim())) {
    fail(ErrorKind::shape, "Adam buffers do not match parameter shapes");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](BasicMatrix<T>& p, const BasicMatrix<T>& g, BasicMatrix<double>& m1, BasicMatrix<double>& m2) {
    auto pv = p.values();
    auto gv = g.values();
    auto m1v = m1.values();
    auto m2v = m2.values();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      const double gk = gv[k];
      m1v[k] = cfg.beta1 * m1v[k] + (1.0 - cfg.beta1) * gk;
      m2v[k] = cfg.beta2 * m2v[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m1v[k] / bias1;
      const double vhat = m2v[k] / bias2;
      pv[k] = static_cast<T>(static_cast<double>(pv[k]) - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
  };
  update(params.encoder_weight, grads.encoder_weight, state.first_moment.encoder_weight,
         state.second_moment.encoder_weight);
  update(params.encoder_bias, grads.encoder_bias, state.first_moment.encoder_bias, state.second_moment.encoder_bias);
  update(params.decoder_weight, grads.decoder_weight, state.first_moment.decoder_weight,
         state.second_moment.decoder_weight);
  update(params.decoder_bias, grads.decoder_bias, state.first_moment.decoder_bias, state.second_moment.decoder_bias);
}

/// Weights uniform in +-1/sqrt(fan_in), biases zero. Encoder weights are drawn
/// first, then decoder weights, both in row-major order.
inline SaeParams<float> initialize_params(std::size_t input_dim, std::size_t hidden_dim, RngStream& rng) {
  auto params = SaeParams<float>::zeros(input_dim, hidden_dim);
  const double enc = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double dec = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  params.encoder_weight = Matrix(hidden_dim, input_dim, uniform_sample(rng, -enc, enc, hidden_dim * input_dim).storage());
  params.decoder_weight = Matrix(input_dim, hidden_dim, uniform_sample(rng, -dec, dec, input_dim * hidden_dim).storage());
  return params;
}

/// In-place Fisher-Yates, walking from the back.
inline void shuffle_indices(std::vector<std::uint32_t>& idx, RngStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

struct TrainResult {
  SaeModelFile model;
  TrainHistory history;
};

/// Minibatch Adam over every row of `data`. The last partial batch is kept.
/// Each history entry is the sample-weighted mean of the batch losses seen
/// during that epoch, measured before each batch's update.
inline TrainResult train(const ActivationSet& data, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.data.rows();
  const std::size_t d = data.data.cols();
  if (n == 0) fail(ErrorKind::validation, "training set has no rows");
  if (d != data.hidden_dim) fail(ErrorKind::validation, "activation payload width differs from hidden_dim");

  RngStream rng(cfg.seed);
  TrainResult result;
  result.model.lambda = cfg.lambda;
  result.model.seed = cfg.seed;
  result.model.params = initialize_params(d, cfg.hidden_dim, rng);
  auto& params = result.model.params;
  auto state = AdamState::zeros(d, cfg.hidden_dim);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  SaeParams<float> grads;
  Matrix batch;

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    LossBreakdown sum;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t rows = std::min<std::size_t>(cfg.batch_size, n - start);
      if (batch.rows() != rows || batch.cols() != d) batch = Matrix(rows, d);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.data.row(order[start + r]);
        std::copy(src.begin(), src.end(), batch.row(r).begin());
      }
      const auto lb = loss_and_gradients(params, batch, cfg.lambda, grads);
      if (!std::isfinite(lb.total)) {
        fail(ErrorKind::divergence, "non-finite loss in epoch " + std::to_string(epoch));
      }
      const auto w = static_cast<double>(rows);
      sum.mse += lb.mse * w;
      sum.sparsity += lb.sparsity * w;
      adam_step(params, grads, state, cfg);
    }
    LossBreakdown mean;
    mean.mse = sum.mse / static_cast<double>(n);
    mean.sparsity = sum.sparsity / static_cast<double>(n);
    mean.total = mean.mse + mean.sparsity;
    if (!std::isfinite(mean.total) || !params.all_finite()) {
      fail(ErrorKind::divergence, "non-finite state after epoch " + std::to_string(epoch));
    }
    result.history.push_back(mean);
    result.model.epochs_trained = epoch;
  }
  return result;
}

/// Mean over rows of sum_i |h_i|, the quantity the L1 penalty acts on.
inline double mean_code_l1(const SaeParams<float>& params, const Matrix& x) {
  const auto h = encode(params, x);
  if (h.rows() == 0) fail(ErrorKind::empty_input, "no rows to encode");
  accum_t total = 0.0;
  for (float v : h.values()) total += std::abs(static_cast<double>(v));
  return total / static_cast<double>(h.rows());
}

inline std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,mse,sparsity,total\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_float(history[e].mse) + "," + format_float(history[e].sparsity) + "," +
           format_float(history[e].total) + "\n";
  }
  return out;
}

}  // namespace saedrift
