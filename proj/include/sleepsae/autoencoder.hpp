// Copyright 2026 The sleepsae Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Temporal sparse auto-encoder with a per-input reconstruction mask.
//
// For an example with current frame v and past frames v(t-1) .. v(t-n):
//
//   h    = sigmoid(W v + sum_k A_k v(t-k) + b_h)
//   vhat = W^T h + sum_k B_k v(t-k) + b_v          (linear output)
//
// The mini-batch cost is
//
//   1/M sum_m 1/2 sum_i mask_mi (v_mi - vhat_mi)^2
//     + lambda/2 (|W|^2 + sum_k |A_k|^2 + sum_k |B_k|^2)
//     + beta sum_j KL(rho || p_j)
//
// where p_j is the mean activation of hidden unit j over the batch. With
// n = 0 and an all-ones mask this is the plain sparse auto-encoder.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sleepsae/error.hpp"

namespace sleepsae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

struct Hyperparams {
  double weight_decay = 1e-4;       // lambda
  double sparsity_weight = 0.3;     // beta
  double sparsity_target = 0.05;    // rho
  double learning_rate = 0.01;      // eta_0
  double lr_decay_epochs = 50.0;    // eta_e = eta_0 / (1 + e / lr_decay_epochs)
  double momentum = 0.9;
  double attention_penalty = 0.05;  // gamma
  double alpha_learning_rate = -1;  // negative: same as learning_rate
  std::size_t hidden_units = 500;
  std::size_t model_order = 0;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  std::size_t batch_segments = 30;
  std::size_t segment_frames = 30;
  bool tied_weights = true;
  std::uint64_t seed = 1;

  double alpha_rate() const { return alpha_learning_rate < 0 ? learning_rate : alpha_learning_rate; }

  void validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
    if (!(weight_decay >= 0)) bad("weight_decay must be >= 0");
    if (!(sparsity_weight >= 0)) bad("sparsity_weight must be >= 0");
    if (!(learning_rate >= 0)) bad("learning_rate must be >= 0");
    if (!(attention_penalty >= 0)) bad("attention_penalty must be >= 0");
    if (!(sparsity_target > 0 && sparsity_target < 1)) bad("sparsity_target must lie in (0, 1)");
    if (!(momentum >= 0 && momentum < 1)) bad("momentum must lie in [0, 1)");
    if (!(lr_decay_epochs > 0)) bad("lr_decay_epochs must be > 0");
    if (hidden_units == 0) bad("hidden_units must be > 0");
    if (batch_segments == 0 || segment_frames == 0) bad("batch size must be > 0");
    if (max_epochs == 0) bad("max_epochs must be > 0");
  }
};

struct SaeParams {
  Matrix W;               // hidden x visible
  Vector bh;              // hidden
  Vector bv;              // visible
  std::vector<Matrix> A;  // order x (hidden x visible), A[k-1] acts on v(t-k)
  std::vector<Matrix> B;  // order x (visible x visible)
  Matrix W_dec;           // visible x hidden; empty when the decoder is tied to W^T

  std::size_t visible() const { return static_cast<std::size_t>(W.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t order() const { return A.size(); }
  bool tied() const { return W_dec.size() == 0; }

  static SaeParams zeros(std::size_t dv, std::size_t dh, std::size_t order, bool tied = true) {
    const auto v = static_cast<Eigen::Index>(dv);
    const auto h = static_cast<Eigen::Index>(dh);
    SaeParams p;
    p.W = Matrix::Zero(h, v);
    p.bh = Vector::Zero(h);
    p.bv = Vector::Zero(v);
    p.A.assign(order, Matrix::Zero(h, v));
    p.B.assign(order, Matrix::Zero(v, v));
    if (!tied) p.W_dec = Matrix::Zero(v, h);
    return p;
  }

  /// Weights ~ U(-r, r) with r = sqrt(6 / (dv + dh)); biases zero.
  static SaeParams random(std::size_t dv, std::size_t dh, std::size_t order, bool tied, Rng& rng) {
    auto p = zeros(dv, dh, order, tied);
    const double r = std::sqrt(6.0 / static_cast<double>(dv + dh));
    std::uniform_real_distribution<double> u(-r, r);
    auto fill = [&](Matrix& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    };
    fill(p.W);
    for (auto& a : p.A) fill(a);
    for (auto& b : p.B) fill(b);
    if (!tied) fill(p.W_dec);
    return p;
  }

  /// Flat views of every parameter block, in a fixed order:
  /// W, bh, bv, A..., B..., W_dec.
  std::vector<std::span<double>> blocks() {
    std::vector<std::span<double>> out;
    auto add = [&](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
    add(W);
    add(bh);
    add(bv);
    for (auto& a : A) add(a);
    for (auto& b : B) add(b);
    if (!tied()) add(W_dec);
    return out;
  }
  std::vector<std::span<const double>> blocks() const {
    std::vector<std::span<const double>> out;
    for (auto s : const_cast<SaeParams*>(this)->blocks()) out.emplace_back(s.data(), s.size());
    return out;
  }

  std::vector<std::string> block_names() const {
    std::vector<std::string> n{"W", "bh", "bv"};
    for (std::size_t k = 1; k <= A.size(); ++k) n.push_back("A" + std::to_string(k));
    for (std::size_t k = 1; k <= B.size(); ++k) n.push_back("B" + std::to_string(k));
    if (!tied()) n.push_back("W_dec");
    return n;
  }

  bool all_finite() const {
    for (auto b : blocks()) {
      for (double x : b) {
        if (!std::isfinite(x)) return false;
      }
    }
    return true;
  }
};

/// Mini-batch of examples. history[k-1] holds, row for row, the frame k
/// seconds before the corresponding row of `inputs`.
struct Batch {
  Matrix inputs;
  std::vector<Matrix> history;
  std::vector<std::size_t> labels;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline constexpr double kKlClamp = 1e-8;

/// KL(rho || p) between Bernoulli distributions, p clamped to [1e-8, 1 - 1e-8].
inline double kl_div(double rho, double p) {
  p = std::clamp(p, kKlClamp, 1.0 - kKlClamp);
  double v = 0.0;
  if (rho > 0) v += rho * std::log(rho / p);
  if (rho < 1) v += (1.0 - rho) * std::log((1.0 - rho) / (1.0 - p));
  return v;
}

/// d/dp KL(rho || p); zero where the clamp is active.
inline double kl_div_grad(double rho, double p) {
  if (p < kKlClamp || p > 1.0 - kKlClamp) return 0.0;
  return -rho / p + (1.0 - rho) / (1.0 - p);
}

namespace detail {

inline void check_batch(const SaeParams& params, const Batch& batch) {
  const auto dv = static_cast<Eigen::Index>(params.visible());
  if (batch.inputs.cols() != dv) {
    fail(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.inputs.cols()) + " inputs, model expects " +
                                       std::to_string(dv));
  }
  if (batch.history.size() != params.order()) {
    fail(ErrorCode::ShapeMismatch, "batch history depth " + std::to_string(batch.history.size()) +
                                       " differs from model order " + std::to_string(params.order()));
  }
  for (const auto& h : batch.history) {
    if (h.rows() != batch.inputs.rows() || h.cols() != dv) fail(ErrorCode::ShapeMismatch, "history block shape");
  }
}

inline void check_mask(const Batch& batch, const Matrix& mask) {
  if (mask.rows() != batch.inputs.rows() || mask.cols() != batch.inputs.cols()) {
    fail(ErrorCode::ShapeMismatch, "mask must be examples x inputs");
  }
}

}  // namespace detail

/// Hidden activations for every row of the batch.
inline Matrix encode_batch(const SaeParams& p, const Batch& batch) {
  detail::check_batch(p, batch);
  Matrix z = batch.inputs * p.W.transpose();
  for (std::size_t k = 0; k < p.order(); ++k) z.noalias() += batch.history[k] * p.A[k].transpose();
  z.rowwise() += p.bh.transpose();
  return z.unaryExpr([](double x) { return sigmoid(x); });
}

/// Linear reconstruction from hidden activations and history.
inline Matrix decode_batch(const SaeParams& p, const Matrix& hidden, const Batch& batch) {
  detail::check_batch(p, batch);
  if (static_cast<std::size_t>(hidden.cols()) != p.hidden() || hidden.rows() != batch.inputs.rows()) {
    fail(ErrorCode::ShapeMismatch, "hidden activations shape");
  }
  Matrix r = p.tied() ? Matrix(hidden * p.W) : Matrix(hidden * p.W_dec.transpose());
  for (std::size_t k = 0; k < p.order(); ++k) r.noalias() += batch.history[k] * p.B[k].transpose();
  r.rowwise() += p.bv.transpose();
  return r;
}

namespace detail {

inline Batch single_example(const SaeParams& p, const Vector& v, const Matrix& history) {
  if (static_cast<std::size_t>(v.size()) != p.visible()) fail(ErrorCode::ShapeMismatch, "visible vector length");
  if (static_cast<std::size_t>(history.rows()) != p.order() ||
      (p.order() > 0 && static_cast<std::size_t>(history.cols()) != p.visible())) {
    fail(ErrorCode::ShapeMismatch, "history must be order x visible");
  }
  Batch b;
  b.inputs = v.transpose();
  for (Eigen::Index k = 0; k < history.rows(); ++k) b.history.emplace_back(history.row(k));
  b.labels = {0};
  return b;
}

}  // namespace detail

/// Single-example encoder. Row k-1 of `history` is the frame k seconds back.
inline Vector encode(const SaeParams& p, const Vector& v, const Matrix& history) {
  return encode_batch(p, detail::single_example(p, v, history)).row(0).transpose();
}

inline Vector decode(const SaeParams& p, const Vector& h, const Matrix& history) {
  auto b = detail::single_example(p, Vector::Zero(static_cast<Eigen::Index>(p.visible())), history);
  return decode_batch(p, h.transpose(), b).row(0).transpose();
}

struct CostTerms {
  double reconstruction = 0.0;
  double weight_decay = 0.0;
  double sparsity = 0.0;

  double total() const { return reconstruction + weight_decay + sparsity; }
};

inline double weight_decay_term(const SaeParams& p, double lambda) {
  double s = p.W.squaredNorm();
  for (const auto& a : p.A) s += a.squaredNorm();
  for (const auto& b : p.B) s += b.squaredNorm();
  if (!p.tied()) s += p.W_dec.squaredNorm();
  return 0.5 * lambda * s;
}

struct CostGradient {
  CostTerms cost;
  SaeParams grad;
  Matrix hidden;
  Matrix reconstruction;
};

/// Cost and exact gradient in one pass. `mask` is examples x inputs; entries
/// are normally 0/1 draws but any nonnegative weights are accepted.
inline CostGradient cost_and_gradients(const SaeParams& p, const Batch& batch, const Matrix& mask,
                                       const Hyperparams& hp, bool want_gradient = true) {
  detail::check_batch(p, batch);
  detail::check_mask(batch, mask);
  const auto m = static_cast<double>(batch.size());
  if (batch.size() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");

  CostGradient out;
  out.hidden = encode_batch(p, batch);
  out.reconstruction = decode_batch(p, out.hidden, batch);
  const Matrix diff = out.reconstruction - batch.inputs;
  const Matrix weighted = diff.cwiseProduct(mask);

  out.cost.reconstruction = 0.5 * weighted.cwiseProduct(diff).sum() / m;
  out.cost.weight_decay = weight_decay_term(p, hp.weight_decay);
  const Vector mean_act = out.hidden.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < mean_act.size(); ++j) {
    out.cost.sparsity += hp.sparsity_weight * kl_div(hp.sparsity_target, mean_act[j]);
  }
  if (!want_gradient) return out;

  auto& g = out.grad;
  g = SaeParams::zeros(p.visible(), p.hidden(), p.order(), p.tied());
  const Matrix r = weighted / m;  // d cost / d vhat

  g.bv = r.colwise().sum().transpose();
  for (std::size_t k = 0; k < p.order(); ++k) {
    g.B[k].noalias() = r.transpose() * batch.history[k];
    g.B[k] += hp.weight_decay * p.B[k];
  }

  // d cost / d h
  Matrix dh = p.tied() ? Matrix(r * p.W.transpose()) : Matrix(r * p.W_dec);
  Vector sparse(mean_act.size());
  for (Eigen::Index j = 0; j < mean_act.size(); ++j) {
    sparse[j] = hp.sparsity_weight * kl_div_grad(hp.sparsity_target, mean_act[j]) / m;
  }
  dh.rowwise() += sparse.transpose();
  const Matrix dz = dh.cwiseProduct(out.hidden.cwiseProduct((1.0 - out.hidden.array()).matrix()));

  g.W.noalias() = dz.transpose() * batch.inputs;
  if (p.tied()) {
    g.W.noalias() += out.hidden.transpose() * r;
  } else {
    g.W_dec.noalias() = r.transpose() * out.hidden;
    g.W_dec += hp.weight_decay * p.W_dec;
  }
  g.W += hp.weight_decay * p.W;
  g.bh = dz.colwise().sum().transpose();
  for (std::size_t k = 0; k < p.order(); ++k) {
    g.A[k].noalias() = dz.transpose() * batch.history[k];
    g.A[k] += hp.weight_decay * p.A[k];
  }
  return out;
}

inline double batch_cost(const SaeParams& p, const Batch& batch, const Matrix& mask, const Hyperparams& hp) {
  return cost_and_gradients(p, batch, mask, hp, false).cost.total();
}

inline SaeParams batch_gradients(const SaeParams& p, const Batch& batch, const Matrix& mask,
                                 const Hyperparams& hp) {
  return cost_and_gradients(p, batch, mask, hp, true).grad;
}

}  // namespace sleepsae
