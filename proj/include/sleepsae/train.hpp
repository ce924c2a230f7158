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

// Unsupervised pre-training: momentum SGD over class-stratified mini-batches
// with early stopping on the validation cost.

#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/dataset.hpp"
#include "sleepsae/error.hpp"

namespace sleepsae {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_cost = 0.0;
  double validation = 0.0;  // cost (pre-training) or accuracy (fine-tuning)
  double mean_alpha = 1.0;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Raised when a cost becomes NaN or infinite; carries the trace so far.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& message, TrainingTrace trace)
      : Error(ErrorCode::Diverged, message), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const { return trace_; }

 private:
  TrainingTrace trace_;
};

/// Patience counter. An epoch improves only if it strictly beats the best
/// value so far; training stops once `patience` consecutive epochs fail to.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, bool minimize) : patience_(patience), minimize_(minimize) {}

  /// Returns true when this epoch is the new best.
  bool update(double value) {
    ++epoch_;
    const bool better = best_epoch_ == 0 || (minimize_ ? value < best_ : value > best_);
    if (better) {
      best_ = value;
      best_epoch_ = epoch_;
      since_best_ = 0;
    } else {
      ++since_best_;
    }
    return better;
  }

  bool should_stop() const { return best_epoch_ > 0 && since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  bool minimize_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

/// eta_e = eta_0 / (1 + e / decay), e counted from zero.
inline double learning_rate_at(const Hyperparams& hp, std::size_t epoch) {
  return hp.learning_rate / (1.0 + static_cast<double>(epoch) / hp.lr_decay_epochs);
}

/// Classical momentum: v <- mu v - eta g; theta <- theta + v.
template <typename Params>
void momentum_step(Params& params, Params& velocity, const Params& grad, double lr, double momentum) {
  auto p = params.blocks();
  auto v = velocity.blocks();
  const auto g = grad.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      v[b][i] = momentum * v[b][i] - lr * g[b][i];
      p[b][i] += v[b][i];
    }
  }
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream s;
  s << rng;
  return s.str();
}

inline constexpr std::size_t kEvalChunk = 4096;

/// Full-set cost with the expected mask (alpha rows in place of 0/1 draws)
/// and the sparsity term evaluated on the mean activation over all examples.
inline CostTerms dataset_cost(const SaeParams& params, const std::vector<Sequence>& data,
                              const std::vector<ExampleRef>& examples, const AlphaMatrix& alpha,
                              const Hyperparams& hp) {
  CostTerms cost;
  if (examples.empty()) return cost;
  double recon = 0.0;
  Vector act_sum = Vector::Zero(static_cast<Eigen::Index>(params.hidden()));
  for (std::size_t start = 0; start < examples.size(); start += kEvalChunk) {
    const auto n = std::min(kEvalChunk, examples.size() - start);
    const auto batch = gather_batch(data, std::span(examples).subspan(start, n), params.order());
    const Matrix h = encode_batch(params, batch);
    const Matrix diff = decode_batch(params, h, batch) - batch.inputs;
    recon += 0.5 * diff.cwiseAbs2().cwiseProduct(expected_mask(alpha, batch.labels)).sum();
    act_sum += h.colwise().sum().transpose();
  }
  const double total = static_cast<double>(examples.size());
  cost.reconstruction = recon / total;
  cost.weight_decay = weight_decay_term(params, hp.weight_decay);
  for (Eigen::Index j = 0; j < act_sum.size(); ++j) {
    cost.sparsity += hp.sparsity_weight * kl_div(hp.sparsity_target, act_sum[j] / total);
  }
  return cost;
}

/// Mean squared reconstruction error per (stage, input), all inputs
/// reconstructed. Rows of stages without examples are zero.
inline Matrix reconstruction_error_by_stage(const SaeParams& params, const std::vector<Sequence>& data,
                                            std::size_t classes = kNumStages) {
  const auto examples = eligible_examples(data, params.order());
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(params.visible()));
  std::vector<double> count(classes, 0.0);
  for (std::size_t start = 0; start < examples.size(); start += kEvalChunk) {
    const auto n = std::min(kEvalChunk, examples.size() - start);
    const auto batch = gather_batch(data, std::span(examples).subspan(start, n), params.order());
    const Matrix sq = (decode_batch(params, encode_batch(params, batch), batch) - batch.inputs).cwiseAbs2();
    for (std::size_t r = 0; r < batch.size(); ++r) {
      sum.row(static_cast<Eigen::Index>(batch.labels[r])) += sq.row(static_cast<Eigen::Index>(r));
      count[batch.labels[r]] += 1.0;
    }
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (count[k] > 0) sum.row(static_cast<Eigen::Index>(k)) /= count[k];
  }
  return sum;
}

struct PretrainResult {
  SaeParams params;
  AlphaMatrix alpha;
  TrainingTrace trace;
  std::string rng_state;
};

/// Trains on `train`, early-stops on `validation`, and returns the parameters
/// (and alpha) of the best validation epoch. `alpha` fixes the mode; in
/// adaptive mode it is updated after every parameter step.
inline PretrainResult train_unsupervised(const std::vector<Sequence>& train, const std::vector<Sequence>& validation,
                                         const Hyperparams& hp, AlphaMatrix alpha) {
  hp.validate();
  if (train.empty()) fail(ErrorCode::ShapeMismatch, "no training sequences");
  const auto dv = static_cast<std::size_t>(train.front().frames.cols());
  if (alpha.inputs() != dv || alpha.classes() != kNumStages) {
    fail(ErrorCode::ShapeMismatch, "alpha must be stages x inputs");
  }
  const std::size_t order = hp.model_order;
  const auto segments = build_segments(train, order, hp.segment_frames);
  if (segments.empty()) fail(ErrorCode::ShapeMismatch, "no eligible training examples");
  const auto val_examples = eligible_examples(validation, order);
  if (val_examples.empty()) fail(ErrorCode::ShapeMismatch, "no eligible validation examples");

  Rng rng(hp.seed);
  auto params = SaeParams::random(dv, hp.hidden_units, order, hp.tied_weights, rng);
  auto velocity = SaeParams::zeros(dv, hp.hidden_units, order, hp.tied_weights);
  SegmentSampler sampler(segments, hp.batch_segments);
  EarlyStopping stopper(hp.patience, /*minimize=*/true);

  PretrainResult best{params, alpha, {}, {}};
  TrainingTrace trace;
  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    const double lr = learning_rate_at(hp, epoch);
    const double alpha_lr = hp.alpha_rate() / (1.0 + static_cast<double>(epoch) / hp.lr_decay_epochs);
    double cost_sum = 0.0;
    const auto n_batches = sampler.batches_per_epoch();
    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto refs = sampler.next_batch(rng);
      const auto batch = gather_batch(train, refs, order);
      const Matrix mask = sample_mask(alpha, batch.labels, rng);
      const auto cg = cost_and_gradients(params, batch, mask, hp);
      const double c = cg.cost.total();
      if (!std::isfinite(c)) {
        throw DivergedError("pre-training cost diverged in epoch " + std::to_string(epoch + 1), trace);
      }
      cost_sum += c;
      momentum_step(params, velocity, cg.grad, lr, hp.momentum);
      if (alpha.mode == AlphaMode::Adaptive) {
        // Errors from this batch's forward pass, every input reconstructed.
        const Matrix sq = (cg.reconstruction - batch.inputs).cwiseAbs2();
        alpha = adaptive_update(alpha, sq, batch.labels, hp.attention_penalty, alpha_lr);
      }
    }
    const double val = dataset_cost(params, validation, val_examples, alpha, hp).total();
    if (!std::isfinite(val)) {
      throw DivergedError("validation cost diverged in epoch " + std::to_string(epoch + 1), trace);
    }
    trace.epochs.push_back({epoch + 1, lr, cost_sum / static_cast<double>(n_batches), val, alpha.values.mean()});
    if (stopper.update(val)) {
      best.params = params;
      best.alpha = alpha;
    }
    if (stopper.should_stop()) {
      trace.stopped_early = true;
      break;
    }
  }
  trace.best_epoch = stopper.best_epoch();
  best.trace = std::move(trace);
  best.rng_state = rng_state(rng);
  return best;
}

}  // namespace sleepsae
