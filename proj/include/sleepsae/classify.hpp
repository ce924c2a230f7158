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

// Supervised fine-tuning: the decoder is dropped and a softmax layer is put
// on the hidden units. Cross-entropy is minimised through the head and the
// encoder (W, A, b_h); B, b_v and any untied decoder stay as pre-trained.

#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/dataset.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/stage.hpp"
#include "sleepsae/train.hpp"

namespace sleepsae {

struct SoftmaxHead {
  Matrix U;  // classes x hidden
  Vector c;  // classes
};

struct Classifier {
  SaeParams encoder;
  SoftmaxHead head;
};

/// The trainable part of a classifier, in one struct for the optimizer.
struct FinetuneParams {
  Matrix W;
  Vector bh;
  std::vector<Matrix> A;
  Matrix U;
  Vector c;

  static FinetuneParams from(const Classifier& m) {
    return {m.encoder.W, m.encoder.bh, m.encoder.A, m.head.U, m.head.c};
  }
  void store(Classifier& m) const {
    m.encoder.W = W;
    m.encoder.bh = bh;
    m.encoder.A = A;
    m.head.U = U;
    m.head.c = c;
  }
  FinetuneParams zeros_like() const {
    FinetuneParams z{Matrix::Zero(W.rows(), W.cols()), Vector::Zero(bh.size()), A, Matrix::Zero(U.rows(), U.cols()),
                     Vector::Zero(c.size())};
    for (auto& a : z.A) a.setZero();
    return z;
  }
  std::vector<std::span<double>> blocks() {
    std::vector<std::span<double>> out;
    auto add = [&](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
    add(W);
    add(bh);
    for (auto& a : A) add(a);
    add(U);
    add(c);
    return out;
  }
  std::vector<std::span<const double>> blocks() const {
    std::vector<std::span<const double>> out;
    for (auto s : const_cast<FinetuneParams*>(this)->blocks()) out.emplace_back(s.data(), s.size());
    return out;
  }
};

/// Row-wise softmax, shifted by the row maximum.
inline Matrix softmax_rows(const Matrix& scores) {
  Matrix p(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double mx = scores.row(r).maxCoeff();
    p.row(r) = (scores.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

inline Matrix class_posteriors(const Classifier& m, const Batch& batch) {
  Matrix s = encode_batch(m.encoder, batch) * m.head.U.transpose();
  s.rowwise() += m.head.c.transpose();
  return softmax_rows(s);
}

struct SupervisedCost {
  double cost = 0.0;  // mean cross-entropy + weight decay
  FinetuneParams grad;
  Matrix posterior;
};

/// Mean cross-entropy plus lambda/2 (|W|^2 + sum |A_k|^2 + |U|^2), with gradients.
inline SupervisedCost supervised_cost(const Classifier& m, const Batch& batch, double lambda,
                                      bool want_gradient = true) {
  if (batch.size() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  const auto k = m.head.U.rows();
  for (auto l : batch.labels) {
    if (static_cast<Eigen::Index>(l) >= k) fail(ErrorCode::ShapeMismatch, "label outside the softmax head");
  }
  const double mm = static_cast<double>(batch.size());
  const Matrix h = encode_batch(m.encoder, batch);
  Matrix s = h * m.head.U.transpose();
  s.rowwise() += m.head.c.transpose();
  SupervisedCost out;
  out.posterior = softmax_rows(s);

  double ce = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    const auto lab = static_cast<Eigen::Index>(batch.labels[r]);
    const double mx = s.row(rr).maxCoeff();
    ce += mx + std::log((s.row(rr).array() - mx).exp().sum()) - s(rr, lab);
  }
  double decay = m.encoder.W.squaredNorm() + m.head.U.squaredNorm();
  for (const auto& a : m.encoder.A) decay += a.squaredNorm();
  out.cost = ce / mm + 0.5 * lambda * decay;
  if (!want_gradient) return out;

  Matrix d = out.posterior;
  for (std::size_t r = 0; r < batch.size(); ++r) d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(batch.labels[r])) -= 1.0;
  d /= mm;

  auto& g = out.grad;
  g = FinetuneParams::from(m).zeros_like();
  g.U.noalias() = d.transpose() * h;
  g.U += lambda * m.head.U;
  g.c = d.colwise().sum().transpose();
  const Matrix dz = (d * m.head.U).cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
  g.W.noalias() = dz.transpose() * batch.inputs;
  g.W += lambda * m.encoder.W;
  g.bh = dz.colwise().sum().transpose();
  for (std::size_t q = 0; q < m.encoder.order(); ++q) {
    g.A[q].noalias() = dz.transpose() * batch.history[q];
    g.A[q] += lambda * m.encoder.A[q];
  }
  return out;
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax_row(const Matrix& p, Eigen::Index r) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < p.cols(); ++j) {
    if (p(r, j) > p(r, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(j);
  }
  return best;
}

/// Fraction of examples whose argmax matches the label.
inline double example_accuracy(const Classifier& m, const std::vector<Sequence>& data,
                               const std::vector<ExampleRef>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < examples.size(); start += kEvalChunk) {
    const auto n = std::min(kEvalChunk, examples.size() - start);
    const auto batch = gather_batch(data, std::span(examples).subspan(start, n), m.encoder.order());
    const Matrix p = class_posteriors(m, batch);
    for (std::size_t r = 0; r < n; ++r) {
      if (argmax_row(p, static_cast<Eigen::Index>(r)) == batch.labels[r]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

inline SoftmaxHead random_head(std::size_t hidden, std::size_t classes, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(hidden + classes));
  std::uniform_real_distribution<double> u(-r, r);
  SoftmaxHead head{Matrix(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(hidden)),
                   Vector::Zero(static_cast<Eigen::Index>(classes))};
  for (Eigen::Index i = 0; i < head.U.size(); ++i) head.U.data()[i] = u(rng);
  return head;
}

struct FinetuneResult {
  Classifier model;
  TrainingTrace trace;
};

/// Seed offset separating the fine-tuning stream from pre-training.
inline constexpr std::uint64_t kFinetuneSeedOffset = 0x5eed0001;

/// Fine-tunes a pre-trained encoder with a fresh softmax head. Same sampler,
/// optimizer and patience as pre-training; the best epoch is the one with
/// the highest validation accuracy.
inline FinetuneResult finetune(const SaeParams& encoder, const std::vector<Sequence>& train,
                               const std::vector<Sequence>& validation, const Hyperparams& hp) {
  hp.validate();
  const std::size_t order = encoder.order();
  const auto segments = build_segments(train, order, hp.segment_frames);
  if (segments.empty()) fail(ErrorCode::ShapeMismatch, "no eligible training examples");
  const auto val_examples = eligible_examples(validation, order);
  if (val_examples.empty()) fail(ErrorCode::ShapeMismatch, "no eligible validation examples");

  Rng rng(hp.seed + kFinetuneSeedOffset);
  Classifier model{encoder, random_head(encoder.hidden(), kNumStages, rng)};
  auto params = FinetuneParams::from(model);
  auto velocity = params.zeros_like();
  SegmentSampler sampler(segments, hp.batch_segments);
  EarlyStopping stopper(hp.patience, /*minimize=*/false);

  FinetuneResult best{model, {}};
  TrainingTrace trace;
  for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
    const double lr = learning_rate_at(hp, epoch);
    double cost_sum = 0.0;
    const auto n_batches = sampler.batches_per_epoch();
    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto batch = gather_batch(train, sampler.next_batch(rng), order);
      const auto sc = supervised_cost(model, batch, hp.weight_decay);
      if (!std::isfinite(sc.cost)) {
        throw DivergedError("fine-tuning cost diverged in epoch " + std::to_string(epoch + 1), trace);
      }
      cost_sum += sc.cost;
      momentum_step(params, velocity, sc.grad, lr, hp.momentum);
      params.store(model);
    }
    const double acc = example_accuracy(model, validation, val_examples);
    trace.epochs.push_back({epoch + 1, lr, cost_sum / static_cast<double>(n_batches), acc, 1.0});
    if (stopper.update(acc)) best.model = model;
    if (stopper.should_stop()) {
      trace.stopped_early = true;
      break;
    }
  }
  trace.best_epoch = stopper.best_epoch();
  best.trace = std::move(trace);
  return best;
}

struct Prediction {
  Matrix posterior;                  // seconds x classes
  std::vector<std::size_t> labels;   // argmax per second
  std::vector<std::uint8_t> flagged; // 1: short history (zeros used) or invalid features
};

/// Posterior for every second of a sequence. The first n seconds use zero
/// history in place of the missing frames and are flagged.
inline Prediction predict(const Classifier& m, const Sequence& s) {
  const std::size_t order = m.encoder.order();
  const auto t_len = static_cast<Eigen::Index>(s.length());
  const auto d = s.frames.cols();
  Batch b;
  b.inputs = s.frames;
  b.history.assign(order, Matrix::Zero(t_len, d));
  for (std::size_t k = 1; k <= order; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (t_len > kk) b.history[k - 1].bottomRows(t_len - kk) = s.frames.topRows(t_len - kk);
  }
  b.labels.assign(s.length(), 0);
  Prediction out;
  out.posterior = t_len > 0 ? class_posteriors(m, b) : Matrix(0, static_cast<Eigen::Index>(kNumStages));
  out.labels.resize(s.length());
  out.flagged.resize(s.length());
  for (std::size_t t = 0; t < s.length(); ++t) {
    out.labels[t] = argmax_row(out.posterior, static_cast<Eigen::Index>(t));
    out.flagged[t] = (t < order || !s.valid[t]) ? 1 : 0;
  }
  return out;
}

}  // namespace sleepsae
