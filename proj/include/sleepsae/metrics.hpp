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

#pragma once

#include <cmath>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/hmm.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

/// Counts indexed (true stage, predicted stage).
struct ConfusionMatrix {
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::size_t excluded = 0;  // frames whose true label is unscored

  static ConfusionMatrix empty(std::size_t k = kNumStages) {
    ConfusionMatrix c;
    c.counts.setZero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    return c;
  }

  std::size_t total() const { return counts.sum(); }
  std::size_t correct() const { return counts.diagonal().sum(); }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(total()); }

  /// Row-normalised percentages; rows without frames are zero.
  Matrix row_percent() const {
    Matrix p = Matrix::Zero(counts.rows(), counts.cols());
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
      const auto n = counts.row(r).sum();
      if (n == 0) continue;
      for (Eigen::Index c = 0; c < counts.cols(); ++c) {
        p(r, c) = 100.0 * static_cast<double>(counts(r, c)) / static_cast<double>(n);
      }
    }
    return p;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    counts += o.counts;
    excluded += o.excluded;
    return *this;
  }
};

/// Tallies aligned sequences of stage indices; kNoLabel in `truth` is excluded.
inline ConfusionMatrix confusion(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth,
                                 std::size_t k = kNumStages) {
  if (predicted.size() != truth.size()) fail(ErrorCode::LengthMismatch, "predictions and labels differ in length");
  auto c = ConfusionMatrix::empty(k);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] == kNoLabel || truth[t] >= k) {
      ++c.excluded;
      continue;
    }
    if (predicted[t] >= k) fail(ErrorCode::ShapeMismatch, "prediction outside the label set");
    ++c.counts(static_cast<Eigen::Index>(truth[t]), static_cast<Eigen::Index>(predicted[t]));
  }
  return c;
}

/// Stage indices with kNoLabel for unscored frames.
inline std::vector<std::size_t> to_indices(const std::vector<StageLabel>& labels) {
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = is_scored(labels[i]) ? stage_index(labels[i]) : kNoLabel;
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); zero for n < 2
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

}  // namespace sleepsae
