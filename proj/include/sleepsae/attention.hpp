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

// Class-conditional attention over the auto-encoder inputs.
//
// alpha(k, i) is the probability that input i of an example of class k is
// reconstructed. Three ways of setting it:
//   standard  all ones, never changed (plain auto-encoder)
//   fixed     one-vs-all Welch t statistics, |t| / max_i |t| per class
//   adaptive  starts at one, follows the expected masked cost plus a
//             -gamma ln(alpha) penalty (KL to a target of one)

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

enum class AlphaMode { Standard, Fixed, Adaptive };

inline std::string_view to_string(AlphaMode m) {
  switch (m) {
    case AlphaMode::Standard: return "standard";
    case AlphaMode::Fixed: return "fixed";
    case AlphaMode::Adaptive: return "adaptive";
  }
  return "standard";
}

inline AlphaMode parse_alpha_mode(std::string_view s) {
  if (s == "standard") return AlphaMode::Standard;
  if (s == "fixed") return AlphaMode::Fixed;
  if (s == "adaptive") return AlphaMode::Adaptive;
  fail(ErrorCode::InvalidConfig, "unknown alpha mode '" + std::string(s) + "'");
}

inline constexpr double kAlphaFloor = 0.01;

struct AlphaMatrix {
  AlphaMode mode = AlphaMode::Standard;
  Matrix values;  // classes x inputs

  static AlphaMatrix ones(AlphaMode mode, std::size_t inputs, std::size_t classes = kNumStages) {
    return {mode, Matrix::Ones(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(inputs))};
  }
  std::size_t classes() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t inputs() const { return static_cast<std::size_t>(values.cols()); }
};

namespace detail {
inline void check_labels(const AlphaMatrix& alpha, std::span<const std::size_t> labels) {
  for (auto k : labels) {
    if (k >= alpha.classes()) fail(ErrorCode::ShapeMismatch, "label " + std::to_string(k) + " has no alpha row");
  }
}
}  // namespace detail

/// Independent Bernoulli(alpha(label_m, i)) draw for every (example, input).
inline Matrix sample_mask(const AlphaMatrix& alpha, std::span<const std::size_t> labels, Rng& rng) {
  detail::check_labels(alpha, labels);
  const auto m = static_cast<Eigen::Index>(labels.size());
  const auto d = static_cast<Eigen::Index>(alpha.inputs());
  Matrix mask(m, d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto k = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = alpha.values(k, i);
      // Entries of exactly one never consume randomness.
      mask(r, i) = a >= 1.0 ? 1.0 : (u(rng) < a ? 1.0 : 0.0);
    }
  }
  return mask;
}

/// Mask expectation: row m is alpha(label_m, :).
inline Matrix expected_mask(const AlphaMatrix& alpha, std::span<const std::size_t> labels) {
  detail::check_labels(alpha, labels);
  Matrix mask(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(alpha.inputs()));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    mask.row(static_cast<Eigen::Index>(r)) = alpha.values.row(static_cast<Eigen::Index>(labels[r]));
  }
  return mask;
}

/// t = (mu1 - mu2) / sqrt(s1^2/n1 + s2^2/n2).
inline double welch_t(double mu1, double sd1, double n1, double mu2, double sd2, double n2) {
  const double num = mu1 - mu2;
  const double den = std::sqrt(sd1 * sd1 / n1 + sd2 * sd2 / n2);
  if (!(den > 0.0)) {
    return num == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), num);
  }
  return num / den;
}

/// One-vs-all Welch statistics: entry (k, i) compares feature i of class-k
/// rows with all other rows. Group standard deviations use the n-1 divisor.
inline Matrix ttest_statistics(const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t classes = kNumStages) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    fail(ErrorCode::LengthMismatch, "one label per feature row");
  }
  const auto d = features.cols();
  std::vector<double> count(classes, 0.0);
  for (auto k : labels) {
    if (k >= classes) fail(ErrorCode::ShapeMismatch, "label out of range");
    count[k] += 1.0;
  }
  const double total = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < classes; ++k) {
    if (count[k] < 2.0 || total - count[k] < 2.0) {
      fail(ErrorCode::DegenerateClass, "class " + std::string(stage_name(stage_from_index(k))) +
                                           " needs at least two frames on each side of the split");
    }
  }
  Matrix t(static_cast<Eigen::Index>(classes), d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::vector<double> sum(classes, 0.0);
    double all_sum = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const double x = features(static_cast<Eigen::Index>(r), i);
      sum[labels[r]] += x;
      all_sum += x;
    }
    for (std::size_t k = 0; k < classes; ++k) {
      const double n1 = count[k];
      const double n2 = total - n1;
      const double mu1 = sum[k] / n1;
      const double mu2 = (all_sum - sum[k]) / n2;
      double ss1 = 0.0, ss2 = 0.0;
      for (std::size_t r = 0; r < labels.size(); ++r) {
        const double x = features(static_cast<Eigen::Index>(r), i);
        if (labels[r] == k) {
          ss1 += (x - mu1) * (x - mu1);
        } else {
          ss2 += (x - mu2) * (x - mu2);
        }
      }
      t(static_cast<Eigen::Index>(k), i) =
          welch_t(mu1, std::sqrt(ss1 / (n1 - 1.0)), n1, mu2, std::sqrt(ss2 / (n2 - 1.0)), n2);
    }
  }
  return t;
}

/// Fixed-mode alpha: |t| normalised by each class's largest |t|, floored at 0.01.
inline AlphaMatrix alpha_from_statistics(const Matrix& t) {
  AlphaMatrix a{AlphaMode::Fixed, Matrix(t.rows(), t.cols())};
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    double peak = 0.0;
    bool infinite = false;
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      const double v = std::abs(t(k, i));
      if (std::isinf(v)) infinite = true;
      else peak = std::max(peak, v);
    }
    for (Eigen::Index i = 0; i < t.cols(); ++i) {
      const double v = std::abs(t(k, i));
      double r = 0.0;
      if (infinite) r = std::isinf(v) ? 1.0 : 0.0;
      else if (peak > 0.0) r = v / peak;
      a.values(k, i) = std::max(r, kAlphaFloor);
    }
  }
  return a;
}

inline AlphaMatrix ttest_alpha(const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t classes = kNumStages) {
  return alpha_from_statistics(ttest_statistics(features, labels, classes));
}

/// One gradient step per (class, input) on
///   1/2 * e(k, i) * alpha + gamma * (-ln alpha),
/// where e(k, i) is the mean squared reconstruction error of input i over
/// the class-k rows of the batch. Classes absent from the batch are left
/// untouched. Results are clamped to [0.01, 1].
inline AlphaMatrix adaptive_update(const AlphaMatrix& alpha, const Matrix& sq_errors,
                                   std::span<const std::size_t> labels, double gamma, double rate) {
  detail::check_labels(alpha, labels);
  if (static_cast<std::size_t>(sq_errors.rows()) != labels.size() ||
      static_cast<std::size_t>(sq_errors.cols()) != alpha.inputs()) {
    fail(ErrorCode::ShapeMismatch, "squared errors must be examples x inputs");
  }
  AlphaMatrix next = alpha;
  if (alpha.mode != AlphaMode::Adaptive) return next;
  const auto d = static_cast<Eigen::Index>(alpha.inputs());
  Matrix err_sum = Matrix::Zero(static_cast<Eigen::Index>(alpha.classes()), d);
  std::vector<double> count(alpha.classes(), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    err_sum.row(static_cast<Eigen::Index>(labels[r])) += sq_errors.row(static_cast<Eigen::Index>(r));
    count[labels[r]] += 1.0;
  }
  for (std::size_t k = 0; k < alpha.classes(); ++k) {
    if (count[k] == 0.0) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double e = err_sum(kk, i) / count[k];
      const double a = alpha.values(kk, i);
      const double grad = 0.5 * e - gamma / a;
      next.values(kk, i) = std::clamp(a - rate * grad, kAlphaFloor, 1.0);
    }
  }
  return next;
}

}  // namespace sleepsae
