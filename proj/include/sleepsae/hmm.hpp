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

// Discrete hidden Markov model over sleep stages. Hidden states are the true
// stages, observations the classifier's per-second labels.

#pragma once

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

struct HmmModel {
  Matrix transition;  // K x K, row = from
  Matrix emission;    // K x K, row = true state, column = observed label
  Vector initial;     // K

  std::size_t states() const { return static_cast<std::size_t>(initial.size()); }
};

inline constexpr double kHmmSmoothing = 1e-6;
inline constexpr std::size_t kNoLabel = static_cast<std::size_t>(-1);

enum class TransitionSource { TrueLabels, PredictedLabels };

inline std::string_view to_string(TransitionSource s) {
  return s == TransitionSource::TrueLabels ? "true" : "predicted";
}

inline TransitionSource parse_transition_source(std::string_view s) {
  if (s == "true") return TransitionSource::TrueLabels;
  if (s == "predicted") return TransitionSource::PredictedLabels;
  fail(ErrorCode::InvalidConfig, "unknown hmm transition source '" + std::string(s) + "'");
}

namespace detail {
inline void normalize_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) /= m.row(r).sum();
}
}  // namespace detail

/// Count-based estimate over aligned sequences of state indices. Entries equal
/// to kNoLabel (unscored) are skipped, along with any transition touching
/// them. Every count is incremented by 1e-6 before normalising.
inline HmmModel fit_hmm(const std::vector<std::vector<std::size_t>>& predicted,
                        const std::vector<std::vector<std::size_t>>& truth, std::size_t states = kNumStages,
                        TransitionSource source = TransitionSource::TrueLabels) {
  if (predicted.size() != truth.size()) fail(ErrorCode::LengthMismatch, "one predicted sequence per true sequence");
  const auto k = static_cast<Eigen::Index>(states);
  HmmModel h{Matrix::Constant(k, k, kHmmSmoothing), Matrix::Constant(k, k, kHmmSmoothing),
             Vector::Constant(k, kHmmSmoothing)};
  auto in_range = [&](std::size_t v) { return v != kNoLabel && v < states; };
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const auto& tru = truth[s];
    const auto& pred = predicted[s];
    if (tru.size() != pred.size()) {
      fail(ErrorCode::LengthMismatch, "sequence " + std::to_string(s) + ": " + std::to_string(pred.size()) +
                                          " predictions for " + std::to_string(tru.size()) + " labels");
    }
    const auto& chain = source == TransitionSource::TrueLabels ? tru : pred;
    for (std::size_t t = 0; t < tru.size(); ++t) {
      if (!in_range(tru[t])) continue;
      h.initial[static_cast<Eigen::Index>(tru[t])] += 1.0;
      if (in_range(pred[t])) h.emission(static_cast<Eigen::Index>(tru[t]), static_cast<Eigen::Index>(pred[t])) += 1.0;
      if (t + 1 < tru.size() && in_range(tru[t + 1]) && in_range(chain[t]) && in_range(chain[t + 1])) {
        h.transition(static_cast<Eigen::Index>(chain[t]), static_cast<Eigen::Index>(chain[t + 1])) += 1.0;
      }
    }
  }
  detail::normalize_rows(h.transition);
  detail::normalize_rows(h.emission);
  h.initial /= h.initial.sum();
  return h;
}

/// Log-space Viterbi decoding given per-step log emission scores
/// (steps x states). Ties go to the lower state index.
inline std::vector<std::size_t> viterbi_scores(const HmmModel& h, const Matrix& log_emission) {
  const auto k = static_cast<Eigen::Index>(h.states());
  const auto n = log_emission.rows();
  if (n == 0) return {};
  if (log_emission.cols() != k) fail(ErrorCode::ShapeMismatch, "emission scores must have one column per state");
  const Matrix log_t = h.transition.array().log().matrix();
  Matrix delta(n, k);
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> back(n, k);
  for (Eigen::Index j = 0; j < k; ++j) delta(0, j) = std::log(h.initial[j]) + log_emission(0, j);
  for (Eigen::Index t = 1; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::Index arg = 0;
      double best = delta(t - 1, 0) + log_t(0, j);
      for (Eigen::Index i = 1; i < k; ++i) {
        const double v = delta(t - 1, i) + log_t(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(t, j) = best + log_emission(t, j);
      back(t, j) = arg;
    }
  }
  std::vector<std::size_t> path(static_cast<std::size_t>(n));
  Eigen::Index cur = 0;
  for (Eigen::Index j = 1; j < k; ++j) {
    if (delta(n - 1, j) > delta(n - 1, cur)) cur = j;
  }
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = static_cast<std::size_t>(cur);
    if (t > 0) cur = back(t, cur);
  }
  return path;
}

/// MAP state path for hard label observations.
inline std::vector<std::size_t> viterbi(const HmmModel& h, const std::vector<std::size_t>& observations) {
  const auto k = static_cast<Eigen::Index>(h.states());
  Matrix le(static_cast<Eigen::Index>(observations.size()), k);
  for (std::size_t t = 0; t < observations.size(); ++t) {
    if (observations[t] >= h.states()) fail(ErrorCode::ShapeMismatch, "observation outside the model");
    for (Eigen::Index j = 0; j < k; ++j) {
      le(static_cast<Eigen::Index>(t), j) = std::log(h.emission(j, static_cast<Eigen::Index>(observations[t])));
    }
  }
  return viterbi_scores(h, le);
}

/// Variant with soft observations: the emission score of state j at step t is
/// ln sum_o E(j, o) * posterior(t, o).
inline std::vector<std::size_t> viterbi_posterior(const HmmModel& h, const Matrix& posterior) {
  if (posterior.cols() != static_cast<Eigen::Index>(h.states())) {
    fail(ErrorCode::ShapeMismatch, "posterior must have one column per state");
  }
  const Matrix le = (posterior * h.emission.transpose()).array().log().matrix();
  return viterbi_scores(h, le);
}

/// Joint log probability of a state path and hard observations.
inline double path_log_prob(const HmmModel& h, const std::vector<std::size_t>& states,
                            const std::vector<std::size_t>& observations) {
  if (states.empty()) return 0.0;
  double lp = std::log(h.initial[static_cast<Eigen::Index>(states[0])]);
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto s = static_cast<Eigen::Index>(states[t]);
    if (t > 0) lp += std::log(h.transition(static_cast<Eigen::Index>(states[t - 1]), s));
    lp += std::log(h.emission(s, static_cast<Eigen::Index>(observations[t])));
  }
  return lp;
}

}  // namespace sleepsae
