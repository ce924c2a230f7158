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

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sleepsae/error.hpp"
#include "sleepsae/features.hpp"

namespace sleepsae {

enum class TransformKind {
  SignedLog,  // sign(x) * ln(1 + |x|)
  Identity,
};

inline std::string_view to_string(TransformKind t) {
  return t == TransformKind::SignedLog ? "signed_log" : "identity";
}

inline TransformKind parse_transform(std::string_view s) {
  if (s == "signed_log") return TransformKind::SignedLog;
  if (s == "identity") return TransformKind::Identity;
  fail(ErrorCode::InvalidConfig, "unknown transform '" + std::string(s) + "'");
}

inline double compress(double x, TransformKind t) {
  if (t == TransformKind::Identity) return x;
  return std::copysign(std::log1p(std::abs(x)), x);
}

/// Training-set statistics of the compressed features.
struct NormStats {
  TransformKind transform = TransformKind::SignedLog;
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> std{};
};

/// Fits on the usable rows (valid features, scored label) of every matrix.
inline NormStats fit_norm_stats(const std::vector<const FeatureMatrix*>& train,
                                TransformKind transform = TransformKind::SignedLog) {
  NormStats st;
  st.transform = transform;
  std::array<double, kNumFeatures> sum{};
  std::size_t n = 0;
  for (const auto* m : train) {
    for (std::size_t r = 0; r < m->rows; ++r) {
      if (!m->usable(r)) continue;
      for (std::size_t c = 0; c < kNumFeatures; ++c) sum[c] += compress(m->at(r, c), transform);
      ++n;
    }
  }
  if (n < 2) fail(ErrorCode::DegenerateFeature, "need at least two training frames to fit normalisation");
  for (std::size_t c = 0; c < kNumFeatures; ++c) st.mean[c] = sum[c] / static_cast<double>(n);
  std::array<double, kNumFeatures> ss{};
  for (const auto* m : train) {
    for (std::size_t r = 0; r < m->rows; ++r) {
      if (!m->usable(r)) continue;
      for (std::size_t c = 0; c < kNumFeatures; ++c) {
        const double d = compress(m->at(r, c), transform) - st.mean[c];
        ss[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    st.std[c] = std::sqrt(ss[c] / static_cast<double>(n));
    if (!(st.std[c] > 1e-12)) {
      fail(ErrorCode::DegenerateFeature, "feature '" + feature_names()[c] + "' has zero training variance");
    }
  }
  return st;
}

/// Compress then z-score every row (including unusable ones, which keep
/// their flags).
inline FeatureMatrix apply_transform(const FeatureMatrix& m, const NormStats& st) {
  FeatureMatrix out = m;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      out.at(r, c) = (compress(m.at(r, c), st.transform) - st.mean[c]) / st.std[c];
    }
  }
  return out;
}

inline std::pair<FeatureMatrix, NormStats> fit_transform(const FeatureMatrix& train,
                                                         TransformKind transform = TransformKind::SignedLog) {
  auto st = fit_norm_stats({&train}, transform);
  return {apply_transform(train, st), st};
}

}  // namespace sleepsae
