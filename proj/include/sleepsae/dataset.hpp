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

// Training examples and mini-batch assembly.
//
// An example is the frame of one recording at second t together with its n
// predecessors. It is eligible when t >= n, the frame carries a scored label,
// and frames t-n .. t all have valid features. Eligible examples are grouped
// into segments (one per 30 s scoring epoch); a mini-batch draws a fixed
// number of segments and uses all of their frames.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "sleepsae/autoencoder.hpp"
#include "sleepsae/features.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

/// A normalised recording ready for training.
struct Sequence {
  std::string id;
  Matrix frames;  // seconds x features
  std::vector<StageLabel> labels;
  std::vector<std::uint8_t> valid;

  std::size_t length() const { return static_cast<std::size_t>(frames.rows()); }
};

inline Sequence to_sequence(const FeatureMatrix& m) {
  Sequence s;
  s.id = m.recording_id;
  s.frames.resize(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      s.frames(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
    }
  }
  s.labels = m.labels;
  s.valid = m.valid;
  return s;
}

struct ExampleRef {
  std::uint32_t sequence = 0;
  std::uint32_t t = 0;
};

inline bool has_history(const Sequence& s, std::size_t t, std::size_t order) {
  if (t < order) return false;
  for (std::size_t k = 0; k <= order; ++k) {
    if (!s.valid[t - k]) return false;
  }
  return true;
}

inline std::vector<ExampleRef> eligible_examples(const std::vector<Sequence>& data, std::size_t order) {
  std::vector<ExampleRef> out;
  for (std::size_t s = 0; s < data.size(); ++s) {
    for (std::size_t t = 0; t < data[s].length(); ++t) {
      if (is_scored(data[s].labels[t]) && has_history(data[s], t, order)) {
        out.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t)});
      }
    }
  }
  return out;
}

struct Segment {
  std::size_t label = 0;  // stage index of the segment's first frame
  std::vector<ExampleRef> examples;
};

inline std::vector<Segment> build_segments(const std::vector<Sequence>& data, std::size_t order,
                                           std::size_t segment_frames) {
  std::vector<Segment> out;
  std::map<std::pair<std::uint32_t, std::size_t>, std::size_t> index;
  for (const auto& ex : eligible_examples(data, order)) {
    const auto key = std::make_pair(ex.sequence, ex.t / segment_frames);
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) {
      Segment seg;
      seg.label = stage_index(data[ex.sequence].labels[ex.t]);
      out.push_back(std::move(seg));
    }
    out[it->second].examples.push_back(ex);
  }
  return out;
}

inline Batch gather_batch(const std::vector<Sequence>& data, std::span<const ExampleRef> examples,
                          std::size_t order) {
  const auto m = static_cast<Eigen::Index>(examples.size());
  const auto d = data.empty() ? Eigen::Index{0} : data.front().frames.cols();
  Batch b;
  b.inputs.resize(m, d);
  b.history.assign(order, Matrix(m, d));
  b.labels.resize(examples.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& ex = examples[static_cast<std::size_t>(r)];
    const auto& s = data[ex.sequence];
    b.inputs.row(r) = s.frames.row(ex.t);
    for (std::size_t k = 1; k <= order; ++k) b.history[k - 1].row(r) = s.frames.row(ex.t - static_cast<Eigen::Index>(k));
    b.labels[static_cast<std::size_t>(r)] = stage_index(s.labels[ex.t]);
  }
  return b;
}

/// Draws mini-batches of segments. Each batch first takes one random segment
/// of every class that has any, then fills the remaining slots uniformly from
/// all segments. The number of batches per epoch covers the segment count.
class SegmentSampler {
 public:
  SegmentSampler(const std::vector<Segment>& segments, std::size_t batch_segments)
      : segments_(segments), batch_segments_(std::max<std::size_t>(1, batch_segments)) {
    by_class_.resize(kNumStages);
    for (std::size_t i = 0; i < segments_.size(); ++i) by_class_[segments_[i].label].push_back(i);
  }

  std::size_t batches_per_epoch() const {
    return std::max<std::size_t>(1, (segments_.size() + batch_segments_ - 1) / batch_segments_);
  }

  std::vector<ExampleRef> next_batch(Rng& rng) const {
    std::vector<std::size_t> chosen;
    for (const auto& ids : by_class_) {
      if (ids.empty() || chosen.size() >= batch_segments_) continue;
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      chosen.push_back(ids[pick(rng)]);
    }
    std::uniform_int_distribution<std::size_t> any(0, segments_.size() - 1);
    while (chosen.size() < batch_segments_) chosen.push_back(any(rng));
    std::vector<ExampleRef> out;
    for (auto i : chosen) out.insert(out.end(), segments_[i].examples.begin(), segments_[i].examples.end());
    return out;
  }

 private:
  const std::vector<Segment>& segments_;
  std::size_t batch_segments_;
  std::vector<std::vector<std::size_t>> by_class_;
};

}  // namespace sleepsae
