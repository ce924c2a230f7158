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

// Generators for tests, fixtures and benchmarks.
//
// synthetic_features: feature matrices where each stage shifts the mean of
//   its own few columns and the remaining columns are driven by shared latent
//   factors unrelated to the stage.
// synthetic_recording: raw four-channel polysomnogram with stage-dependent
//   rhythms, suitable for writing out as EDF.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/config.hpp"
#include "sleepsae/edf.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/features.hpp"
#include "sleepsae/recording.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

/// Stage sequence of `epochs` scoring epochs from a sticky Markov chain.
inline std::vector<StageLabel> markov_stages(std::size_t epochs, double stay, Rng& rng) {
  std::vector<StageLabel> out(epochs);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, kNumStages - 1);
  std::uniform_int_distribution<std::size_t> other(1, kNumStages - 1);
  std::size_t cur = any(rng);
  for (auto& s : out) {
    s = stage_from_index(cur);
    if (u(rng) >= stay) cur = (cur + other(rng)) % kNumStages;
  }
  return out;
}

struct SyntheticSpec {
  std::size_t recordings = 10;
  std::size_t frames = 2000;       // seconds per recording
  std::size_t informative = 3;     // columns per stage
  double shift = 1.0;              // mean offset of a stage's own columns
  std::size_t noise_factors = 2;   // latent factors behind the other columns
  double factor_scale = 1.0;       // loading scale of those factors
  double residual = 0.3;           // independent noise on factor-driven columns
  double stay = 0.8;               // per-epoch probability of keeping the stage
  double epoch_s = 30.0;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  std::vector<FeatureMatrix> recordings;
  AlphaMatrix oracle_alpha;  // 1 on each stage's own columns, 0.01 elsewhere
};

/// Columns [k * informative, (k + 1) * informative) belong to stage index k.
inline AlphaMatrix oracle_alpha(std::size_t informative, std::size_t inputs = kNumFeatures) {
  AlphaMatrix a{AlphaMode::Fixed, Matrix::Constant(kNumStages, static_cast<Eigen::Index>(inputs), kAlphaFloor)};
  for (std::size_t k = 0; k < kNumStages; ++k) {
    for (std::size_t j = 0; j < informative; ++j) {
      a.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k * informative + j)) = 1.0;
    }
  }
  return a;
}

inline SyntheticDataset synthetic_features(const SyntheticSpec& spec) {
  const std::size_t n_inf = kNumStages * spec.informative;
  if (n_inf > kNumFeatures) fail(ErrorCode::InvalidConfig, "too many informative columns");
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Fixed loadings shared by every recording.
  Matrix loading = Matrix::Zero(static_cast<Eigen::Index>(kNumFeatures), static_cast<Eigen::Index>(spec.noise_factors));
  const double scale = spec.noise_factors ? spec.factor_scale / std::sqrt(static_cast<double>(spec.noise_factors)) : 0.0;
  for (std::size_t c = n_inf; c < kNumFeatures; ++c) {
    for (std::size_t f = 0; f < spec.noise_factors; ++f) {
      loading(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f)) = scale * gauss(rng);
    }
  }

  SyntheticDataset out;
  out.oracle_alpha = oracle_alpha(spec.informative);
  const auto epoch_frames = static_cast<std::size_t>(spec.epoch_s);
  for (std::size_t r = 0; r < spec.recordings; ++r) {
    auto m = FeatureMatrix::zeros(spec.frames);
    m.recording_id = "syn" + std::string(r < 10 ? "0" : "") + std::to_string(r);
    const auto stages = markov_stages((spec.frames + epoch_frames - 1) / epoch_frames, spec.stay, rng);
    std::vector<double> g(spec.noise_factors);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const auto label = stages[t / epoch_frames];
      const std::size_t k = stage_index(label);
      m.labels[t] = label;
      m.valid[t] = 1;
      for (auto& x : g) x = gauss(rng);
      for (std::size_t c = 0; c < kNumFeatures; ++c) {
        double v;
        if (c < n_inf) {
          v = (c / spec.informative == k ? spec.shift : 0.0) + gauss(rng);
        } else {
          v = spec.residual * gauss(rng);
          for (std::size_t f = 0; f < spec.noise_factors; ++f) {
            v += loading(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f)) * g[f];
          }
        }
        m.at(t, c) = v;
      }
    }
    out.recordings.push_back(std::move(m));
  }
  return out;
}

/// Four channels named after the default montage: EEG at `eeg_fs`, both EOG
/// channels and the chin EMG at `other_fs`. Amplitudes are in microvolts and
/// include 50 Hz mains interference.
inline Recording synthetic_recording(std::size_t seconds, std::uint64_t seed, double eeg_fs = 128.0,
                                     double other_fs = 64.0, const std::string& id = "synthetic") {
  Rng rng(seed);
  Recording rec;
  rec.subject_id = id;
  rec.epoch_s = 30.0;
  rec.stages = markov_stages((seconds + 29) / 30, 0.7, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  auto stage_at = [&](double t) { return rec.stages[std::min(rec.stages.size() - 1, static_cast<std::size_t>(t / 30.0))]; };
  auto make = [&](const std::string& name, double fs) {
    Channel ch{name, fs, std::vector<double>(static_cast<std::size_t>(std::llround(fs * static_cast<double>(seconds))))};
    return ch;
  };

  Channel eeg = make(kDefaultChannels[0], eeg_fs);
  double brown = 0.0;
  for (std::size_t i = 0; i < eeg.samples.size(); ++i) {
    const double t = static_cast<double>(i) / eeg_fs;
    brown = 0.98 * brown + gauss(rng);
    double v = 2.0 * brown + 3.0 * gauss(rng) + 5.0 * std::sin(two_pi * 50.0 * t);
    switch (stage_at(t)) {
      case StageLabel::W: v += 20.0 * std::sin(two_pi * 10.0 * t); break;
      case StageLabel::S1: v += 12.0 * std::sin(two_pi * 6.0 * t) + 6.0 * std::sin(two_pi * 9.0 * t); break;
      case StageLabel::S2: v += 15.0 * std::sin(two_pi * 13.0 * t) * std::max(0.0, std::sin(two_pi * 0.5 * t)); break;
      case StageLabel::SWS: v += 60.0 * std::sin(two_pi * 1.5 * t); break;
      case StageLabel::REM: v += 15.0 * std::sin(two_pi * 6.5 * t); break;
      case StageLabel::Unscored: break;
    }
    eeg.samples[i] = v;
  }

  Channel eog1 = make(kDefaultChannels[1], other_fs);
  Channel eog2 = make(kDefaultChannels[2], other_fs);
  Channel emg = make(kDefaultChannels[3], other_fs);
  double drift = 0.0;
  for (std::size_t i = 0; i < eog1.samples.size(); ++i) {
    const double t = static_cast<double>(i) / other_fs;
    const auto s = stage_at(t);
    drift = 0.99 * drift + gauss(rng);
    const double eye = (s == StageLabel::REM || s == StageLabel::W) ? 40.0 * std::sin(two_pi * 0.7 * t) : 0.0;
    eog1.samples[i] = eye + 2.0 * drift + 4.0 * gauss(rng);
    eog2.samples[i] = -eye + 2.0 * drift + 4.0 * gauss(rng);
    const double tone = s == StageLabel::W ? 20.0 : (s == StageLabel::REM ? 2.0 : 8.0);
    emg.samples[i] = tone * gauss(rng) + 3.0 * std::sin(two_pi * 25.0 * t);
  }
  rec.channels = {std::move(eeg), std::move(eog1), std::move(eog2), std::move(emg)};
  return rec;
}

/// EDF file holding every channel of `rec` in one-second records, quantised
/// over the full 16-bit range between each channel's extremes.
inline Bytes recording_to_edf(const Recording& rec) {
  if (rec.channels.empty()) fail(ErrorCode::ShapeMismatch, "recording has no channels");
  const double seconds = rec.channels.front().duration();
  EdfHeader h;
  h.patient_id = rec.subject_id;
  h.recording_id = "synthetic";
  h.n_records = static_cast<long>(std::floor(seconds));
  h.record_duration = 1.0;
  h.header_bytes = static_cast<long>(256 * (1 + rec.channels.size()));
  std::vector<std::vector<std::int16_t>> digital;
  for (const auto& ch : rec.channels) {
    const double spr = ch.fs * h.record_duration;
    if (std::abs(spr - std::round(spr)) > 1e-9) fail(ErrorCode::NonIntegerRatio, "sample rate must be integral");
    EdfSignalHeader s;
    s.label = ch.name;
    s.transducer = "synthetic";
    s.physical_dimension = "uV";
    const auto [lo, hi] = std::minmax_element(ch.samples.begin(), ch.samples.end());
    // Round outward to values that fit the 8-character field.
    s.physical_min = std::floor(*lo) - 1.0;
    s.physical_max = std::ceil(*hi) + 1.0;
    s.digital_min = -32768;
    s.digital_max = 32767;
    s.samples_per_record = std::lround(spr);
    const double scale = (s.digital_max - s.digital_min) / (s.physical_max - s.physical_min);
    std::vector<std::int16_t> d(static_cast<std::size_t>(h.n_records * s.samples_per_record));
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double q = std::round((ch.samples[i] - s.physical_min) * scale + s.digital_min);
      d[i] = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    }
    h.signals.push_back(std::move(s));
    digital.push_back(std::move(d));
  }
  return write_edf(h, digital);
}

}  // namespace sleepsae
