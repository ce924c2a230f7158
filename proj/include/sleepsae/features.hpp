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

// Per-second PSG features.
//
// Each one-second segment of the conditioned EEG, EOG1, EOG2 and EMG channels
// yields a 28-vector in this fixed order:
//
//    0- 4  EEG  relative power  delta theta alpha beta gamma
//    5- 9  EOG1 relative power  delta theta alpha beta gamma
//   10-14  EMG  relative power  delta theta alpha beta gamma
//   15     EMG  median |x|
//   16     EOG1 standard deviation
//   17     EOG1/EOG2 correlation
//   18-20  energy entropy       EEG EOG1 EMG
//   21-23  kurtosis             EEG EOG1 EMG
//   24-26  spectral mean        EEG EOG1 EMG
//   27     EEG fractal exponent

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/error.hpp"
#include "sleepsae/recording.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

struct Band {
  std::string_view name;
  double lo;
  double hi;

  double center() const { return (lo + hi) / 2.0; }
};

inline constexpr std::array<Band, 5> kBands{{
    {"delta", 0.5, 4.0},
    {"theta", 4.0, 8.0},
    {"alpha", 8.0, 13.0},
    {"beta", 13.0, 20.0},
    {"gamma", 20.0, 32.0},
}};

inline constexpr std::size_t kNumFeatures = 28;

inline const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = [] {
    std::array<std::string, kNumFeatures> n;
    std::size_t i = 0;
    for (const char* ch : {"eeg", "eog1", "emg"}) {
      for (const auto& b : kBands) n[i++] = std::string(ch) + "_" + std::string(b.name);
    }
    n[i++] = "emg_median";
    n[i++] = "eog1_std";
    n[i++] = "eog_corr";
    for (const char* ch : {"eeg", "eog1", "emg"}) n[i++] = std::string(ch) + "_entropy";
    for (const char* ch : {"eeg", "eog1", "emg"}) n[i++] = std::string(ch) + "_kurtosis";
    for (const char* ch : {"eeg", "eog1", "emg"}) n[i++] = std::string(ch) + "_spectral_mean";
    n[i++] = "eeg_fractal_exponent";
    return n;
  }();
  return names;
}

/// A feature value together with a flag raised when the input was degenerate
/// and a fallback value was substituted.
struct Measurement {
  double value = 0.0;
  bool flagged = false;
};

/// Hamming-windowed periodogram of the mean-removed segment, bins 0..N/2.
/// Bin k sits at k * fs / N Hz. Scaling is arbitrary (only ratios and slopes
/// are used downstream).
inline std::vector<double> periodogram(std::span<const double> seg) {
  const std::size_t n = seg.size();
  std::vector<double> power(n / 2 + 1, 0.0);
  if (n < 2) return power;
  const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(n);
  // Window and twiddle tables are cached per length; frames are short and
  // numerous.
  thread_local std::size_t table_n = 0;
  thread_local std::vector<double> window, cos_table, sin_table;
  if (table_n != n) {
    window.resize(n);
    cos_table.resize(n);
    sin_table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(n - 1));
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      cos_table[i] = std::cos(phase);
      sin_table[i] = std::sin(phase);
    }
    table_n = n;
  }
  std::vector<double> xw(n);
  for (std::size_t i = 0; i < n; ++i) xw[i] = (seg[i] - mean) * window[i];
  for (std::size_t k = 0; k < power.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (k * i) % n;
      re += xw[i] * cos_table[j];
      im -= xw[i] * sin_table[j];
    }
    power[k] = re * re + im * im;
  }
  return power;
}

struct RelativePowers {
  std::array<double, 5> values{};
  bool zero_power = false;
};

/// Band powers sum the periodogram bins whose centre frequency lies in
/// [lo, hi), normalised by the total over the five bands.
inline RelativePowers relative_powers(std::span<const double> seg, double fs) {
  const auto p = periodogram(seg);
  const double df = fs / static_cast<double>(seg.size());
  RelativePowers out;
  double total = 0.0;
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * df;
      if (f >= kBands[b].lo && f < kBands[b].hi) sum += p[k];
    }
    out.values[b] = sum;
    total += sum;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    out.values.fill(1.0 / 5.0);
    out.zero_power = true;
    return out;
  }
  for (auto& v : out.values) v /= total;
  return out;
}

inline Measurement relative_power(std::span<const double> seg, double fs, const Band& band) {
  const auto rel = relative_powers(seg, fs);
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    if (kBands[b].name == band.name) return {rel.values[b], rel.zero_power};
  }
  fail(ErrorCode::InvalidConfig, "unknown band '" + std::string(band.name) + "'");
}

inline double median_abs(std::span<const double> seg) {
  if (seg.empty()) return 0.0;
  std::vector<double> a(seg.size());
  std::transform(seg.begin(), seg.end(), a.begin(), [](double x) { return std::abs(x); });
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  const double upper = a[mid];
  if (a.size() % 2 == 1) return upper;
  const double lower = *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double mean_of(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population standard deviation.
inline double std_dev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mu = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Pearson correlation. Zero variance in either input yields 0 (flagged).
inline Measurement eog_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, "correlation needs equal-length segments");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

/// Shannon entropy of the per-sample energy distribution x_i^2 / sum x^2.
/// Bounded by ln(N).
inline Measurement energy_entropy(std::span<const double> seg) {
  double energy = 0.0;
  for (double x : seg) energy += x * x;
  if (!(energy > 0.0)) return {0.0, true};
  double h = 0.0;
  for (double x : seg) {
    const double p = x * x / energy;
    if (p > 0.0) h -= p * std::log(p);
  }
  return {std::max(h, 0.0), false};
}

inline std::optional<double> try_kurtosis(std::span<const double> seg) {
  if (seg.empty()) return std::nullopt;
  const double mu = mean_of(seg);
  double m2 = 0.0, m4 = 0.0;
  for (double x : seg) {
    const double d2 = (x - mu) * (x - mu);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(seg.size());
  m4 /= static_cast<double>(seg.size());
  if (!(m2 > 0.0)) return std::nullopt;
  return m4 / (m2 * m2);
}

inline double kurtosis(std::span<const double> seg) {
  auto k = try_kurtosis(seg);
  if (!k) fail(ErrorCode::ZeroVariance, "kurtosis of a constant segment");
  return *k;
}

inline double spectral_mean(const std::array<double, 5>& relative) {
  double s = 0.0;
  for (std::size_t b = 0; b < kBands.size(); ++b) s += relative[b] * kBands[b].center();
  return s / 5.0;
}

/// Negative slope of a least-squares line through (ln f, ln P(f)) over the
/// periodogram bins in [0.5, 32] Hz.
inline std::optional<double> try_fractal_exponent(std::span<const double> seg, double fs) {
  const auto p = periodogram(seg);
  const double df = fs / static_cast<double>(seg.size());
  double pmax = 0.0;
  for (double v : p) pmax = std::max(pmax, v);
  if (!(pmax > 0.0) || !std::isfinite(pmax)) return std::nullopt;
  const double floor = pmax * 1e-12;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < 0.5 || f > 32.0) continue;
    const double x = std::log(f);
    const double y = std::log(std::max(p[k], floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::nullopt;
  const double dm = static_cast<double>(m);
  const double slope = (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
  return -slope;
}

inline double fractal_exponent(std::span<const double> seg, double fs) {
  if (seg.size() < 64) fail(ErrorCode::ShapeMismatch, "fractal exponent needs at least 64 samples");
  auto v = try_fractal_exponent(seg, fs);
  if (!v) fail(ErrorCode::ZeroPower, "fractal exponent of a zero-power segment");
  return *v;
}

/// One row per whole second of the recording. Values are row-major.
struct FeatureMatrix {
  std::string recording_id;
  std::size_t rows = 0;
  std::vector<double> values;
  std::vector<StageLabel> labels;
  std::vector<std::uint8_t> valid;

  static FeatureMatrix zeros(std::size_t rows) {
    FeatureMatrix m;
    m.rows = rows;
    m.values.assign(rows * kNumFeatures, 0.0);
    m.labels.assign(rows, StageLabel::Unscored);
    m.valid.assign(rows, 1);
    return m;
  }

  static constexpr std::size_t cols() { return kNumFeatures; }
  double& at(std::size_t r, std::size_t c) { return values[r * kNumFeatures + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * kNumFeatures + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * kNumFeatures, kNumFeatures);
  }
  std::span<double> row(std::size_t r) { return std::span<double>(values).subspan(r * kNumFeatures, kNumFeatures); }

  /// Rows usable for training and scoring: valid features and a scored label.
  bool usable(std::size_t r) const { return valid[r] != 0 && is_scored(labels[r]); }
};

/// Result of extracting one second. `flagged` is set when any sub-feature
/// hit a degenerate input.
struct FeatureFrame {
  std::array<double, kNumFeatures> values{};
  bool flagged = false;
};

inline FeatureFrame compute_frame(std::span<const double> eeg, std::span<const double> eog1,
                                  std::span<const double> eog2, std::span<const double> emg, double fs) {
  FeatureFrame f;
  std::size_t i = 0;
  std::array<std::array<double, 5>, 3> rel{};
  const std::array<std::span<const double>, 3> chans{eeg, eog1, emg};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto r = relative_powers(chans[c], fs);
    rel[c] = r.values;
    f.flagged |= r.zero_power;
    for (double v : r.values) f.values[i++] = v;
  }
  f.values[i++] = median_abs(emg);
  f.values[i++] = std_dev(eog1);
  const auto corr = eog_corr(eog1, eog2);
  f.flagged |= corr.flagged;
  f.values[i++] = corr.value;
  for (const auto& ch : chans) {
    const auto h = energy_entropy(ch);
    f.flagged |= h.flagged;
    f.values[i++] = h.value;
  }
  for (const auto& ch : chans) {
    const auto k = try_kurtosis(ch);
    f.flagged |= !k.has_value();
    f.values[i++] = k.value_or(0.0);
  }
  for (const auto& r : rel) f.values[i++] = spectral_mean(r);
  const auto fe = try_fractal_exponent(eeg, fs);
  f.flagged |= !fe.has_value();
  f.values[i++] = fe.value_or(0.0);
  return f;
}

/// Extracts one frame per whole second from a conditioned recording whose
/// channels are ordered EEG, EOG1, EOG2, EMG and share one sample rate. Each
/// frame inherits the label of the scoring epoch containing it; seconds past
/// the end of the hypnogram are Unscored.
inline FeatureMatrix extract_features(const Recording& rec) {
  if (rec.channels.size() != 4) {
    fail(ErrorCode::ShapeMismatch, "expected channels EEG, EOG1, EOG2, EMG; got " +
                                       std::to_string(rec.channels.size()));
  }
  const double fs = rec.channels.front().fs;
  for (const auto& c : rec.channels) {
    if (c.fs != fs) fail(ErrorCode::ShapeMismatch, "channels must share one sample rate before extraction");
  }
  const auto seg = static_cast<std::size_t>(std::llround(fs));
  if (seg < 2 || std::abs(fs - static_cast<double>(seg)) > 1e-9) {
    fail(ErrorCode::ShapeMismatch, "sample rate must be a whole number of samples per second");
  }
  std::size_t n = rec.channels.front().samples.size();
  for (const auto& c : rec.channels) n = std::min(n, c.samples.size());
  const std::size_t frames = n / seg;

  auto out = FeatureMatrix::zeros(frames);
  out.recording_id = rec.subject_id;
  for (std::size_t t = 0; t < frames; ++t) {
    auto window = [&](std::size_t c) { return std::span<const double>(rec.channels[c].samples).subspan(t * seg, seg); };
    const auto frame = compute_frame(window(0), window(1), window(2), window(3), fs);
    std::copy(frame.values.begin(), frame.values.end(), out.row(t).begin());
    out.valid[t] = frame.flagged ? 0 : 1;
    const auto epoch = static_cast<std::size_t>(static_cast<double>(t) / rec.epoch_s);
    out.labels[t] = epoch < rec.stages.size() ? rec.stages[epoch] : StageLabel::Unscored;
  }
  return out;
}

}  // namespace sleepsae
