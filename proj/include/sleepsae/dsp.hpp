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

// Signal conditioning: 50 Hz notch, Butterworth band-pass, decimation.
//
// Filters are cascades of second-order sections. By default they are run
// forward and backward (zero phase) so that one-second feature windows stay
// aligned with the scoring epochs.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sleepsae/error.hpp"
#include "sleepsae/recording.hpp"

namespace sleepsae {

/// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using SosFilter = std::vector<Biquad>;

enum class FilterKind { Notch, Bandpass, Highpass };

struct FilterSpec {
  FilterKind kind = FilterKind::Bandpass;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double f_center = 0.0;
  int order = 4;
  double fs = 0.0;
  double quality = 35.0;

  void validate() const {
    const double nyq = fs / 2;
    auto bad = [&](const std::string& what) {
      fail(ErrorCode::NyquistViolation, what + " (fs = " + std::to_string(fs) + " Hz)");
    };
    if (!(fs > 0)) bad("sample rate must be positive");
    switch (kind) {
      case FilterKind::Notch:
        if (!(f_center > 0 && f_center < nyq)) bad("notch frequency must lie in (0, fs/2)");
        break;
      case FilterKind::Bandpass:
        if (!(f_lo > 0 && f_lo < f_hi && f_hi < nyq)) bad("band edges must satisfy 0 < lo < hi < fs/2");
        break;
      case FilterKind::Highpass:
        if (!(f_lo > 0 && f_lo < nyq)) bad("cutoff must lie in (0, fs/2)");
        break;
    }
    if (order < 1) fail(ErrorCode::InvalidConfig, "filter order must be >= 1");
  }
};

namespace detail {

using cplx = std::complex<double>;

inline cplx biquad_response(const Biquad& q, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
}

/// Poles of the analog Butterworth low-pass prototype (unit cutoff).
inline std::vector<cplx> butter_prototype(int order) {
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

inline cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

inline Biquad section_from_pole(cplx z_pole, double b0, double b1, double b2) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  if (std::abs(z_pole.imag()) > 1e-14) {
    q.a1 = -2.0 * z_pole.real();
    q.a2 = std::norm(z_pole);
  } else {
    q.a1 = -z_pole.real();
    q.a2 = 0.0;
  }
  return q;
}

inline void normalize_gain(SosFilter& sos, double omega) {
  cplx h = 1.0;
  for (const auto& q : sos) h *= biquad_response(q, omega);
  const double g = 1.0 / std::abs(h);
  sos.front().b0 *= g;
  sos.front().b1 *= g;
  sos.front().b2 *= g;
}

}  // namespace detail

inline std::complex<double> frequency_response(const SosFilter& sos, double f, double fs) {
  std::complex<double> h = 1.0;
  for (const auto& q : sos) h *= detail::biquad_response(q, 2.0 * std::numbers::pi * f / fs);
  return h;
}

/// Second-order IIR notch with -3 dB bandwidth f0 / quality.
inline SosFilter design_notch(double f0, double fs, double quality = 35.0) {
  FilterSpec{.kind = FilterKind::Notch, .f_center = f0, .fs = fs, .quality = quality}.validate();
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double beta = std::tan(w0 / quality / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  Biquad q;
  q.b0 = gain;
  q.b1 = -2.0 * gain * std::cos(w0);
  q.b2 = gain;
  q.a1 = -2.0 * gain * std::cos(w0);
  q.a2 = 2.0 * gain - 1.0;
  return {q};
}

/// Butterworth band-pass from an order-`order` low-pass prototype; the digital
/// filter has 2*order poles, i.e. `order` sections.
inline SosFilter design_butter_bandpass(double lo, double hi, double fs, int order = 4) {
  FilterSpec{.kind = FilterKind::Bandpass, .f_lo = lo, .f_hi = hi, .order = order, .fs = fs}.validate();
  const double w_lo = 2.0 * fs * std::tan(std::numbers::pi * lo / fs);
  const double w_hi = 2.0 * fs * std::tan(std::numbers::pi * hi / fs);
  const double bw = w_hi - w_lo;
  const double w0 = std::sqrt(w_lo * w_hi);

  SosFilter sos;
  for (const auto& p : detail::butter_prototype(order)) {
    // Each prototype pole maps to two band-pass poles. Keep the ones in the
    // upper half plane; their conjugates complete each section.
    const detail::cplx half = p * bw / 2.0;
    const detail::cplx root = std::sqrt(half * half - w0 * w0);
    for (const auto& s : {half + root, half - root}) {
      if (s.imag() <= 0) continue;
      sos.push_back(detail::section_from_pole(detail::bilinear(s, fs), 1.0, 0.0, -1.0));
    }
  }
  const double omega_c = 2.0 * std::atan(w0 / (2.0 * fs));
  detail::normalize_gain(sos, omega_c);
  return sos;
}

inline SosFilter design_butter_highpass(double cutoff, double fs, int order = 4) {
  FilterSpec{.kind = FilterKind::Highpass, .f_lo = cutoff, .order = order, .fs = fs}.validate();
  const double wc = 2.0 * fs * std::tan(std::numbers::pi * cutoff / fs);
  SosFilter sos;
  for (const auto& p : detail::butter_prototype(order)) {
    const detail::cplx s = wc / p;
    if (std::abs(s.imag()) < 1e-12 * wc) {
      sos.push_back(detail::section_from_pole(detail::bilinear(s.real(), fs), 1.0, -1.0, 0.0));
    } else if (s.imag() > 0) {
      sos.push_back(detail::section_from_pole(detail::bilinear(s, fs), 1.0, -2.0, 1.0));
    }
  }
  detail::normalize_gain(sos, std::numbers::pi);
  return sos;
}

/// Causal single-pass filtering (transposed direct form II), zero initial state.
inline std::vector<double> sosfilt(const SosFilter& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& q : sos) {
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

/// Samples until the impulse response has shed all but 1e-9 of its energy.
inline std::size_t settle_length(const SosFilter& sos, std::size_t max_len = 1u << 16) {
  std::vector<double> impulse(max_len, 0.0);
  impulse[0] = 1.0;
  const auto h = sosfilt(sos, impulse);
  double total = 0.0;
  for (double v : h) total += v * v;
  double tail = total;
  for (std::size_t n = 0; n < h.size(); ++n) {
    tail -= h[n] * h[n];
    if (tail <= 1e-9 * total) return n + 1;
  }
  return max_len;
}

/// Forward-backward filtering with odd reflection padding of three settle
/// lengths on each side (clamped to the signal length).
inline std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return sosfilt(sos, x);
  const std::size_t pad = std::min<std::size_t>(3 * settle_length(sos), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto y = sosfilt(sos, ext);
  std::reverse(y.begin(), y.end());
  y = sosfilt(sos, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<double> apply_filter(const SosFilter& sos, std::span<const double> x, bool zero_phase) {
  return zero_phase ? filtfilt(sos, x) : sosfilt(sos, x);
}

/// Removes power-line interference at 50 Hz. Requires fs > 100 Hz.
inline std::vector<double> notch_50(std::span<const double> signal, double fs, bool zero_phase = true,
                                    double quality = 35.0) {
  if (!(fs > 100.0)) {
    fail(ErrorCode::NyquistViolation, "50 Hz notch needs fs > 100 Hz, got " + std::to_string(fs));
  }
  return apply_filter(design_notch(50.0, fs, quality), signal, zero_phase);
}

inline std::vector<double> bandpass(std::span<const double> signal, double fs, double lo, double hi,
                                    bool zero_phase = true, int order = 4) {
  return apply_filter(design_butter_bandpass(lo, hi, fs, order), signal, zero_phase);
}

inline std::vector<double> highpass(std::span<const double> signal, double fs, double cutoff,
                                    bool zero_phase = true, int order = 4) {
  return apply_filter(design_butter_highpass(cutoff, fs, order), signal, zero_phase);
}

/// Integer-factor decimation by sample dropping. The caller is responsible for
/// band-limiting first.
inline std::vector<double> downsample(std::span<const double> signal, double fs_in, double fs_out = 64.0) {
  const double ratio = fs_in / fs_out;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (!(fs_out > 0) || factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
    fail(ErrorCode::NonIntegerRatio, "cannot decimate " + std::to_string(fs_in) + " Hz to " +
                                         std::to_string(fs_out) + " Hz");
  }
  std::vector<double> out;
  out.reserve(signal.size() / factor);
  for (std::size_t i = 0; i + factor <= signal.size(); i += factor) out.push_back(signal[i]);
  return out;
}

enum class ChannelRole { Eeg, Eog, Emg };

struct PrepOptions {
  bool zero_phase = true;
  double notch_hz = 50.0;
  double notch_quality = 35.0;
  double eeg_eog_lo = 0.3;
  double eeg_eog_hi = 32.0;
  double emg_lo = 10.0;
  double emg_hi = 32.0;
  int order = 4;
  double target_fs = 64.0;
};

/// notch -> band-pass -> downsample. The notch is skipped when 50 Hz is above
/// the channel's Nyquist rate, and the band-pass degenerates to a high-pass
/// when its upper edge reaches Nyquist (64 Hz channels with a 32 Hz edge).
inline std::vector<double> condition_channel(std::span<const double> signal, double fs, ChannelRole role,
                                             const PrepOptions& opt = {}) {
  std::vector<double> x(signal.begin(), signal.end());
  if (fs > 2.0 * opt.notch_hz) {
    x = apply_filter(design_notch(opt.notch_hz, fs, opt.notch_quality), x, opt.zero_phase);
  }
  const double lo = role == ChannelRole::Emg ? opt.emg_lo : opt.eeg_eog_lo;
  const double hi = role == ChannelRole::Emg ? opt.emg_hi : opt.eeg_eog_hi;
  if (hi < fs / 2.0) {
    x = apply_filter(design_butter_bandpass(lo, hi, fs, opt.order), x, opt.zero_phase);
  } else {
    x = apply_filter(design_butter_highpass(lo, fs, opt.order), x, opt.zero_phase);
  }
  return downsample(x, fs, opt.target_fs);
}

/// Conditions a 4-channel recording ordered EEG, EOG1, EOG2, EMG.
inline Recording preprocess(const Recording& raw, const PrepOptions& opt = {}) {
  if (raw.channels.size() != 4) {
    fail(ErrorCode::ShapeMismatch, "expected channels EEG, EOG1, EOG2, EMG; got " +
                                       std::to_string(raw.channels.size()));
  }
  static constexpr ChannelRole roles[4] = {ChannelRole::Eeg, ChannelRole::Eog, ChannelRole::Eog,
                                           ChannelRole::Emg};
  Recording out;
  out.subject_id = raw.subject_id;
  out.stages = raw.stages;
  out.epoch_s = raw.epoch_s;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& ch = raw.channels[i];
    out.channels.push_back({ch.name, opt.target_fs, condition_channel(ch.samples, ch.fs, roles[i], opt)});
  }
  return out;
}

}  // namespace sleepsae
