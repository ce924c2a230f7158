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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sleepsae.hpp"

namespace {

using namespace sleepsae;

struct ResponsePoint {
  double f, mag;
};

// Magnitudes frozen from an independent reference implementation of the same
// designs (Butterworth order 4 via bilinear transform, second-order notch).
void expect_response(const SosFilter& sos, double fs, const std::vector<ResponsePoint>& pts) {
  for (const auto& p : pts) {
    EXPECT_NEAR(std::abs(frequency_response(sos, p.f, fs)), p.mag, 1e-6) << "f = " << p.f;
  }
}

TEST(FilterDesign, BandpassEegMatchesReference) {
  expect_response(design_butter_bandpass(0.3, 32, 128), 128,
                  {{0.1, 0.0120237207816},
                   {0.3, 0.707106781186},
                   {1, 0.999982448922},
                   {5, 0.999999999857},
                   {10, 0.999996971569},
                   {20, 0.997144244182},
                   {32, 0.707106781187},
                   {40, 0.192423918316},
                   {50, 0.0159710516745}});
}

TEST(FilterDesign, BandpassEmgMatchesReference) {
  expect_response(design_butter_bandpass(10, 32, 128), 128,
                  {{2, 0.000485367619166}, {10, 0.707106781187}, {20, 0.999999998218}, {32, 0.707106781187},
                   {50, 0.00589277687295}});
}

TEST(FilterDesign, HighpassMatchesReference) {
  expect_response(design_butter_highpass(10, 64), 64,
                  {{2, 0.00115283189343}, {10, 0.707106781187}, {20, 0.999867663835}, {31, 1.0}});
  expect_response(design_butter_highpass(0.3, 64), 64,
                  {{0.1, 0.012341566138}, {0.3, 0.707106781187}, {1, 0.999967387971}, {10, 1.0}});
}

TEST(FilterDesign, NotchMatchesReference) {
  expect_response(design_notch(50, 128), 128,
                  {{10, 0.999950089693},
                   {45, 0.987610232329},
                   {49, 0.805853714834},
                   {50, 0.0},
                   {51, 0.822325325099},
                   {55, 0.993508475131}});
}

TEST(FilterDesign, ValidatesEdges) {
  FilterSpec s;
  s.kind = FilterKind::Bandpass;
  s.f_lo = 0.3;
  s.f_hi = 40;
  s.fs = 64;
  EXPECT_THROW(s.validate(), Error);
  s.f_hi = 30;
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(notch_50(std::vector<double>(10, 0.0), 64), Error);
}

TEST(Notch, SuppressesMainsAndPassesAlpha) {
  const auto mains = oracle::sine(50, 128, 128 * 60);
  const auto out = notch_50(mains, 128);
  const std::span<const double> mid(out.data() + 1280, out.size() - 2560);
  EXPECT_LT(oracle::rms(mid), 0.032 * oracle::rms(mains));

  const auto alpha = oracle::sine(10, 128, 128 * 60);
  const auto kept = notch_50(alpha, 128);
  const double ratio = oracle::rms(std::span<const double>(kept.data() + 1280, kept.size() - 2560)) /
                       oracle::rms(std::span<const double>(alpha.data() + 1280, alpha.size() - 2560));
  EXPECT_LT(std::abs(20 * std::log10(ratio)), 1.0);
}

TEST(Bandpass, RemovesDcOffset) {
  std::vector<double> x(128 * 120, 5.0);
  const auto y = bandpass(x, 128, 0.3, 32);
  double mean = 0;
  for (std::size_t i = 128 * 30; i < y.size() - 128 * 30; ++i) mean += y[i];
  mean /= static_cast<double>(y.size() - 128 * 60);
  EXPECT_LT(std::abs(mean), 0.05);
}

TEST(Bandpass, EmgBandKeepsTwentyHertzDropsTwo) {
  const auto x20 = oracle::sine(20, 128, 128 * 30);
  const auto y20 = bandpass(x20, 128, 10, 32);
  const std::span<const double> m20(y20.data() + 640, y20.size() - 1280);
  EXPECT_LT(std::abs(20 * std::log10(oracle::rms(m20) / oracle::rms(x20))), 1.0);

  const auto x2 = oracle::sine(2, 128, 128 * 30);
  const auto y2 = bandpass(x2, 128, 10, 32);
  const std::span<const double> m2(y2.data() + 640, y2.size() - 1280);
  EXPECT_LT(oracle::rms(m2), 0.1 * oracle::rms(x2));
}

TEST(Filters, AreLinear) {
  Rng rng(5);
  std::normal_distribution<double> g;
  std::vector<double> a(2000), b(2000), ab(2000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = g(rng);
    b[i] = g(rng);
    ab[i] = 2.0 * a[i] - 3.0 * b[i];
  }
  for (bool zero_phase : {false, true}) {
    const auto sos = design_butter_bandpass(0.3, 32, 128);
    const auto ya = apply_filter(sos, a, zero_phase), yb = apply_filter(sos, b, zero_phase);
    const auto yab = apply_filter(sos, ab, zero_phase);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(yab[i], 2.0 * ya[i] - 3.0 * yb[i], 1e-9);
  }
}

TEST(Filters, ZeroPhaseHasNoLag) {
  Rng rng(8);
  std::normal_distribution<double> g;
  std::vector<double> x(4096);
  for (auto& v : x) v = g(rng);
  const auto y = filtfilt(design_butter_bandpass(0.3, 32, 128), x);
  long best_lag = 99;
  double best = -1e300;
  for (long lag = -20; lag <= 20; ++lag) {
    double c = 0;
    for (long i = 100; i < 3996; ++i) c += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
    if (c > best) best = c, best_lag = lag;
  }
  EXPECT_EQ(best_lag, 0);
}

TEST(Filters, CausalFilterMatchesDirectRecursion) {
  const auto sos = design_butter_highpass(10, 64);
  std::vector<double> x(300, 0.0);
  x[0] = 1.0;
  x[50] = -2.0;
  const auto y = sosfilt(sos, x);
  std::vector<double> ref = x;
  for (const auto& q : sos) {
    std::vector<double> out(ref.size());
    for (std::size_t n = 0; n < ref.size(); ++n) {
      double v = q.b0 * ref[n];
      if (n >= 1) v += q.b1 * ref[n - 1] - q.a1 * out[n - 1];
      if (n >= 2) v += q.b2 * ref[n - 2] - q.a2 * out[n - 2];
      out[n] = v;
    }
    ref = out;
  }
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(Downsample, HalvesTheRate) {
  std::vector<double> x(3840);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto y = downsample(x, 128, 64);
  ASSERT_EQ(y.size(), 1920u);
  EXPECT_EQ(y[1], 2.0);
  EXPECT_EQ(downsample(x, 64, 64), x);
  try {
    downsample(x, 100, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonIntegerRatio);
  }
}

TEST(Preprocess, ProducesFourChannelsAt64Hz) {
  const auto rec = synthetic_recording(60, 2);
  const auto out = preprocess(rec);
  ASSERT_EQ(out.channels.size(), 4u);
  for (const auto& c : out.channels) {
    EXPECT_DOUBLE_EQ(c.fs, 64.0);
    EXPECT_EQ(c.samples.size(), 3840u);
  }
  Recording three = rec;
  three.channels.pop_back();
  EXPECT_THROW(preprocess(three), Error);
}

}  // namespace
