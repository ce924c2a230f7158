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

// Columnar feature file (".sfeat", little-endian):
//
//   magic      8 bytes  "SSAEFEAT"
//   version    u32      1
//   recording  str      (u32 length + bytes)
//   n_rows     u64
//   n_cols     u32      28
//   names      n_cols x str, canonical feature order
//   columns    n_cols x (n_rows x f64), one contiguous block per feature
//   labels     n_rows x u8   (StageLabel value, 255 = unscored)
//   valid      n_rows x u8   (0 = a sub-feature hit a degenerate input)

#pragma once

#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>

#include "sleepsae/error.hpp"
#include "sleepsae/features.hpp"
#include "sleepsae/io.hpp"

namespace sleepsae {

inline constexpr char kFeatureMagic[8] = {'S', 'S', 'A', 'E', 'F', 'E', 'A', 'T'};
inline constexpr std::uint32_t kFeatureVersion = 1;

inline Bytes encode_features(const FeatureMatrix& m) {
  ByteWriter w;
  w.raw(std::string_view(kFeatureMagic, 8));
  w.u32(kFeatureVersion);
  w.str(m.recording_id);
  w.u64(m.rows);
  w.u32(static_cast<std::uint32_t>(kNumFeatures));
  for (const auto& name : feature_names()) w.str(name);
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    for (std::size_t r = 0; r < m.rows; ++r) w.f64(m.at(r, c));
  }
  for (auto s : m.labels) w.u8(static_cast<std::uint8_t>(s));
  for (auto v : m.valid) w.u8(v);
  return w.take();
}

inline FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(8) != std::string_view(kFeatureMagic, 8)) fail(ErrorCode::FormatError, "not a feature file");
  if (auto v = r.u32(); v != kFeatureVersion) {
    fail(ErrorCode::FormatError, "unsupported feature file version " + std::to_string(v));
  }
  std::string id = r.str();
  const auto rows = r.u64();
  const auto cols = r.u32();
  if (cols != kNumFeatures) fail(ErrorCode::FormatError, "feature file has " + std::to_string(cols) + " columns");
  for (std::size_t c = 0; c < cols; ++c) {
    if (auto name = r.str(); name != feature_names()[c]) {
      fail(ErrorCode::FormatError, "column " + std::to_string(c) + " is '" + name + "', expected '" +
                                       feature_names()[c] + "'");
    }
  }
  if (rows > r.remaining() / (8 * kNumFeatures + 2)) fail(ErrorCode::FormatError, "row count exceeds file size");
  auto m = FeatureMatrix::zeros(rows);
  m.recording_id = std::move(id);
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    for (std::size_t i = 0; i < rows; ++i) m.at(i, c) = r.f64();
  }
  for (auto& s : m.labels) {
    const auto v = r.u8();
    s = v < kNumStages ? static_cast<StageLabel>(v) : StageLabel::Unscored;
  }
  for (auto& v : m.valid) v = r.u8();
  return m;
}

inline void save_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  write_file_atomic(path, encode_features(m));
}

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  return decode_features(read_file_bytes(path));
}

/// Human-readable export: header row of feature names plus label and valid.
inline std::string features_to_csv(const FeatureMatrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "second";
  for (const auto& n : feature_names()) out << ',' << n;
  out << ",label,valid\n";
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << r;
    for (std::size_t c = 0; c < kNumFeatures; ++c) out << ',' << m.at(r, c);
    out << ',' << stage_name(m.labels[r]) << ',' << static_cast<int>(m.valid[r]) << '\n';
  }
  return out.str();
}

}  // namespace sleepsae
