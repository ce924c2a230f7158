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

// In-memory PSG recording and its on-disk archive.
//
// Archive layout (".srec", little-endian):
//
//   magic      8 bytes  "SSAEREC\0"
//   version    u32      1
//   subject    str      (u32 length + bytes)
//   epoch_s    f64
//   n_channels u32
//   per channel:
//     name     str
//     fs       f64      Hz
//     n        u64      sample count
//     samples  n x f64  physical units
//   n_stages   u64
//   stages     n_stages x u8  (StageLabel value, 255 = unscored)

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sleepsae/error.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

struct Channel {
  std::string name;
  double fs = 0.0;
  std::vector<double> samples;

  double duration() const { return fs > 0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

struct Recording {
  std::string subject_id;
  std::vector<Channel> channels;
  std::vector<StageLabel> stages;
  double epoch_s = 30.0;

  /// Duration implied by the shortest channel, in seconds.
  double duration() const {
    if (channels.empty()) return 0.0;
    double d = channels.front().duration();
    for (const auto& c : channels) d = std::min(d, c.duration());
    return d;
  }
};

inline constexpr char kRecordingMagic[8] = {'S', 'S', 'A', 'E', 'R', 'E', 'C', '\0'};
inline constexpr std::uint32_t kRecordingVersion = 1;

inline Bytes encode_recording(const Recording& rec) {
  ByteWriter w;
  w.raw(std::string_view(kRecordingMagic, 8));
  w.u32(kRecordingVersion);
  w.str(rec.subject_id);
  w.f64(rec.epoch_s);
  w.u32(static_cast<std::uint32_t>(rec.channels.size()));
  for (const auto& c : rec.channels) {
    w.str(c.name);
    w.f64(c.fs);
    w.u64(c.samples.size());
    for (double x : c.samples) w.f64(x);
  }
  w.u64(rec.stages.size());
  for (auto s : rec.stages) w.u8(static_cast<std::uint8_t>(s));
  return w.take();
}

inline Recording decode_recording(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(8) != std::string_view(kRecordingMagic, 8)) {
    fail(ErrorCode::FormatError, "not a recording archive");
  }
  if (auto v = r.u32(); v != kRecordingVersion) {
    fail(ErrorCode::FormatError, "unsupported recording archive version " + std::to_string(v));
  }
  Recording rec;
  rec.subject_id = r.str();
  rec.epoch_s = r.f64();
  const auto n_channels = r.u32();
  for (std::uint32_t i = 0; i < n_channels; ++i) {
    Channel c;
    c.name = r.str();
    c.fs = r.f64();
    const auto n = r.u64();
    if (n > r.remaining() / 8) fail(ErrorCode::FormatError, "channel length exceeds archive");
    c.samples.resize(n);
    for (auto& x : c.samples) x = r.f64();
    rec.channels.push_back(std::move(c));
  }
  const auto n_stages = r.u64();
  if (n_stages > r.remaining()) fail(ErrorCode::FormatError, "stage track exceeds archive");
  rec.stages.reserve(n_stages);
  for (std::uint64_t i = 0; i < n_stages; ++i) {
    const auto v = r.u8();
    rec.stages.push_back(v < kNumStages ? static_cast<StageLabel>(v) : StageLabel::Unscored);
  }
  return rec;
}

inline void save_recording(const std::filesystem::path& path, const Recording& rec) {
  write_file_atomic(path, encode_recording(rec));
}

inline Recording load_recording(const std::filesystem::path& path) {
  return decode_recording(read_file_bytes(path));
}

}  // namespace sleepsae
