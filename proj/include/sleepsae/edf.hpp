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

// Reader (and fixture writer) for plain EDF files. EDF+ annotation signals
// and discontinuous records are not supported.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/error.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/recording.hpp"

namespace sleepsae {

struct EdfTimestamp {
  int year = 1985;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  friend bool operator==(const EdfTimestamp&, const EdfTimestamp&) = default;
};

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  long digital_min = 0;
  long digital_max = 0;
  std::string prefiltering;
  long samples_per_record = 0;

  /// Slope and offset of the digital -> physical map.
  double gain() const {
    return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
  }
  double to_physical(long digital) const {
    return physical_min + static_cast<double>(digital - digital_min) * gain();
  }

  friend bool operator==(const EdfSignalHeader&, const EdfSignalHeader&) = default;
};

struct EdfHeader {
  std::string version = "0";
  std::string patient_id;
  std::string recording_id;
  EdfTimestamp start;
  long header_bytes = 256;
  long n_records = 0;
  double record_duration = 1.0;
  std::vector<EdfSignalHeader> signals;

  std::size_t n_signals() const { return signals.size(); }

  /// Bytes occupied by one data record (all signals, 16-bit samples).
  std::size_t record_bytes() const {
    std::size_t n = 0;
    for (const auto& s : signals) n += static_cast<std::size_t>(s.samples_per_record) * 2;
    return n;
  }

  double sample_rate(std::size_t signal) const {
    return static_cast<double>(signals.at(signal).samples_per_record) / record_duration;
  }

  friend bool operator==(const EdfHeader&, const EdfHeader&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '\0')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class FieldCursor {
 public:
  explicit FieldCursor(std::string_view text) : text_(text) {}

  std::string_view take(std::size_t width) {
    auto f = text_.substr(pos_, width);
    pos_ += width;
    return f;
  }
  std::string text(std::size_t width) { return std::string(trim(take(width))); }

  long integer(std::size_t width, std::string_view what) {
    auto f = trim(take(width));
    long v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || p != f.data() + f.size()) {
      // Some writers emit integral fields as "1.000000".
      double d = number_of(f, what);
      if (d != static_cast<double>(static_cast<long>(d))) {
        fail(ErrorCode::MalformedField, std::string(what) + ": not an integer: '" + std::string(f) + "'");
      }
      return static_cast<long>(d);
    }
    return v;
  }

  double number(std::size_t width, std::string_view what) { return number_of(trim(take(width)), what); }

  static double number_of(std::string_view f, std::string_view what) {
    double v = 0;
    auto first = f.data();
    if (!f.empty() && f.front() == '+') ++first;
    auto [p, ec] = std::from_chars(first, f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || p != f.data() + f.size()) {
      fail(ErrorCode::MalformedField, std::string(what) + ": not a number: '" + std::string(f) + "'");
    }
    return v;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void parse_triplet(std::string_view f, char sep, int out[3], std::string_view what) {
  f = trim(f);
  if (f.size() != 8 || f[2] != sep || f[5] != sep) {
    fail(ErrorCode::MalformedField, std::string(what) + ": expected xx" + sep + "xx" + sep + "xx");
  }
  for (int i = 0; i < 3; ++i) {
    auto part = f.substr(static_cast<std::size_t>(i) * 3, 2);
    auto [p, ec] = std::from_chars(part.data(), part.data() + 2, out[i]);
    if (ec != std::errc() || p != part.data() + 2) {
      fail(ErrorCode::MalformedField, std::string(what) + ": non-numeric component");
    }
  }
}

inline void put_field(std::string& out, std::string_view value, std::size_t width) {
  std::string v(value.substr(0, width));
  v.resize(width, ' ');
  out += v;
}

/// Shortest decimal rendering that fits an 8-character EDF field.
inline std::string format_number(double v, std::size_t width = 8) {
  char buf[64];
  for (int precision = 12; precision >= 1; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    std::string s(buf);
    if (s.size() <= width) return s;
  }
  fail(ErrorCode::MalformedField, "value does not fit EDF field: " + std::to_string(v));
}

}  // namespace detail

/// Decodes the fixed-width ASCII header. `bytes` may contain the whole file;
/// only the header prefix is read.
inline EdfHeader parse_edf_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 256) {
    fail(ErrorCode::TruncatedHeader, "EDF header needs 256 bytes, got " + std::to_string(bytes.size()));
  }
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  detail::FieldCursor cur(text);
  EdfHeader h;
  h.version = cur.text(8);
  if (h.version != "0") fail(ErrorCode::VersionMismatch, "EDF version '" + h.version + "' is not '0'");
  h.patient_id = cur.text(80);
  h.recording_id = cur.text(80);
  int date[3];
  int time[3];
  detail::parse_triplet(cur.take(8), '.', date, "start date");
  detail::parse_triplet(cur.take(8), '.', time, "start time");
  h.start = {date[2] >= 85 ? 1900 + date[2] : 2000 + date[2], date[1], date[0], time[0], time[1], time[2]};
  h.header_bytes = cur.integer(8, "header bytes");
  cur.take(44);
  h.n_records = cur.integer(8, "number of records");
  h.record_duration = cur.number(8, "record duration");
  const long ns = cur.integer(4, "number of signals");
  if (ns < 0) fail(ErrorCode::MalformedField, "negative signal count");
  if (h.header_bytes != 256 + 256 * ns) {
    fail(ErrorCode::MalformedField, "header bytes " + std::to_string(h.header_bytes) +
                                        " inconsistent with " + std::to_string(ns) + " signals");
  }
  if (bytes.size() < static_cast<std::size_t>(h.header_bytes)) {
    fail(ErrorCode::TruncatedHeader, "header declares " + std::to_string(h.header_bytes) +
                                         " bytes, file has " + std::to_string(bytes.size()));
  }
  if (h.n_records < 0) fail(ErrorCode::MalformedField, "unknown record count (-1) is not supported");
  if (!(h.record_duration > 0)) fail(ErrorCode::MalformedField, "record duration must be positive");

  const auto n = static_cast<std::size_t>(ns);
  h.signals.resize(n);
  for (auto& s : h.signals) s.label = cur.text(16);
  for (auto& s : h.signals) s.transducer = cur.text(80);
  for (auto& s : h.signals) s.physical_dimension = cur.text(8);
  for (auto& s : h.signals) s.physical_min = cur.number(8, "physical minimum");
  for (auto& s : h.signals) s.physical_max = cur.number(8, "physical maximum");
  for (auto& s : h.signals) s.digital_min = cur.integer(8, "digital minimum");
  for (auto& s : h.signals) s.digital_max = cur.integer(8, "digital maximum");
  for (auto& s : h.signals) s.prefiltering = cur.text(80);
  for (auto& s : h.signals) s.samples_per_record = cur.integer(8, "samples per record");
  for (auto& s : h.signals) {
    if (!(s.physical_max > s.physical_min)) {
      fail(ErrorCode::MalformedField, "signal '" + s.label + "': physical max must exceed physical min");
    }
    if (!(s.digital_max > s.digital_min)) {
      fail(ErrorCode::MalformedField, "signal '" + s.label + "': digital max must exceed digital min");
    }
    if (s.samples_per_record <= 0) {
      fail(ErrorCode::MalformedField, "signal '" + s.label + "': samples per record must be positive");
    }
  }
  return h;
}

inline std::string serialize_edf_header(const EdfHeader& h) {
  using detail::format_number;
  using detail::put_field;
  std::string out;
  out.reserve(256 + 256 * h.signals.size());
  char buf[16];
  put_field(out, h.version, 8);
  put_field(out, h.patient_id, 80);
  put_field(out, h.recording_id, 80);
  std::snprintf(buf, sizeof buf, "%02d.%02d.%02d", h.start.day % 100, h.start.month % 100, h.start.year % 100);
  put_field(out, buf, 8);
  std::snprintf(buf, sizeof buf, "%02d.%02d.%02d", h.start.hour % 100, h.start.minute % 100, h.start.second % 100);
  put_field(out, buf, 8);
  put_field(out, std::to_string(256 + 256 * h.signals.size()), 8);
  put_field(out, "", 44);
  put_field(out, std::to_string(h.n_records), 8);
  put_field(out, format_number(h.record_duration), 8);
  put_field(out, std::to_string(h.signals.size()), 4);
  for (const auto& s : h.signals) put_field(out, s.label, 16);
  for (const auto& s : h.signals) put_field(out, s.transducer, 80);
  for (const auto& s : h.signals) put_field(out, s.physical_dimension, 8);
  for (const auto& s : h.signals) put_field(out, format_number(s.physical_min), 8);
  for (const auto& s : h.signals) put_field(out, format_number(s.physical_max), 8);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.digital_min), 8);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.digital_max), 8);
  for (const auto& s : h.signals) put_field(out, s.prefiltering, 80);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.samples_per_record), 8);
  for (std::size_t i = 0; i < h.signals.size(); ++i) put_field(out, "", 32);
  return out;
}

/// Builds a complete EDF file from a header and per-signal digital samples.
/// Each signal must hold exactly n_records * samples_per_record values.
inline Bytes write_edf(const EdfHeader& h, const std::vector<std::vector<std::int16_t>>& digital) {
  if (digital.size() != h.signals.size()) fail(ErrorCode::ShapeMismatch, "one sample vector per signal");
  for (std::size_t i = 0; i < digital.size(); ++i) {
    if (digital[i].size() != static_cast<std::size_t>(h.n_records * h.signals[i].samples_per_record)) {
      fail(ErrorCode::ShapeMismatch, "signal " + std::to_string(i) + " sample count mismatch");
    }
  }
  const auto header = serialize_edf_header(h);
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(h.n_records) * h.record_bytes());
  for (long r = 0; r < h.n_records; ++r) {
    for (std::size_t i = 0; i < digital.size(); ++i) {
      const auto spr = static_cast<std::size_t>(h.signals[i].samples_per_record);
      for (std::size_t k = 0; k < spr; ++k) {
        const auto v = static_cast<std::uint16_t>(digital[i][static_cast<std::size_t>(r) * spr + k]);
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
      }
    }
  }
  return out;
}

/// Index of the first signal whose label matches `name` (case-insensitive,
/// whitespace-trimmed), or -1.
inline long find_signal(const EdfHeader& h, std::string_view name) {
  const auto want = detail::lower(detail::trim(name));
  long found = -1;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    if (detail::lower(detail::trim(h.signals[i].label)) != want) continue;
    if (found < 0) {
      found = static_cast<long>(i);
    } else {
      warn("duplicate channel label '" + std::string(name) + "'; using the first occurrence");
      break;
    }
  }
  return found;
}

/// Decodes the data records that follow the header into physical units.
/// `data` starts at the first data record. Channels come back in the order of
/// `wanted`.
inline Recording read_recording(const EdfHeader& h, std::span<const std::uint8_t> data,
                                const std::vector<std::string>& wanted) {
  std::vector<std::size_t> index;
  for (const auto& name : wanted) {
    const long i = find_signal(h, name);
    if (i < 0) fail(ErrorCode::MissingChannel, "channel '" + name + "' not found");
    index.push_back(static_cast<std::size_t>(i));
  }
  const auto record_bytes = h.record_bytes();
  const auto n_records = static_cast<std::size_t>(h.n_records);
  if (data.size() < n_records * record_bytes) {
    fail(ErrorCode::TruncatedData, "expected " + std::to_string(n_records) + " records (" +
                                       std::to_string(n_records * record_bytes) + " bytes), got " +
                                       std::to_string(data.size()) + " bytes");
  }
  // Byte offset of each signal inside one record.
  std::vector<std::size_t> offset(h.signals.size(), 0);
  for (std::size_t i = 1; i < h.signals.size(); ++i) {
    offset[i] = offset[i - 1] + static_cast<std::size_t>(h.signals[i - 1].samples_per_record) * 2;
  }

  Recording rec;
  rec.subject_id = h.patient_id;
  for (std::size_t w = 0; w < index.size(); ++w) {
    const auto& sig = h.signals[index[w]];
    const auto spr = static_cast<std::size_t>(sig.samples_per_record);
    Channel ch;
    ch.name = sig.label;
    ch.fs = h.sample_rate(index[w]);
    ch.samples.resize(n_records * spr);
    for (std::size_t r = 0; r < n_records; ++r) {
      const auto* p = data.data() + r * record_bytes + offset[index[w]];
      for (std::size_t k = 0; k < spr; ++k) {
        const auto raw = static_cast<std::uint16_t>(p[2 * k] | (p[2 * k + 1] << 8));
        ch.samples[r * spr + k] = sig.to_physical(static_cast<std::int16_t>(raw));
      }
    }
    rec.channels.push_back(std::move(ch));
  }
  return rec;
}

inline Recording load_edf(const std::filesystem::path& path, const std::vector<std::string>& wanted) {
  const auto bytes = read_file_bytes(path);
  const auto header = parse_edf_header(bytes);
  auto rec = read_recording(header, std::span(bytes).subspan(static_cast<std::size_t>(header.header_bytes)),
                            wanted);
  rec.subject_id = path.stem().string();
  return rec;
}

}  // namespace sleepsae
