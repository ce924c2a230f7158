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

#include <cstdint>
#include <string>
#include <vector>

#include "sleepsae.hpp"

namespace {

using namespace sleepsae;

EdfHeader ramp_header(std::size_t signals, long records, long spr) {
  EdfHeader h;
  h.patient_id = "X";
  h.recording_id = "Startdate 01-JAN-2001";
  h.start = {2001, 1, 1, 22, 30, 5};
  h.n_records = records;
  h.record_duration = 1.0;
  for (std::size_t i = 0; i < signals; ++i) {
    EdfSignalHeader s;
    s.label = "S" + std::to_string(i);
    s.transducer = "AgAgCl";
    s.physical_dimension = "uV";
    s.physical_min = -100;
    s.physical_max = 100;
    s.digital_min = -2048;
    s.digital_max = 2047;
    s.prefiltering = "HP:0.1Hz";
    s.samples_per_record = spr;
    h.signals.push_back(s);
  }
  return h;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

TEST(Edf, HeaderBytesForFiveSignals) {
  const auto text = serialize_edf_header(ramp_header(5, 1, 10));
  EXPECT_EQ(text.size(), 1536u);
  const Bytes bytes(text.begin(), text.end());
  EXPECT_EQ(parse_edf_header(bytes).header_bytes, 1536);
}

TEST(Edf, HeaderRoundTripIsLossless) {
  const auto h = ramp_header(3, 7, 128);
  const auto text = serialize_edf_header(h);
  const auto back = parse_edf_header(Bytes(text.begin(), text.end()));
  EXPECT_EQ(back.header_bytes, 1024);
  auto expect = h;
  expect.header_bytes = 1024;
  EXPECT_EQ(back, expect);
  EXPECT_EQ(serialize_edf_header(back), text);
}

TEST(Edf, EqualPhysicalBoundsAreMalformed) {
  auto h = ramp_header(1, 1, 4);
  h.signals[0].physical_max = h.signals[0].physical_min;
  const auto text = serialize_edf_header(h);
  EXPECT_EQ(code_of([&] { parse_edf_header(Bytes(text.begin(), text.end())); }), ErrorCode::MalformedField);
}

TEST(Edf, ShortHeaderIsTruncated) {
  const Bytes bytes(100, ' ');
  EXPECT_EQ(code_of([&] { parse_edf_header(bytes); }), ErrorCode::TruncatedHeader);
}

TEST(Edf, WrongVersionIsRejected) {
  auto text = serialize_edf_header(ramp_header(1, 1, 4));
  text[0] = '1';
  EXPECT_EQ(code_of([&] { parse_edf_header(Bytes(text.begin(), text.end())); }), ErrorCode::VersionMismatch);
}

TEST(Edf, NonNumericFieldIsMalformed) {
  auto text = serialize_edf_header(ramp_header(1, 1, 4));
  text[236] = 'x';  // number of records
  EXPECT_EQ(code_of([&] { parse_edf_header(Bytes(text.begin(), text.end())); }), ErrorCode::MalformedField);
}

TEST(Edf, DigitalEndpointsMapToPhysicalBounds) {
  EdfSignalHeader s;
  s.physical_min = -100;
  s.physical_max = 100;
  s.digital_min = -2048;
  s.digital_max = 2047;
  EXPECT_DOUBLE_EQ(s.to_physical(-2048), -100.0);
  EXPECT_DOUBLE_EQ(s.to_physical(2047), 100.0);
  // Midpoint of the digital range maps to the midpoint of the physical range.
  EXPECT_NEAR(s.to_physical(-2048) + 4095 * 0.5 * s.gain(), 0.0, 1e-12);
}

TEST(Edf, RampFixtureConvertsExactly) {
  auto h = ramp_header(2, 3, 8);
  std::vector<std::vector<std::int16_t>> digital(2);
  for (int i = 0; i < 24; ++i) {
    digital[0].push_back(static_cast<std::int16_t>(-2048 + 100 * i));
    digital[1].push_back(static_cast<std::int16_t>(i));
  }
  const auto file = write_edf(h, digital);
  ASSERT_EQ(file.size(), 768u + 3 * 2 * 8 * 2);
  const auto parsed = parse_edf_header(file);
  const auto rec = read_recording(parsed, std::span(file).subspan(768), {"s1", "S0"});
  ASSERT_EQ(rec.channels.size(), 2u);
  EXPECT_EQ(rec.channels[0].name, "S1");
  EXPECT_DOUBLE_EQ(rec.channels[0].fs, 8.0);
  ASSERT_EQ(rec.channels[1].samples.size(), 24u);
  for (int i = 0; i < 24; ++i) {
    const double gain = 200.0 / 4095.0;
    EXPECT_DOUBLE_EQ(rec.channels[1].samples[static_cast<std::size_t>(i)], -100.0 + 100 * i * gain);
    EXPECT_DOUBLE_EQ(rec.channels[0].samples[static_cast<std::size_t>(i)], -100.0 + (i + 2048) * gain);
  }
}

TEST(Edf, MissingChannelAndTruncatedData) {
  auto h = ramp_header(1, 2, 4);
  const auto file = write_edf(h, {std::vector<std::int16_t>(8, 0)});
  EXPECT_EQ(code_of([&] { read_recording(h, std::span(file).subspan(512), {"EMG"}); }), ErrorCode::MissingChannel);
  EXPECT_EQ(code_of([&] { read_recording(h, std::span(file).subspan(512, 10), {"S0"}); }), ErrorCode::TruncatedData);
}

TEST(Hypnogram, UcddbCodes) {
  const auto h = parse_hypnogram("0\n1\n2\n3\n4\n5\n7\n");
  const std::vector<StageLabel> want{StageLabel::W,   StageLabel::REM, StageLabel::S1,      StageLabel::S2,
                                     StageLabel::SWS, StageLabel::SWS, StageLabel::Unscored};
  EXPECT_EQ(h.stages, want);
}

TEST(Hypnogram, RkStagesThreeAndFourMergeIntoSws) {
  HypnogramOptions opt;
  opt.codes = HypnogramCodes::Rk;
  const auto h = parse_hypnogram("W\n1\n2\n3\n4\nR\n", 30.0, opt);
  ASSERT_EQ(h.stages.size(), 6u);
  EXPECT_EQ(h.stages[3], StageLabel::SWS);
  EXPECT_EQ(h.stages[4], StageLabel::SWS);
  EXPECT_EQ(h.stages[5], StageLabel::REM);
}

TEST(Hypnogram, EmptyInputIsAnError) {
  EXPECT_EQ(code_of([] { parse_hypnogram(""); }), ErrorCode::EmptyAnnotation);
  EXPECT_EQ(code_of([] { parse_hypnogram("\n\n"); }), ErrorCode::EmptyAnnotation);
}

TEST(Hypnogram, OneEpochPerLine) {
  std::string text;
  for (int i = 0; i < 37; ++i) text += std::to_string(i % 6) + "\n";
  EXPECT_EQ(parse_hypnogram(text).stages.size(), 37u);
}

TEST(Hypnogram, UnknownCodesDependOnStrictness) {
  EXPECT_EQ(parse_hypnogram("0\n9\n").stages[1], StageLabel::Unscored);
  HypnogramOptions strict;
  strict.strict = true;
  EXPECT_EQ(code_of([&] { parse_hypnogram("0\n9\n", 30.0, strict); }), ErrorCode::UnknownCode);
}

TEST(Hypnogram, FormatRoundTrip) {
  const std::vector<StageLabel> s{StageLabel::W, StageLabel::S2, StageLabel::SWS, StageLabel::REM, StageLabel::S1};
  EXPECT_EQ(parse_hypnogram(format_hypnogram(s)).stages, s);
}

TEST(RecordingArchive, RoundTrip) {
  Recording r;
  r.subject_id = "ucddb002";
  r.channels.push_back({"C3A2", 128.0, {1.5, -2.25, 1e-300}});
  r.channels.push_back({"EMG", 64.0, {}});
  r.stages = {StageLabel::W, StageLabel::Unscored};
  const auto back = decode_recording(encode_recording(r));
  EXPECT_EQ(back.subject_id, r.subject_id);
  ASSERT_EQ(back.channels.size(), 2u);
  EXPECT_EQ(back.channels[0].samples, r.channels[0].samples);
  EXPECT_EQ(back.channels[1].fs, 64.0);
  EXPECT_EQ(back.stages, r.stages);
}

TEST(RecordingArchive, BadMagicIsAFormatError) {
  Bytes b(64, 0);
  EXPECT_THROW(decode_recording(b), Error);
}

TEST(SyntheticEdf, ConvertsBackThroughTheReader) {
  const auto rec = synthetic_recording(60, 3);
  const auto file = recording_to_edf(rec);
  const auto h = parse_edf_header(file);
  EXPECT_EQ(h.n_signals(), 4u);
  const auto back = read_recording(h, std::span(file).subspan(static_cast<std::size_t>(h.header_bytes)),
                                   {"C3A2", "Lefteye", "RightEye", "EMG"});
  ASSERT_EQ(back.channels.size(), 4u);
  EXPECT_DOUBLE_EQ(back.channels[0].fs, 128.0);
  EXPECT_DOUBLE_EQ(back.channels[3].fs, 64.0);
  EXPECT_NEAR(back.duration(), 60.0, 1e-9);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_NEAR(back.channels[0].samples[i], rec.channels[0].samples[i], 0.5 * h.signals[0].gain() + 1e-12);
  }
}

}  // namespace
