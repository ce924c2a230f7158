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

// Plain-text hypnograms: one stage code per line, one line per scoring epoch.
//
// Two code conventions are understood:
//   ucddb : 0 wake, 1 REM, 2 stage 1, 3 stage 2, 4 stage 3, 5 stage 4,
//           6 artifact, 7 indeterminate   (St. Vincent's / UCD database)
//   rk    : W, R, 1, 2, 3, 4, M (movement), ? (unscored)
// Stages 3 and 4 both map to SWS. Artifact, movement and indeterminate epochs
// map to Unscored.

#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/edf.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/stage.hpp"

namespace sleepsae {

enum class HypnogramCodes { Ucddb, Rk };

struct HypnogramOptions {
  HypnogramCodes codes = HypnogramCodes::Ucddb;
  bool strict = false;
};

struct Hypnogram {
  std::vector<StageLabel> stages;
  double epoch_s = 30.0;
};

namespace detail {

/// Returns false when the code is not part of the convention at all.
inline bool map_stage_code(std::string_view code, HypnogramCodes codes, StageLabel& out) {
  if (codes == HypnogramCodes::Ucddb) {
    if (code.size() != 1) return false;
    switch (code[0]) {
      case '0': out = StageLabel::W; return true;
      case '1': out = StageLabel::REM; return true;
      case '2': out = StageLabel::S1; return true;
      case '3': out = StageLabel::S2; return true;
      case '4':
      case '5': out = StageLabel::SWS; return true;
      case '6':
      case '7': out = StageLabel::Unscored; return true;
      default: return false;
    }
  }
  const auto c = lower(code);
  if (c == "w" || c == "0") { out = StageLabel::W; return true; }
  if (c == "1") { out = StageLabel::S1; return true; }
  if (c == "2") { out = StageLabel::S2; return true; }
  if (c == "3" || c == "4") { out = StageLabel::SWS; return true; }
  if (c == "r" || c == "rem") { out = StageLabel::REM; return true; }
  if (c == "m" || c == "?") { out = StageLabel::Unscored; return true; }
  return false;
}

}  // namespace detail

/// Blank lines are ignored; every other line is one epoch.
inline Hypnogram parse_hypnogram(std::string_view text, double epoch_s = 30.0,
                                 const HypnogramOptions& options = {}) {
  Hypnogram hyp;
  hyp.epoch_s = epoch_s;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    StageLabel s = StageLabel::Unscored;
    if (!detail::map_stage_code(line, options.codes, s)) {
      if (options.strict) {
        fail(ErrorCode::UnknownCode,
             "line " + std::to_string(line_no) + ": unknown stage code '" + std::string(line) + "'");
      }
      s = StageLabel::Unscored;
    }
    hyp.stages.push_back(s);
  }
  if (hyp.stages.empty()) fail(ErrorCode::EmptyAnnotation, "hypnogram has no epochs");
  return hyp;
}

/// Inverse of parse_hypnogram for the ucddb convention (SWS is written as 4,
/// unscored as 7).
inline std::string format_hypnogram(const std::vector<StageLabel>& stages) {
  std::ostringstream out;
  for (auto s : stages) {
    switch (s) {
      case StageLabel::W: out << "0\n"; break;
      case StageLabel::REM: out << "1\n"; break;
      case StageLabel::S1: out << "2\n"; break;
      case StageLabel::S2: out << "3\n"; break;
      case StageLabel::SWS: out << "4\n"; break;
      case StageLabel::Unscored: out << "7\n"; break;
    }
  }
  return out.str();
}

}  // namespace sleepsae
