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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sleepsae {

/// Five-class R&K scheme. Source stages 3 and 4 are merged into SWS.
enum class StageLabel : std::uint8_t {
  W = 0,
  S1 = 1,
  S2 = 2,
  SWS = 3,
  REM = 4,
  Unscored = 255,
};

inline constexpr std::size_t kNumStages = 5;

inline constexpr std::array<StageLabel, kNumStages> kScoredStages{
    StageLabel::W, StageLabel::S1, StageLabel::S2, StageLabel::SWS,
    StageLabel::REM};

constexpr bool is_scored(StageLabel s) { return s != StageLabel::Unscored; }

constexpr std::size_t stage_index(StageLabel s) {
  return static_cast<std::size_t>(s);
}

constexpr StageLabel stage_from_index(std::size_t k) {
  return k < kNumStages ? static_cast<StageLabel>(k) : StageLabel::Unscored;
}

constexpr std::string_view stage_name(StageLabel s) {
  switch (s) {
    case StageLabel::W: return "W";
    case StageLabel::S1: return "S1";
    case StageLabel::S2: return "S2";
    case StageLabel::SWS: return "SWS";
    case StageLabel::REM: return "REM";
    case StageLabel::Unscored: return "Unscored";
  }
  return "Unscored";
}

}  // namespace sleepsae
