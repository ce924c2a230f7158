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

#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sleepsae {

enum class ErrorCode {
  TruncatedHeader,
  MalformedField,
  VersionMismatch,
  MissingChannel,
  TruncatedData,
  EmptyAnnotation,
  UnknownCode,
  NyquistViolation,
  NonIntegerRatio,
  ZeroPower,
  ZeroVariance,
  DegenerateFeature,
  DegenerateClass,
  ShapeMismatch,
  Diverged,
  LengthMismatch,
  TooFewRecordings,
  InvalidConfig,
  FormatError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::MalformedField: return "MalformedField";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::EmptyAnnotation: return "EmptyAnnotation";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::NyquistViolation: return "NyquistViolation";
    case ErrorCode::NonIntegerRatio: return "NonIntegerRatio";
    case ErrorCode::ZeroPower: return "ZeroPower";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewRecordings: return "TooFewRecordings";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can react without parsing message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void warn(std::string_view message) {
  std::cerr << "sleepsae: warning: " << message << '\n';
}

}  // namespace sleepsae
