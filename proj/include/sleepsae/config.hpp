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

// Experiment configuration: one `key = value` pair per line, `#` starts a
// comment, lists are comma separated. Unknown keys are errors.
//
//   dataset            directory of .sfeat files (relative to the config file)
//   output             report directory                      [report]
//   alpha_mode         standard | fixed | adaptive           [fixed]
//   model_order        n                                     [0]
//   folds              cross-validation folds                [5]
//   seed               master seed                           [1]
//   split_mode         disjoint | resample                   [disjoint]
//   grid.weight_decay  list                                  [1e-2, 1e-3, 1e-4, 1e-5]
//   grid.sparsity_weight                                     [3, 0.3, 0.03]
//   grid.learning_rate                                       [1e-3, 1e-4, 1e-5]
//   grid.attention_penalty                                   [0.05]
//   grid_budget        random grid trials                    [8]
//   search_per_fold    repeat the search in every fold       [false]
//   hidden_units, patience, max_epochs, batch_segments, segment_frames,
//   momentum, sparsity_target, lr_decay_epochs, alpha_learning_rate,
//   tied_weights       training settings (see Hyperparams)
//   transform          signed_log | identity                 [signed_log]
//   hmm_transitions    true | predicted                      [true]
//   hmm_observations   hard | posterior                      [hard]
//   jobs               worker threads                        [1]
//   channels.eeg, channels.eog1, channels.eog2, channels.emg  EDF labels

#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/hmm.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/normalize.hpp"

namespace sleepsae {

enum class SplitMode { Disjoint, Resample };
enum class HmmObservations { Hard, Posterior };

inline std::string_view to_string(SplitMode m) { return m == SplitMode::Disjoint ? "disjoint" : "resample"; }
inline std::string_view to_string(HmmObservations o) { return o == HmmObservations::Hard ? "hard" : "posterior"; }

struct GridSpec {
  std::vector<double> weight_decay{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<double> sparsity_weight{3, 0.3, 0.03};
  std::vector<double> learning_rate{1e-3, 1e-4, 1e-5};
  std::vector<double> attention_penalty{0.05};
};

inline const std::array<std::string, 4> kDefaultChannels{"C3A2", "Lefteye", "RightEye", "EMG"};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path output = "report";
  std::array<std::string, 4> channels = kDefaultChannels;
  AlphaMode alpha_mode = AlphaMode::Fixed;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  SplitMode split_mode = SplitMode::Disjoint;
  GridSpec grid;
  std::size_t grid_budget = 8;
  bool search_per_fold = false;
  Hyperparams base;  // model_order, hidden_units, ... ; grid fields are overwritten
  TransformKind transform = TransformKind::SignedLog;
  TransitionSource hmm_transitions = TransitionSource::TrueLabels;
  HmmObservations hmm_observations = HmmObservations::Hard;
  std::size_t jobs = 1;

  void validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
    if (folds == 0) bad("folds must be >= 1");
    if (grid_budget == 0) bad("grid_budget must be >= 1");
    if (jobs == 0) bad("jobs must be >= 1");
    if (grid.weight_decay.empty() || grid.sparsity_weight.empty() || grid.learning_rate.empty() ||
        grid.attention_penalty.empty()) {
      bad("grid lists must be non-empty");
    }
    base.validate();
  }
};

namespace detail {

inline std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + std::string(v) + "' is not a number");
  }
  return out;
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + std::string(v) + "' is not a non-negative integer");
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + std::string(v) + "' is not a boolean");
}

inline std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, trim_view(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) fail(ErrorCode::InvalidConfig, std::string(key) + ": empty list");
  return out;
}

inline HmmObservations parse_observations(std::string_view v) {
  if (v == "hard") return HmmObservations::Hard;
  if (v == "posterior") return HmmObservations::Posterior;
  fail(ErrorCode::InvalidConfig, "unknown hmm_observations '" + std::string(v) + "'");
}

inline SplitMode parse_split(std::string_view v) {
  if (v == "disjoint") return SplitMode::Disjoint;
  if (v == "resample") return SplitMode::Resample;
  fail(ErrorCode::InvalidConfig, "unknown split_mode '" + std::string(v) + "'");
}

}  // namespace detail

/// Applies one key to a config; shared by the file parser and CLI overrides.
inline void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
  using namespace detail;
  auto& hp = c.base;
  const auto u = [&] { return parse_uint(key, value); };
  const auto d = [&] { return parse_double(key, value); };
  if (key == "dataset") c.dataset = std::string(value);
  else if (key == "output") c.output = std::string(value);
  else if (key == "channels.eeg") c.channels[0] = std::string(value);
  else if (key == "channels.eog1") c.channels[1] = std::string(value);
  else if (key == "channels.eog2") c.channels[2] = std::string(value);
  else if (key == "channels.emg") c.channels[3] = std::string(value);
  else if (key == "alpha_mode") c.alpha_mode = parse_alpha_mode(value);
  else if (key == "model_order") hp.model_order = u();
  else if (key == "folds") c.folds = u();
  else if (key == "seed") c.seed = u();
  else if (key == "split_mode") c.split_mode = parse_split(value);
  else if (key == "grid.weight_decay") c.grid.weight_decay = parse_list(key, value);
  else if (key == "grid.sparsity_weight") c.grid.sparsity_weight = parse_list(key, value);
  else if (key == "grid.learning_rate") c.grid.learning_rate = parse_list(key, value);
  else if (key == "grid.attention_penalty") c.grid.attention_penalty = parse_list(key, value);
  else if (key == "grid_budget") c.grid_budget = u();
  else if (key == "search_per_fold") c.search_per_fold = parse_bool(key, value);
  else if (key == "hidden_units") hp.hidden_units = u();
  else if (key == "patience") hp.patience = u();
  else if (key == "max_epochs") hp.max_epochs = u();
  else if (key == "batch_segments") hp.batch_segments = u();
  else if (key == "segment_frames") hp.segment_frames = u();
  else if (key == "momentum") hp.momentum = d();
  else if (key == "sparsity_target") hp.sparsity_target = d();
  else if (key == "lr_decay_epochs") hp.lr_decay_epochs = d();
  else if (key == "alpha_learning_rate") hp.alpha_learning_rate = d();
  else if (key == "tied_weights") hp.tied_weights = parse_bool(key, value);
  else if (key == "transform") c.transform = parse_transform(value);
  else if (key == "hmm_transitions") c.hmm_transitions = parse_transition_source(value);
  else if (key == "hmm_observations") c.hmm_observations = parse_observations(value);
  else if (key == "jobs") c.jobs = u();
  else fail(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim_view(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(c, detail::trim_view(line.substr(0, eq)), detail::trim_view(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

/// Reads a config file; relative dataset and output paths are resolved
/// against the file's directory.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  auto c = parse_config(read_file_text(path));
  const auto dir = path.parent_path();
  if (!c.dataset.empty() && c.dataset.is_relative()) c.dataset = dir / c.dataset;
  if (c.output.is_relative()) c.output = dir / c.output;
  return c;
}

inline std::string format_list(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

}  // namespace sleepsae
