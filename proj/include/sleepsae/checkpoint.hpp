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

// JSON (de)serialisation of trained artifacts. Doubles are written with
// round-trip precision, so a save/load cycle is exact.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/classify.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/hmm.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/normalize.hpp"

namespace sleepsae {

using Json = nlohmann::ordered_json;

inline Json to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Json to_json(const Vector& v) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
  return data;
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    fail(ErrorCode::FormatError, "matrix data does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline Json to_json(const Hyperparams& hp) {
  return {{"weight_decay", hp.weight_decay},
          {"sparsity_weight", hp.sparsity_weight},
          {"sparsity_target", hp.sparsity_target},
          {"learning_rate", hp.learning_rate},
          {"lr_decay_epochs", hp.lr_decay_epochs},
          {"momentum", hp.momentum},
          {"attention_penalty", hp.attention_penalty},
          {"alpha_learning_rate", hp.alpha_learning_rate},
          {"hidden_units", hp.hidden_units},
          {"model_order", hp.model_order},
          {"patience", hp.patience},
          {"max_epochs", hp.max_epochs},
          {"batch_segments", hp.batch_segments},
          {"segment_frames", hp.segment_frames},
          {"tied_weights", hp.tied_weights},
          {"seed", hp.seed}};
}

inline Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams hp;
  hp.weight_decay = j.at("weight_decay").get<double>();
  hp.sparsity_weight = j.at("sparsity_weight").get<double>();
  hp.sparsity_target = j.at("sparsity_target").get<double>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.lr_decay_epochs = j.at("lr_decay_epochs").get<double>();
  hp.momentum = j.at("momentum").get<double>();
  hp.attention_penalty = j.at("attention_penalty").get<double>();
  hp.alpha_learning_rate = j.at("alpha_learning_rate").get<double>();
  hp.hidden_units = j.at("hidden_units").get<std::size_t>();
  hp.model_order = j.at("model_order").get<std::size_t>();
  hp.patience = j.at("patience").get<std::size_t>();
  hp.max_epochs = j.at("max_epochs").get<std::size_t>();
  hp.batch_segments = j.at("batch_segments").get<std::size_t>();
  hp.segment_frames = j.at("segment_frames").get<std::size_t>();
  hp.tied_weights = j.at("tied_weights").get<bool>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  return hp;
}

inline Json to_json(const NormStats& st) {
  return {{"transform", std::string(to_string(st.transform))}, {"mean", st.mean}, {"std", st.std}};
}

inline NormStats norm_stats_from_json(const Json& j) {
  NormStats st;
  st.transform = parse_transform(j.at("transform").get<std::string>());
  st.mean = j.at("mean").get<std::array<double, kNumFeatures>>();
  st.std = j.at("std").get<std::array<double, kNumFeatures>>();
  return st;
}

inline Json to_json(const AlphaMatrix& a) {
  return {{"mode", std::string(to_string(a.mode))}, {"values", to_json(a.values)}};
}

inline AlphaMatrix alpha_from_json(const Json& j) {
  return {parse_alpha_mode(j.at("mode").get<std::string>()), matrix_from_json(j.at("values"))};
}

inline Json to_json(const SaeParams& p) {
  Json a = Json::array(), b = Json::array();
  for (const auto& m : p.A) a.push_back(to_json(m));
  for (const auto& m : p.B) b.push_back(to_json(m));
  Json j = {{"W", to_json(p.W)}, {"bh", to_json(p.bh)}, {"bv", to_json(p.bv)}, {"A", a}, {"B", b}};
  if (!p.tied()) j["W_dec"] = to_json(p.W_dec);
  return j;
}

inline SaeParams sae_params_from_json(const Json& j) {
  SaeParams p;
  p.W = matrix_from_json(j.at("W"));
  p.bh = vector_from_json(j.at("bh"));
  p.bv = vector_from_json(j.at("bv"));
  for (const auto& m : j.at("A")) p.A.push_back(matrix_from_json(m));
  for (const auto& m : j.at("B")) p.B.push_back(matrix_from_json(m));
  if (j.contains("W_dec")) p.W_dec = matrix_from_json(j.at("W_dec"));
  const auto h = p.W.rows(), v = p.W.cols();
  bool ok = p.bh.size() == h && p.bv.size() == v && p.A.size() == p.B.size();
  for (const auto& m : p.A) ok = ok && m.rows() == h && m.cols() == v;
  for (const auto& m : p.B) ok = ok && m.rows() == v && m.cols() == v;
  if (!p.tied()) ok = ok && p.W_dec.rows() == v && p.W_dec.cols() == h;
  if (!ok) fail(ErrorCode::FormatError, "inconsistent auto-encoder parameter shapes");
  return p;
}

inline Json to_json(const SoftmaxHead& h) { return {{"U", to_json(h.U)}, {"c", to_json(h.c)}}; }

inline SoftmaxHead head_from_json(const Json& j) {
  SoftmaxHead h{matrix_from_json(j.at("U")), vector_from_json(j.at("c"))};
  if (h.c.size() != h.U.rows()) fail(ErrorCode::FormatError, "softmax head shapes");
  return h;
}

inline Json to_json(const HmmModel& h) {
  return {{"transition", to_json(h.transition)}, {"emission", to_json(h.emission)}, {"initial", to_json(h.initial)}};
}

inline HmmModel hmm_from_json(const Json& j) {
  return {matrix_from_json(j.at("transition")), matrix_from_json(j.at("emission")), vector_from_json(j.at("initial"))};
}

/// Everything needed to classify new recordings.
struct Checkpoint {
  Hyperparams hyperparams;
  NormStats norm;
  AlphaMatrix alpha;
  SaeParams params;
  std::optional<SoftmaxHead> head;
  std::optional<HmmModel> hmm;
  std::string rng_state;
};

inline constexpr int kCheckpointVersion = 1;

inline Json to_json(const Checkpoint& c) {
  Json j = {{"format", "sleepsae-model"},
            {"version", kCheckpointVersion},
            {"hyperparams", to_json(c.hyperparams)},
            {"norm", to_json(c.norm)},
            {"alpha", to_json(c.alpha)},
            {"params", to_json(c.params)}};
  if (c.head) j["head"] = to_json(*c.head);
  if (c.hmm) j["hmm"] = to_json(*c.hmm);
  j["rng_state"] = c.rng_state;
  return j;
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", "") != "sleepsae-model") fail(ErrorCode::FormatError, "not a model checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) fail(ErrorCode::FormatError, "unsupported checkpoint version");
  Checkpoint c;
  c.hyperparams = hyperparams_from_json(j.at("hyperparams"));
  c.norm = norm_stats_from_json(j.at("norm"));
  c.alpha = alpha_from_json(j.at("alpha"));
  c.params = sae_params_from_json(j.at("params"));
  if (j.contains("head")) c.head = head_from_json(j.at("head"));
  if (j.contains("hmm")) c.hmm = hmm_from_json(j.at("hmm"));
  c.rng_state = j.value("rng_state", "");
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, to_json(c).dump(1) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto text = read_file_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

}  // namespace sleepsae
