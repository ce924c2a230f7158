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

// Cross-validated evaluation.
//
// Recordings are split whole into train / validation / test (60/20/20). Per
// fold: normalisation statistics and alpha come from the training split,
// the auto-encoder is pre-trained and fine-tuned with early stopping on the
// validation split, the HMM is fitted to training predictions, and the test
// split is classified and smoothed. Test frames feed nothing but scoring.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/classify.hpp"
#include "sleepsae/config.hpp"
#include "sleepsae/dataset.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/feature_io.hpp"
#include "sleepsae/hmm.hpp"
#include "sleepsae/metrics.hpp"
#include "sleepsae/normalize.hpp"
#include "sleepsae/train.hpp"

namespace sleepsae {

/// Runs f(0) .. f(n-1) on up to `jobs` threads. `f` must not throw.
template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// SplitMix64 finaliser, used to derive independent seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct FoldSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Test and validation sets hold round(0.2 n) recordings each (at least one).
/// In disjoint mode the test sets of different folds never overlap.
inline std::vector<FoldSplit> make_folds(std::vector<std::string> ids, std::size_t folds, std::uint64_t seed,
                                         SplitMode mode = SplitMode::Disjoint) {
  if (ids.size() < 3) {
    fail(ErrorCode::TooFewRecordings, "need at least 3 recordings, got " + std::to_string(ids.size()));
  }
  if (folds == 0) fail(ErrorCode::InvalidConfig, "folds must be >= 1");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail(ErrorCode::InvalidConfig, "duplicate recording id");
  const std::size_t n = ids.size();
  const auto fifth = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
  if (mode == SplitMode::Disjoint && folds * fifth > n) {
    fail(ErrorCode::InvalidConfig, std::to_string(folds) + " disjoint test sets of " + std::to_string(fifth) +
                                       " need " + std::to_string(folds * fifth) + " recordings, have " +
                                       std::to_string(n) + " (use split_mode = resample)");
  }
  Rng rng(mix_seed(seed, 0xf01d));
  auto perm = ids;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<FoldSplit> out;
  for (std::size_t f = 0; f < folds; ++f) {
    if (mode == SplitMode::Resample && f > 0) std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t start = mode == SplitMode::Disjoint ? f * fifth : 0;
    FoldSplit s;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= start && i < start + fifth) s.test.push_back(perm[i]);
      else rest.push_back(perm[i]);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    s.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(fifth));
    s.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(fifth), rest.end());
    for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
    out.push_back(std::move(s));
  }
  return out;
}

/// `budget` independent draws, one value per grid list each; the sparsity
/// target and all non-grid settings come from `base`.
inline std::vector<Hyperparams> sample_grid(const GridSpec& grid, const Hyperparams& base, std::size_t budget,
                                            Rng& rng) {
  auto pick = [&](const std::vector<double>& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  std::vector<Hyperparams> out;
  for (std::size_t i = 0; i < budget; ++i) {
    Hyperparams hp = base;
    hp.weight_decay = pick(grid.weight_decay);
    hp.sparsity_weight = pick(grid.sparsity_weight);
    hp.learning_rate = pick(grid.learning_rate);
    hp.attention_penalty = pick(grid.attention_penalty);
    out.push_back(hp);
  }
  return out;
}

/// Index of the highest score; NaN never wins and ties go to the first.
inline std::size_t select_best(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (std::isnan(scores[best]) && !std::isnan(scores[i]))) best = i;
  }
  return best;
}

struct FoldOptions {
  AlphaMode alpha_mode = AlphaMode::Fixed;
  TransformKind transform = TransformKind::SignedLog;
  TransitionSource hmm_transitions = TransitionSource::TrueLabels;
  HmmObservations hmm_observations = HmmObservations::Hard;
  std::optional<AlphaMatrix> alpha_override;  // replaces the t-test alpha in fixed mode
};

struct RecordingPrediction {
  std::string id;
  Prediction prediction;
  std::vector<std::size_t> smoothed;
  std::vector<StageLabel> truth;
};

struct StageFeatureStats {
  Matrix mean;  // stages x features
  Matrix std;   // population standard deviation
  std::vector<std::size_t> count;
};

struct FoldResult {
  std::size_t fold = 0;
  FoldSplit split;
  Hyperparams hyperparams;
  NormStats norm;
  AlphaMatrix alpha;
  SaeParams pretrained;
  Classifier classifier;
  HmmModel hmm;
  TrainingTrace pretrain_trace;
  TrainingTrace finetune_trace;
  double validation_accuracy = 0.0;
  ConfusionMatrix raw;
  ConfusionMatrix smoothed;
  Matrix reconstruction_error;  // stages x features, test split
  StageFeatureStats feature_stats;
  std::vector<RecordingPrediction> predictions;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

inline StageFeatureStats stage_feature_stats(const std::vector<Sequence>& data) {
  const auto d = data.empty() ? Eigen::Index{0} : data.front().frames.cols();
  StageFeatureStats st{Matrix::Zero(kNumStages, d), Matrix::Zero(kNumStages, d), std::vector<std::size_t>(kNumStages, 0)};
  for (const auto& s : data) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      if (!is_scored(s.labels[t]) || !s.valid[t]) continue;
      const auto k = static_cast<Eigen::Index>(stage_index(s.labels[t]));
      st.mean.row(k) += s.frames.row(static_cast<Eigen::Index>(t));
      ++st.count[static_cast<std::size_t>(k)];
    }
  }
  for (std::size_t k = 0; k < kNumStages; ++k) {
    if (st.count[k]) st.mean.row(static_cast<Eigen::Index>(k)) /= static_cast<double>(st.count[k]);
  }
  for (const auto& s : data) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      if (!is_scored(s.labels[t]) || !s.valid[t]) continue;
      const auto k = static_cast<Eigen::Index>(stage_index(s.labels[t]));
      st.std.row(k) += (s.frames.row(static_cast<Eigen::Index>(t)) - st.mean.row(k)).cwiseAbs2();
    }
  }
  for (std::size_t k = 0; k < kNumStages; ++k) {
    if (st.count[k]) {
      st.std.row(static_cast<Eigen::Index>(k)) =
          (st.std.row(static_cast<Eigen::Index>(k)) / static_cast<double>(st.count[k])).cwiseSqrt();
    }
  }
  return st;
}

/// Fixed-mode alpha from the usable training frames.
inline AlphaMatrix training_alpha(const std::vector<Sequence>& train) {
  std::size_t rows = 0;
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.length(); ++t) rows += (is_scored(s.labels[t]) && s.valid[t]) ? 1 : 0;
  }
  const auto d = train.front().frames.cols();
  Matrix x(static_cast<Eigen::Index>(rows), d);
  std::vector<std::size_t> labels;
  labels.reserve(rows);
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      if (!is_scored(s.labels[t]) || !s.valid[t]) continue;
      x.row(static_cast<Eigen::Index>(labels.size())) = s.frames.row(static_cast<Eigen::Index>(t));
      labels.push_back(stage_index(s.labels[t]));
    }
  }
  return ttest_alpha(x, labels);
}

inline std::vector<Sequence> normalized_sequences(const std::vector<const FeatureMatrix*>& mats, const NormStats& st) {
  std::vector<Sequence> out;
  out.reserve(mats.size());
  for (const auto* m : mats) out.push_back(to_sequence(apply_transform(*m, st)));
  return out;
}

inline std::vector<std::size_t> smooth(const HmmModel& hmm, const Prediction& p, HmmObservations obs) {
  return obs == HmmObservations::Hard ? viterbi(hmm, p.labels) : viterbi_posterior(hmm, p.posterior);
}

/// Trained artifacts of one split, before any test-set use.
struct TrainedModel {
  NormStats norm;
  AlphaMatrix alpha;
  PretrainResult pretrain;
  FinetuneResult finetune;
  HmmModel hmm;
};

inline TrainedModel train_model(const std::vector<const FeatureMatrix*>& train,
                                const std::vector<const FeatureMatrix*>& validation, const Hyperparams& hp,
                                const FoldOptions& opt) {
  TrainedModel m;
  m.norm = fit_norm_stats(train, opt.transform);
  const auto train_seq = normalized_sequences(train, m.norm);
  const auto val_seq = normalized_sequences(validation, m.norm);
  switch (opt.alpha_mode) {
    case AlphaMode::Standard: m.alpha = AlphaMatrix::ones(AlphaMode::Standard, kNumFeatures); break;
    case AlphaMode::Adaptive: m.alpha = AlphaMatrix::ones(AlphaMode::Adaptive, kNumFeatures); break;
    case AlphaMode::Fixed: m.alpha = opt.alpha_override ? *opt.alpha_override : training_alpha(train_seq); break;
  }
  m.pretrain = train_unsupervised(train_seq, val_seq, hp, m.alpha);
  m.alpha = m.pretrain.alpha;
  m.finetune = finetune(m.pretrain.params, train_seq, val_seq, hp);
  std::vector<std::vector<std::size_t>> pred, truth;
  for (const auto& s : train_seq) {
    pred.push_back(predict(m.finetune.model, s).labels);
    truth.push_back(to_indices(s.labels));
  }
  m.hmm = fit_hmm(pred, truth, kNumStages, opt.hmm_transitions);
  return m;
}

inline FoldResult run_fold(std::size_t fold, const FoldSplit& split, const std::map<std::string, const FeatureMatrix*>& data,
                           const Hyperparams& hp, const FoldOptions& opt) {
  FoldResult r;
  r.fold = fold;
  r.split = split;
  r.hyperparams = hp;
  auto lookup = [&](const std::vector<std::string>& ids) {
    std::vector<const FeatureMatrix*> out;
    for (const auto& id : ids) {
      auto it = data.find(id);
      if (it == data.end()) fail(ErrorCode::InvalidConfig, "unknown recording '" + id + "'");
      out.push_back(it->second);
    }
    return out;
  };
  try {
    const auto train = lookup(split.train);
    auto m = train_model(train, lookup(split.validation), hp, opt);
    r.norm = m.norm;
    r.alpha = m.alpha;
    r.pretrained = m.pretrain.params;
    r.pretrain_trace = m.pretrain.trace;
    r.classifier = m.finetune.model;
    r.finetune_trace = m.finetune.trace;
    r.validation_accuracy = m.finetune.trace.best_epoch
                                ? m.finetune.trace.epochs[m.finetune.trace.best_epoch - 1].validation
                                : 0.0;
    r.hmm = m.hmm;
    r.feature_stats = stage_feature_stats(normalized_sequences(train, m.norm));

    const auto test_seq = normalized_sequences(lookup(split.test), m.norm);
    r.reconstruction_error = reconstruction_error_by_stage(r.pretrained, test_seq);
    r.raw = ConfusionMatrix::empty();
    r.smoothed = ConfusionMatrix::empty();
    for (const auto& s : test_seq) {
      RecordingPrediction p{s.id, predict(r.classifier, s), {}, s.labels};
      p.smoothed = smooth(r.hmm, p.prediction, opt.hmm_observations);
      const auto truth = to_indices(s.labels);
      r.raw += confusion(p.prediction.labels, truth);
      r.smoothed += confusion(p.smoothed, truth);
      r.predictions.push_back(std::move(p));
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

struct Dataset {
  std::vector<FeatureMatrix> recordings;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& m : recordings) out.push_back(m.recording_id);
    return out;
  }
  std::map<std::string, const FeatureMatrix*> index() const {
    std::map<std::string, const FeatureMatrix*> out;
    for (const auto& m : recordings) out[m.recording_id] = &m;
    return out;
  }
};

/// Every .sfeat file in `dir`, ordered by file name.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::IoError, "dataset directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sfeat") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Dataset d;
  for (const auto& f : files) d.recordings.push_back(load_features(f));
  return d;
}

struct GridTrial {
  Hyperparams hyperparams;
  double validation_accuracy = std::nan("");
  std::string error;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<FoldSplit> splits;
  std::vector<std::vector<GridTrial>> searches;  // one search, or one per fold
  std::vector<FoldResult> folds;
  MeanStd raw_accuracy;
  MeanStd smoothed_accuracy;
  ConfusionMatrix raw_total;
  ConfusionMatrix smoothed_total;
  double seconds = 0.0;  // wall time, kept out of the deterministic report

  bool ok() const {
    return std::all_of(folds.begin(), folds.end(), [](const FoldResult& f) { return f.ok(); });
  }
};

inline FoldOptions fold_options(const ExperimentConfig& c) {
  return {c.alpha_mode, c.transform, c.hmm_transitions, c.hmm_observations, std::nullopt};
}

/// Random search on one split; returns all trials (best by select_best).
/// A single trial is returned unevaluated.
inline std::vector<GridTrial> grid_search(const std::vector<Hyperparams>& candidates, const FoldSplit& split,
                                          const std::map<std::string, const FeatureMatrix*>& data,
                                          const FoldOptions& opt, std::size_t jobs) {
  std::vector<GridTrial> trials(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) trials[i].hyperparams = candidates[i];
  if (candidates.size() <= 1) return trials;
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    try {
      std::vector<const FeatureMatrix*> train, val;
      for (const auto& id : split.train) train.push_back(data.at(id));
      for (const auto& id : split.validation) val.push_back(data.at(id));
      const auto m = train_model(train, val, candidates[i], opt);
      const auto& tr = m.finetune.trace;
      trials[i].validation_accuracy = tr.best_epoch ? tr.epochs[tr.best_epoch - 1].validation : 0.0;
    } catch (const std::exception& e) {
      trials[i].error = e.what();
    }
  });
  return trials;
}

inline std::size_t best_trial(const std::vector<GridTrial>& trials) {
  std::vector<double> s;
  for (const auto& t : trials) s.push_back(t.validation_accuracy);
  return select_best(s);
}

inline ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = config;
  rep.splits = make_folds(dataset.ids(), config.folds, config.seed, config.split_mode);
  const auto data = dataset.index();
  const auto opt = fold_options(config);

  Rng grid_rng(mix_seed(config.seed, 0x6a1d));
  std::vector<Hyperparams> chosen(config.folds);
  const std::size_t searches = config.search_per_fold ? config.folds : 1;
  for (std::size_t s = 0; s < searches; ++s) {
    Hyperparams base = config.base;
    base.seed = mix_seed(config.seed, 100 + s);
    const auto candidates = sample_grid(config.grid, base, config.grid_budget, grid_rng);
    rep.searches.push_back(grid_search(candidates, rep.splits[s], data, opt, config.jobs));
  }
  for (std::size_t f = 0; f < config.folds; ++f) {
    const auto& trials = rep.searches[config.search_per_fold ? f : 0];
    chosen[f] = trials[best_trial(trials)].hyperparams;
    chosen[f].seed = mix_seed(config.seed, 1000 + f);
  }

  rep.folds.resize(config.folds);
  parallel_for(config.folds, config.jobs,
               [&](std::size_t f) { rep.folds[f] = run_fold(f + 1, rep.splits[f], data, chosen[f], opt); });

  std::vector<double> raw, smoothed;
  rep.raw_total = ConfusionMatrix::empty();
  rep.smoothed_total = ConfusionMatrix::empty();
  for (const auto& f : rep.folds) {
    if (!f.ok()) continue;
    raw.push_back(100.0 * f.raw.accuracy());
    smoothed.push_back(100.0 * f.smoothed.accuracy());
    rep.raw_total += f.raw;
    rep.smoothed_total += f.smoothed;
  }
  rep.raw_accuracy = mean_std(raw);
  rep.smoothed_accuracy = mean_std(smoothed);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace sleepsae
