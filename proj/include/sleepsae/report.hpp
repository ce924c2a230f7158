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

// Report directory layout:
//
//   report.json            machine-readable results and config echo
//   summary.txt            human-readable accuracy and confusion tables
//   timing.json            wall-clock time (the only non-deterministic file)
//   fold_<k>/
//     model.json           checkpoint of the fold's trained model
//     alpha.csv  reconstruction_error.csv  feature_stats.csv
//     confusion_raw.csv  confusion_smoothed.csv
//     trace_pretrain.csv  trace_finetune.csv
//     predictions/<id>.csv  per-second posteriors, raw and smoothed labels
//     predictions/<id>.hyp  30 s majority vote of the smoothed labels
//
// A model-order sweep writes one such directory per order (order_<n>/) and
// a sweep.csv next to them.

#pragma once

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "sleepsae/checkpoint.hpp"
#include "sleepsae/harness.hpp"
#include "sleepsae/hypnogram.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/metrics.hpp"

namespace sleepsae {

inline std::string fmt(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline Json to_json(const ExperimentConfig& c) {
  Json channels = Json::array();
  for (const auto& ch : c.channels) channels.push_back(ch);
  return {{"dataset", c.dataset.string()},
          {"channels", channels},
          {"alpha_mode", std::string(to_string(c.alpha_mode))},
          {"model_order", c.base.model_order},
          {"folds", c.folds},
          {"seed", c.seed},
          {"split_mode", std::string(to_string(c.split_mode))},
          {"grid",
           {{"weight_decay", c.grid.weight_decay},
            {"sparsity_weight", c.grid.sparsity_weight},
            {"learning_rate", c.grid.learning_rate},
            {"attention_penalty", c.grid.attention_penalty}}},
          {"grid_budget", c.grid_budget},
          {"search_per_fold", c.search_per_fold},
          {"base_hyperparams", to_json(c.base)},
          {"transform", std::string(to_string(c.transform))},
          {"hmm_transitions", std::string(to_string(c.hmm_transitions))},
          {"hmm_observations", std::string(to_string(c.hmm_observations))}};
}

inline Json to_json(const ConfusionMatrix& c) {
  Json counts = Json::array();
  for (Eigen::Index r = 0; r < c.counts.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < c.counts.cols(); ++k) row.push_back(c.counts(r, k));
    counts.push_back(row);
  }
  return {{"counts", counts}, {"percent", to_json(c.row_percent())}, {"accuracy", c.accuracy()},
          {"frames", c.total()}, {"excluded_frames", c.excluded}};
}

inline Json to_json(const TrainingTrace& t) {
  Json epochs = Json::array();
  for (const auto& e : t.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"learning_rate", e.learning_rate}, {"train_cost", e.train_cost},
                      {"validation", e.validation}, {"mean_alpha", e.mean_alpha}});
  }
  return {{"best_epoch", t.best_epoch}, {"stopped_early", t.stopped_early}, {"epochs", epochs}};
}

inline Json to_json(const FoldSplit& s) {
  return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

inline Json fold_json(const FoldResult& f) {
  Json j = {{"fold", f.fold}, {"ok", f.ok()}, {"split", to_json(f.split)}};
  if (!f.ok()) {
    j["error"] = f.error;
    return j;
  }
  j["hyperparams"] = to_json(f.hyperparams);
  j["validation_accuracy"] = f.validation_accuracy;
  j["raw_accuracy"] = 100.0 * f.raw.accuracy();
  j["smoothed_accuracy"] = 100.0 * f.smoothed.accuracy();
  j["confusion_raw"] = to_json(f.raw);
  j["confusion_smoothed"] = to_json(f.smoothed);
  j["alpha"] = to_json(f.alpha);
  j["reconstruction_error"] = to_json(f.reconstruction_error);
  j["feature_stats"] = {{"mean", to_json(f.feature_stats.mean)},
                        {"std", to_json(f.feature_stats.std)},
                        {"count", f.feature_stats.count}};
  j["pretrain_trace"] = to_json(f.pretrain_trace);
  j["finetune_trace"] = to_json(f.finetune_trace);
  return j;
}

inline Json report_json(const ExperimentReport& r) {
  Json searches = Json::array();
  for (const auto& s : r.searches) {
    Json trials = Json::array();
    for (const auto& t : s) {
      Json tj = {{"weight_decay", t.hyperparams.weight_decay},
                 {"sparsity_weight", t.hyperparams.sparsity_weight},
                 {"learning_rate", t.hyperparams.learning_rate},
                 {"attention_penalty", t.hyperparams.attention_penalty},
                 {"validation_accuracy", t.validation_accuracy}};
      if (!t.error.empty()) tj["error"] = t.error;
      trials.push_back(tj);
    }
    searches.push_back({{"best", best_trial(s)}, {"trials", trials}});
  }
  Json folds = Json::array();
  std::size_t completed = 0;
  for (const auto& f : r.folds) {
    folds.push_back(fold_json(f));
    completed += f.ok() ? 1 : 0;
  }
  return {{"format", "sleepsae-report"},
          {"version", 1},
          {"ok", r.ok()},
          {"config", to_json(r.config)},
          {"accuracy",
           {{"raw", {{"mean", r.raw_accuracy.mean}, {"std", r.raw_accuracy.std}}},
            {"smoothed", {{"mean", r.smoothed_accuracy.mean}, {"std", r.smoothed_accuracy.std}}},
            {"folds_completed", completed},
            {"folds", r.folds.size()}}},
          {"confusion_raw", to_json(r.raw_total)},
          {"confusion_smoothed", to_json(r.smoothed_total)},
          {"grid_search", searches},
          {"folds", folds}};
}

inline std::string stage_matrix_csv(const Matrix& m, const std::vector<std::string>& columns) {
  std::ostringstream out;
  out << "stage";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    out << stage_name(stage_from_index(static_cast<std::size_t>(k)));
    for (Eigen::Index i = 0; i < m.cols(); ++i) out << ',' << fmt(m(k, i));
    out << '\n';
  }
  return out.str();
}

inline std::vector<std::string> stage_columns() {
  std::vector<std::string> out;
  for (auto s : kScoredStages) out.emplace_back(stage_name(s));
  return out;
}

inline std::vector<std::string> feature_columns() {
  return {feature_names().begin(), feature_names().end()};
}

inline std::string confusion_csv(const ConfusionMatrix& c) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& s : stage_columns()) out << ',' << s << "_count";
  for (const auto& s : stage_columns()) out << ',' << s << "_percent";
  out << '\n';
  const Matrix pct = c.row_percent();
  for (Eigen::Index k = 0; k < c.counts.rows(); ++k) {
    out << stage_name(stage_from_index(static_cast<std::size_t>(k)));
    for (Eigen::Index i = 0; i < c.counts.cols(); ++i) out << ',' << c.counts(k, i);
    for (Eigen::Index i = 0; i < c.counts.cols(); ++i) out << ',' << fmt(pct(k, i), 6);
    out << '\n';
  }
  return out.str();
}

inline std::string trace_csv(const TrainingTrace& t) {
  std::ostringstream out;
  out << "epoch,learning_rate,train_cost,validation,mean_alpha,best\n";
  for (const auto& e : t.epochs) {
    out << e.epoch << ',' << fmt(e.learning_rate) << ',' << fmt(e.train_cost) << ',' << fmt(e.validation) << ','
        << fmt(e.mean_alpha) << ',' << (e.epoch == t.best_epoch ? 1 : 0) << '\n';
  }
  return out.str();
}

inline std::string feature_stats_csv(const StageFeatureStats& st) {
  std::ostringstream out;
  out << "stage,feature,mean,std,frames\n";
  for (Eigen::Index k = 0; k < st.mean.rows(); ++k) {
    for (Eigen::Index i = 0; i < st.mean.cols(); ++i) {
      out << stage_name(stage_from_index(static_cast<std::size_t>(k))) << ','
          << feature_names()[static_cast<std::size_t>(i)] << ',' << fmt(st.mean(k, i)) << ',' << fmt(st.std(k, i))
          << ',' << st.count[static_cast<std::size_t>(k)] << '\n';
    }
  }
  return out.str();
}

/// Per-second export: time, five posteriors, raw and smoothed labels, truth.
inline std::string predictions_csv(const RecordingPrediction& p) {
  std::ostringstream out;
  out << "second";
  for (const auto& s : stage_columns()) out << ",p_" << s;
  out << ",raw,smoothed,flagged,truth\n";
  for (std::size_t t = 0; t < p.prediction.labels.size(); ++t) {
    out << t;
    for (Eigen::Index k = 0; k < p.prediction.posterior.cols(); ++k) {
      out << ',' << fmt(p.prediction.posterior(static_cast<Eigen::Index>(t), k), 6);
    }
    out << ',' << stage_name(stage_from_index(p.prediction.labels[t])) << ','
        << stage_name(stage_from_index(p.smoothed[t])) << ',' << static_cast<int>(p.prediction.flagged[t]) << ','
        << stage_name(t < p.truth.size() ? p.truth[t] : StageLabel::Unscored) << '\n';
  }
  return out.str();
}

/// Most frequent label in each full or partial epoch; ties go to the lowest
/// stage index.
inline std::vector<StageLabel> majority_vote(const std::vector<std::size_t>& labels, std::size_t epoch_frames = 30) {
  std::vector<StageLabel> out;
  for (std::size_t start = 0; start < labels.size(); start += epoch_frames) {
    std::vector<std::size_t> count(kNumStages, 0);
    for (std::size_t t = start; t < std::min(labels.size(), start + epoch_frames); ++t) ++count[labels[t]];
    out.push_back(stage_from_index(static_cast<std::size_t>(
        std::max_element(count.begin(), count.end()) - count.begin())));
  }
  return out;
}

inline Checkpoint fold_checkpoint(const FoldResult& f) {
  return {f.hyperparams, f.norm, f.alpha, f.classifier.encoder, f.classifier.head, f.hmm, {}};
}

inline void write_fold(const std::filesystem::path& dir, const FoldResult& f) {
  std::filesystem::create_directories(dir / "predictions");
  if (!f.ok()) {
    write_file_atomic(dir / "error.txt", f.error + "\n");
    return;
  }
  save_checkpoint(dir / "model.json", fold_checkpoint(f));
  write_file_atomic(dir / "alpha.csv", stage_matrix_csv(f.alpha.values, feature_columns()));
  write_file_atomic(dir / "reconstruction_error.csv", stage_matrix_csv(f.reconstruction_error, feature_columns()));
  write_file_atomic(dir / "feature_stats.csv", feature_stats_csv(f.feature_stats));
  write_file_atomic(dir / "confusion_raw.csv", confusion_csv(f.raw));
  write_file_atomic(dir / "confusion_smoothed.csv", confusion_csv(f.smoothed));
  write_file_atomic(dir / "trace_pretrain.csv", trace_csv(f.pretrain_trace));
  write_file_atomic(dir / "trace_finetune.csv", trace_csv(f.finetune_trace));
  for (const auto& p : f.predictions) {
    write_file_atomic(dir / "predictions" / (p.id + ".csv"), predictions_csv(p));
    write_file_atomic(dir / "predictions" / (p.id + ".hyp"), format_hypnogram(majority_vote(p.smoothed)));
  }
}

inline std::string summary_text(const ExperimentReport& r) {
  std::ostringstream out;
  out << "alpha mode: " << to_string(r.config.alpha_mode) << "   model order: " << r.config.base.model_order
      << "   folds: " << r.config.folds << "   seed: " << r.config.seed << "\n\n";
  out << "fold  raw_acc%  smoothed_acc%  hidden  lambda  beta  eta\n";
  for (const auto& f : r.folds) {
    out << std::setw(4) << f.fold << "  ";
    if (!f.ok()) {
      out << "FAILED: " << f.error << '\n';
      continue;
    }
    out << std::setw(8) << fmt(100.0 * f.raw.accuracy(), 4) << "  " << std::setw(13)
        << fmt(100.0 * f.smoothed.accuracy(), 4) << "  " << std::setw(6) << f.hyperparams.hidden_units << "  "
        << fmt(f.hyperparams.weight_decay) << "  " << fmt(f.hyperparams.sparsity_weight) << "  "
        << fmt(f.hyperparams.learning_rate) << '\n';
  }
  out << "\naccuracy (mean +- std over completed folds)\n";
  out << "  raw:      " << fmt(r.raw_accuracy.mean, 4) << " +- " << fmt(r.raw_accuracy.std, 3) << '\n';
  out << "  smoothed: " << fmt(r.smoothed_accuracy.mean, 4) << " +- " << fmt(r.smoothed_accuracy.std, 3) << '\n';
  out << "\nconfusion (smoothed, row %, all folds)\n      ";
  for (const auto& s : stage_columns()) out << std::setw(8) << s;
  out << '\n';
  const Matrix pct = r.smoothed_total.row_percent();
  for (Eigen::Index k = 0; k < pct.rows(); ++k) {
    out << std::setw(6) << stage_name(stage_from_index(static_cast<std::size_t>(k)));
    for (Eigen::Index i = 0; i < pct.cols(); ++i) out << std::setw(8) << fmt(pct(k, i), 3);
    out << '\n';
  }
  out << "\nunscored frames excluded from scoring: " << r.smoothed_total.excluded << '\n';
  if (!r.ok()) out << "\nSOME FOLDS FAILED\n";
  return out.str();
}

inline void write_report(const std::filesystem::path& dir, const ExperimentReport& r) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", report_json(r).dump(1) + "\n");
  write_file_atomic(dir / "summary.txt", summary_text(r));
  write_file_atomic(dir / "timing.json", Json{{"seconds", r.seconds}}.dump(1) + "\n");
  for (const auto& f : r.folds) write_fold(dir / ("fold_" + std::to_string(f.fold)), f);
}

/// Accuracy against model order, one row per order.
inline std::string sweep_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "model_order,alpha_mode,raw_mean,raw_std,smoothed_mean,smoothed_std,ok\n";
  for (const auto& r : reports) {
    out << r.config.base.model_order << ',' << to_string(r.config.alpha_mode) << ',' << fmt(r.raw_accuracy.mean) << ','
        << fmt(r.raw_accuracy.std) << ',' << fmt(r.smoothed_accuracy.mean) << ',' << fmt(r.smoothed_accuracy.std)
        << ',' << (r.ok() ? 1 : 0) << '\n';
  }
  return out.str();
}

inline void write_sweep(const std::filesystem::path& dir, const std::vector<ExperimentReport>& reports) {
  std::filesystem::create_directories(dir);
  for (const auto& r : reports) write_report(dir / ("order_" + std::to_string(r.config.base.model_order)), r);
  write_file_atomic(dir / "sweep.csv", sweep_csv(reports));
}

}  // namespace sleepsae
