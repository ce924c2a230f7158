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

// sleepsae command-line driver.
//
// Exit status: 0 success, 1 runtime failure (including any failed fold),
// 2 usage error. Errors go to stderr as "sleepsae: error[<Code>]: <message>".

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sleepsae.hpp"

namespace fs = std::filesystem;
using namespace sleepsae;

namespace {

std::string data_root() {
  const char* v = std::getenv("SLEEPSAE_DATA");
  return v ? v : "";
}

std::vector<std::string> montage(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = csv.find(',', pos);
    out.push_back(csv.substr(pos, comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.size() != 4) fail(ErrorCode::InvalidConfig, "--channels needs four names: EEG,EOG1,EOG2,EMG");
  return out;
}

std::string default_montage() {
  return kDefaultChannels[0] + "," + kDefaultChannels[1] + "," + kDefaultChannels[2] + "," + kDefaultChannels[3];
}

/// Expands directories into their files with the given extension.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  if (out.empty()) fail(ErrorCode::IoError, "no " + ext + " inputs found");
  return out;
}

std::vector<FeatureMatrix> load_all(const std::vector<std::string>& inputs) {
  std::vector<FeatureMatrix> out;
  for (const auto& p : expand_inputs(inputs, ".sfeat")) out.push_back(load_features(p));
  return out;
}

std::vector<const FeatureMatrix*> pointers(const std::vector<FeatureMatrix>& v) {
  std::vector<const FeatureMatrix*> out;
  for (const auto& m : v) out.push_back(&m);
  return out;
}

struct HpFlags {
  Hyperparams hp;
  std::string alpha_mode = "fixed";
  std::string transform = "signed_log";
};

void add_hp_flags(CLI::App* sub, HpFlags& f) {
  auto& hp = f.hp;
  sub->add_option("--alpha-mode", f.alpha_mode, "Attention mode")
      ->check(CLI::IsMember({"standard", "fixed", "adaptive"}))
      ->capture_default_str();
  sub->add_option("--model-order", hp.model_order, "Number of past frames n")->capture_default_str();
  sub->add_option("--seed", hp.seed, "Random seed")->capture_default_str();
  sub->add_option("--hidden-units", hp.hidden_units, "Hidden layer size")->capture_default_str();
  sub->add_option("--learning-rate", hp.learning_rate, "Initial learning rate")->capture_default_str();
  sub->add_option("--weight-decay", hp.weight_decay, "Weight decay lambda")->capture_default_str();
  sub->add_option("--sparsity-weight", hp.sparsity_weight, "Sparsity weight beta")->capture_default_str();
  sub->add_option("--sparsity-target", hp.sparsity_target, "Target activation rho")->capture_default_str();
  sub->add_option("--attention-penalty", hp.attention_penalty, "Adaptive alpha penalty gamma")->capture_default_str();
  sub->add_option("--max-epochs", hp.max_epochs, "Epoch limit")->capture_default_str();
  sub->add_option("--patience", hp.patience, "Early-stopping patience")->capture_default_str();
  sub->add_option("--transform", f.transform, "Feature compression")
      ->check(CLI::IsMember({"signed_log", "identity"}))
      ->capture_default_str();
}

std::vector<Sequence> sequences(const std::vector<FeatureMatrix>& mats, const NormStats& st) {
  return normalized_sequences(pointers(mats), st);
}

void print_trace(const char* what, const TrainingTrace& t) {
  std::cerr << what << ": " << t.epochs.size() << " epochs, best epoch " << t.best_epoch << " ("
            << fmt(t.epochs.empty() ? 0.0 : t.epochs[t.best_epoch - 1].validation, 6) << ")\n";
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) return {0, std::stoul(s)};
    return {std::stoul(s.substr(0, dots)), std::stoul(s.substr(dots + 2))};
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "--model-order-sweep expects A..B, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sleep staging with a selective-attention sparse auto-encoder"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert EDF + hypnogram pairs into .srec recordings");
  std::string in_edf, in_hyp, in_out, in_dir, in_channels = default_montage(), in_codes = "ucddb";
  bool in_strict = false;
  ingest->add_option("--edf", in_edf, "EDF file (single-recording mode)");
  ingest->add_option("--hypnogram", in_hyp, "Hypnogram text file, one stage code per 30 s epoch");
  ingest->add_option("--dataset", in_dir, "Directory of <id>.rec/.edf + <id>_stage.txt pairs (default $SLEEPSAE_DATA)");
  ingest->add_option("--out", in_out, "Output .srec file, or directory in dataset mode")->required();
  ingest->add_option("--channels", in_channels, "EEG,EOG1,EOG2,EMG labels")->capture_default_str();
  ingest->add_option("--codes", in_codes, "Hypnogram code set")->check(CLI::IsMember({"ucddb", "rk"}))->capture_default_str();
  ingest->add_flag("--strict", in_strict, "Reject unknown stage codes instead of marking them unscored");

  // extract
  auto* extract = app.add_subcommand("extract", "Condition signals and compute the 28 per-second features");
  std::vector<std::string> ex_in;
  std::string ex_out;
  bool ex_causal = false, ex_csv = false;
  extract->add_option("--in", ex_in, ".srec files or directories")->required();
  extract->add_option("--out", ex_out, "Output .sfeat file (one input) or directory")->required();
  extract->add_flag("--causal", ex_causal, "Single-pass causal filtering instead of zero-phase");
  extract->add_flag("--csv", ex_csv, "Also write a .csv next to each feature file");

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "Unsupervised pre-training of the auto-encoder");
  HpFlags pt;
  std::vector<std::string> pt_train, pt_val;
  std::string pt_out;
  pretrain->add_option("--train", pt_train, "Training .sfeat files or directories")->required();
  pretrain->add_option("--validation", pt_val, "Validation .sfeat files or directories")->required();
  pretrain->add_option("--out", pt_out, "Output model checkpoint (.json)")->required();
  add_hp_flags(pretrain, pt);

  // finetune
  auto* fine = app.add_subcommand("finetune", "Supervised fine-tuning and HMM fitting");
  std::vector<std::string> ft_train, ft_val;
  std::string ft_model, ft_out, ft_trans = "true";
  fine->add_option("--model", ft_model, "Pre-trained checkpoint")->required();
  fine->add_option("--train", ft_train, "Training .sfeat files or directories")->required();
  fine->add_option("--validation", ft_val, "Validation .sfeat files or directories")->required();
  fine->add_option("--out", ft_out, "Output checkpoint")->required();
  fine->add_option("--hmm-transitions", ft_trans, "Transition counts from true or predicted labels")
      ->check(CLI::IsMember({"true", "predicted"}))
      ->capture_default_str();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Classify recordings with a fine-tuned checkpoint");
  std::vector<std::string> ev_test;
  std::string ev_model, ev_out, ev_obs = "hard";
  std::size_t ev_jobs = 1;
  eval->add_option("--model", ev_model, "Fine-tuned checkpoint")->required();
  eval->add_option("--test", ev_test, ".sfeat files or directories")->required();
  eval->add_option("--out", ev_out, "Output directory for predictions")->required();
  eval->add_option("--hmm-observations", ev_obs, "HMM observation type")
      ->check(CLI::IsMember({"hard", "posterior"}))
      ->capture_default_str();
  eval->add_option("--jobs", ev_jobs, "Worker threads")->capture_default_str();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Cross-validated experiment from a config file");
  std::string xp_config, xp_out, xp_dataset, xp_mode, xp_sweep;
  std::optional<std::uint64_t> xp_seed;
  std::optional<std::size_t> xp_order, xp_jobs;
  exp->add_option("--config", xp_config, "Config file (key = value)")->required();
  exp->add_option("--out", xp_out, "Report directory (overrides config output)");
  exp->add_option("--dataset", xp_dataset, "Feature directory (overrides config; default $SLEEPSAE_DATA)");
  exp->add_option("--seed", xp_seed, "Override the config seed");
  exp->add_option("--alpha-mode", xp_mode, "standard | fixed | adaptive")
      ->check(CLI::IsMember({"standard", "fixed", "adaptive"}));
  auto* order_opt = exp->add_option("--model-order", xp_order, "Model order n");
  exp->add_option("--model-order-sweep", xp_sweep, "Run every order in A..B (or 0..B given B)")->excludes(order_opt);
  exp->add_option("--jobs", xp_jobs, "Worker threads for folds and grid trials");

  // plot
  auto* plot = app.add_subcommand("plot", "SVG figures from report directories");
  std::vector<std::string> pl_reports;
  std::string pl_out;
  bool pl_smoothed = false;
  plot->add_option("--report", pl_reports, "Report or sweep directory (repeatable)")->required();
  plot->add_option("--out", pl_out, "Output directory for .svg files")->required();
  plot->add_flag("--smoothed", pl_smoothed, "Plot smoothed instead of raw accuracy");

  // inspect-alpha
  auto* inspect = app.add_subcommand("inspect-alpha", "Print a checkpoint's alpha matrix as CSV");
  std::string ia_model;
  inspect->add_option("--model", ia_model, "Checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "sleepsae: error[Usage]: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest) {
      const auto channels = montage(in_channels);
      HypnogramOptions hopt{in_codes == "rk" ? HypnogramCodes::Rk : HypnogramCodes::Ucddb, in_strict};
      auto convert = [&](const fs::path& edf, const fs::path& hyp, const fs::path& out) {
        auto rec = load_edf(edf, channels);
        const auto h = parse_hypnogram(read_file_text(hyp), 30.0, hopt);
        rec.stages = h.stages;
        rec.epoch_s = h.epoch_s;
        save_recording(out, rec);
        std::cerr << rec.subject_id << ": " << rec.duration() << " s, " << rec.stages.size() << " epochs\n";
      };
      if (!in_edf.empty()) {
        if (in_hyp.empty()) fail(ErrorCode::InvalidConfig, "--hypnogram is required with --edf");
        convert(in_edf, in_hyp, in_out);
      } else {
        if (in_dir.empty()) in_dir = data_root();
        if (in_dir.empty()) fail(ErrorCode::InvalidConfig, "give --edf/--hypnogram or --dataset (or set SLEEPSAE_DATA)");
        fs::create_directories(in_out);
        std::size_t n = 0;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(in_dir)) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& p : files) {
          if (p.extension() != ".rec" && p.extension() != ".edf") continue;
          const auto hyp = p.parent_path() / (p.stem().string() + "_stage.txt");
          if (!fs::exists(hyp)) {
            warn("no hypnogram for " + p.string() + "; skipped");
            continue;
          }
          convert(p, hyp, fs::path(in_out) / (p.stem().string() + ".srec"));
          ++n;
        }
        if (n == 0) fail(ErrorCode::IoError, "no EDF/hypnogram pairs in " + in_dir);
      }
    } else if (*extract) {
      const auto inputs = expand_inputs(ex_in, ".srec");
      PrepOptions prep;
      prep.zero_phase = !ex_causal;
      const bool single = inputs.size() == 1 && fs::path(ex_out).extension() == ".sfeat";
      if (!single) fs::create_directories(ex_out);
      for (const auto& p : inputs) {
        const auto rec = load_recording(p);
        const auto m = extract_features(preprocess(rec, prep));
        const fs::path out = single ? fs::path(ex_out) : fs::path(ex_out) / (p.stem().string() + ".sfeat");
        save_features(out, m);
        if (ex_csv) write_file_atomic(fs::path(out).replace_extension(".csv"), features_to_csv(m));
        std::size_t invalid = 0;
        for (auto v : m.valid) invalid += v ? 0 : 1;
        std::cerr << m.recording_id << ": " << m.rows << " frames x " << kNumFeatures << " features, " << invalid
                  << " flagged\n";
      }
    } else if (*pretrain) {
      const auto train = load_all(pt_train);
      const auto val = load_all(pt_val);
      Checkpoint c;
      c.hyperparams = pt.hp;
      c.norm = fit_norm_stats(pointers(train), parse_transform(pt.transform));
      const auto ts = sequences(train, c.norm);
      const auto mode = parse_alpha_mode(pt.alpha_mode);
      AlphaMatrix alpha = mode == AlphaMode::Fixed ? training_alpha(ts) : AlphaMatrix::ones(mode, kNumFeatures);
      auto r = train_unsupervised(ts, sequences(val, c.norm), pt.hp, alpha);
      print_trace("pre-training", r.trace);
      c.alpha = r.alpha;
      c.params = r.params;
      c.rng_state = r.rng_state;
      save_checkpoint(pt_out, c);
    } else if (*fine) {
      auto c = load_checkpoint(ft_model);
      const auto train = load_all(ft_train);
      const auto ts = sequences(train, c.norm);
      auto r = finetune(c.params, ts, sequences(load_all(ft_val), c.norm), c.hyperparams);
      print_trace("fine-tuning", r.trace);
      std::vector<std::vector<std::size_t>> pred, truth;
      for (const auto& s : ts) {
        pred.push_back(predict(r.model, s).labels);
        truth.push_back(to_indices(s.labels));
      }
      c.params = r.model.encoder;
      c.head = r.model.head;
      c.hmm = fit_hmm(pred, truth, kNumStages, parse_transition_source(ft_trans));
      save_checkpoint(ft_out, c);
    } else if (*eval) {
      const auto c = load_checkpoint(ev_model);
      if (!c.head || !c.hmm) fail(ErrorCode::FormatError, "checkpoint is not fine-tuned (run finetune first)");
      const Classifier model{c.params, *c.head};
      const auto mats = load_all(ev_test);
      const auto seqs = sequences(mats, c.norm);
      const auto obs = ev_obs == "hard" ? HmmObservations::Hard : HmmObservations::Posterior;
      std::vector<RecordingPrediction> preds(seqs.size());
      parallel_for(seqs.size(), ev_jobs, [&](std::size_t i) {
        preds[i] = {seqs[i].id, predict(model, seqs[i]), {}, seqs[i].labels};
        preds[i].smoothed = smooth(*c.hmm, preds[i].prediction, obs);
      });
      fs::create_directories(ev_out);
      auto raw = ConfusionMatrix::empty(), smoothed = ConfusionMatrix::empty();
      for (const auto& p : preds) {
        write_file_atomic(fs::path(ev_out) / (p.id + ".csv"), predictions_csv(p));
        write_file_atomic(fs::path(ev_out) / (p.id + ".hyp"), format_hypnogram(majority_vote(p.smoothed)));
        raw += confusion(p.prediction.labels, to_indices(p.truth));
        smoothed += confusion(p.smoothed, to_indices(p.truth));
      }
      write_file_atomic(fs::path(ev_out) / "confusion_raw.csv", confusion_csv(raw));
      write_file_atomic(fs::path(ev_out) / "confusion_smoothed.csv", confusion_csv(smoothed));
      std::cout << "raw accuracy: " << fmt(100.0 * raw.accuracy(), 4) << "%  smoothed accuracy: "
                << fmt(100.0 * smoothed.accuracy(), 4) << "%  (" << raw.total() << " scored frames)\n";
    } else if (*exp) {
      auto config = load_config(xp_config);
      if (!xp_out.empty()) config.output = xp_out;
      if (!xp_dataset.empty()) config.dataset = xp_dataset;
      if (config.dataset.empty()) config.dataset = data_root();
      if (config.dataset.empty()) fail(ErrorCode::InvalidConfig, "no dataset (config key, --dataset or SLEEPSAE_DATA)");
      if (xp_seed) config.seed = *xp_seed;
      if (!xp_mode.empty()) config.alpha_mode = parse_alpha_mode(xp_mode);
      if (xp_order) config.base.model_order = *xp_order;
      if (xp_jobs) config.jobs = *xp_jobs;
      config.validate();
      const auto dataset = load_dataset(config.dataset);
      bool ok = true;
      if (!xp_sweep.empty()) {
        const auto [lo, hi] = parse_range(xp_sweep);
        if (lo > hi) fail(ErrorCode::InvalidConfig, "empty model-order range");
        std::vector<ExperimentReport> reports;
        for (std::size_t n = lo; n <= hi; ++n) {
          auto c = config;
          c.base.model_order = n;
          reports.push_back(run_experiment(c, dataset));
          ok = ok && reports.back().ok();
          std::cerr << "order " << n << ": raw " << fmt(reports.back().raw_accuracy.mean, 4) << "%, smoothed "
                    << fmt(reports.back().smoothed_accuracy.mean, 4) << "%\n";
        }
        write_sweep(config.output, reports);
        std::cout << sweep_csv(reports);
      } else {
        const auto rep = run_experiment(config, dataset);
        write_report(config.output, rep);
        std::cout << summary_text(rep);
        ok = rep.ok();
      }
      if (!ok) {
        std::cerr << "sleepsae: error[FoldFailed]: at least one fold failed; see the report\n";
        return 1;
      }
    } else if (*plot) {
      fs::create_directories(pl_out);
      std::vector<CsvTable> sweeps;
      std::size_t written = 0;
      for (const auto& dir : pl_reports) {
        const fs::path root(dir);
        if (fs::exists(root / "sweep.csv")) sweeps.push_back(parse_csv(read_file_text(root / "sweep.csv")));
        std::vector<fs::path> folds;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
          if (e.is_directory() && e.path().filename().string().rfind("fold_", 0) == 0) folds.push_back(e.path());
        }
        std::sort(folds.begin(), folds.end());
        for (const auto& f : folds) {
          const auto tag = fs::relative(f, root.parent_path()).string();
          std::string stem = tag;
          std::replace(stem.begin(), stem.end(), '/', '_');
          for (const auto& [file, title] : {std::pair{"alpha.csv", "alpha"}, std::pair{"reconstruction_error.csv",
                                                                                      "reconstruction error"}}) {
            if (!fs::exists(f / file)) continue;
            std::vector<std::string> rows;
            const auto t = parse_csv(read_file_text(f / file));
            const Matrix m = csv_matrix(t, &rows);
            const std::vector<std::string> cols(t.header.begin() + 1, t.header.end());
            const auto name = stem + "_" + fs::path(file).stem().string() + ".svg";
            write_file_atomic(fs::path(pl_out) / name, heatmap_svg(m, rows, cols, std::string(title) + " (" + tag + ")"));
            ++written;
          }
        }
      }
      if (!sweeps.empty()) {
        write_file_atomic(fs::path(pl_out) / "accuracy_vs_order.svg",
                          line_chart_svg(sweep_series(sweeps, pl_smoothed), "Accuracy against model order",
                                         "model order n", pl_smoothed ? "smoothed accuracy (%)" : "accuracy (%)"));
        ++written;
      }
      if (written == 0) fail(ErrorCode::IoError, "nothing to plot under the given report directories");
      std::cerr << written << " figures written to " << pl_out << "\n";
    } else if (*inspect) {
      const auto c = load_checkpoint(ia_model);
      std::cout << "# mode: " << to_string(c.alpha.mode) << "\n"
                << stage_matrix_csv(c.alpha.values, feature_columns());
    }
  } catch (const Error& e) {
    std::cerr << "sleepsae: error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sleepsae: error[Internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
