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

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sleepsae.hpp"

namespace {

using namespace sleepsae;
namespace fs = std::filesystem;

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("rec" + std::to_string(100 + i));
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sleepsae_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset small_dataset(std::size_t recordings, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.recordings = recordings;
  spec.frames = 1200;
  spec.seed = seed;
  return {synthetic_features(spec).recordings};
}

ExperimentConfig smoke_config() {
  ExperimentConfig c;
  c.folds = 2;
  c.grid_budget = 2;
  c.base.hidden_units = 8;
  c.base.max_epochs = 3;
  c.base.batch_segments = 4;
  c.grid.learning_rate = {0.01};
  return c;
}

TEST(Folds, EveryRecordingTestedOnce) {
  const auto folds = make_folds(ids(25), 5, 42);
  ASSERT_EQ(folds.size(), 5u);
  std::map<std::string, int> tested;
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 5u);
    EXPECT_EQ(f.validation.size(), 5u);
    EXPECT_EQ(f.train.size(), 15u);
    std::set<std::string> all;
    for (const auto* part : {&f.train, &f.validation, &f.test}) {
      for (const auto& id : *part) EXPECT_TRUE(all.insert(id).second) << id << " appears twice";
    }
    EXPECT_EQ(all.size(), 25u);
    for (const auto& id : f.test) ++tested[id];
  }
  EXPECT_EQ(tested.size(), 25u);
  for (const auto& [id, n] : tested) EXPECT_EQ(n, 1) << id;
}

TEST(Folds, DeterministicAndOrderIndependent) {
  auto shuffled = ids(25);
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = make_folds(ids(25), 5, 7), b = make_folds(shuffled, 5, 7), c = make_folds(ids(25), 5, 8);
  bool any_diff = false;
  for (std::size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(a[f].test, b[f].test);
    EXPECT_EQ(a[f].train, b[f].train);
    any_diff |= a[f].test != c[f].test;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Folds, Errors) {
  try {
    make_folds(ids(2), 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewRecordings);
  }
  EXPECT_THROW(make_folds(ids(10), 6, 1), Error);
  const auto re = make_folds(ids(10), 6, 1, SplitMode::Resample);
  EXPECT_EQ(re.size(), 6u);
  EXPECT_THROW(make_folds({"a", "a", "b"}, 1, 1), Error);
}

TEST(Grid, SamplesComeFromTheLists) {
  GridSpec g;
  Rng rng(3);
  Hyperparams base;
  base.hidden_units = 17;
  const auto c = sample_grid(g, base, 50, rng);
  ASSERT_EQ(c.size(), 50u);
  auto member = [](double v, const std::vector<double>& l) { return std::find(l.begin(), l.end(), v) != l.end(); };
  for (const auto& hp : c) {
    EXPECT_TRUE(member(hp.weight_decay, g.weight_decay));
    EXPECT_TRUE(member(hp.sparsity_weight, g.sparsity_weight));
    EXPECT_TRUE(member(hp.learning_rate, g.learning_rate));
    EXPECT_EQ(hp.hidden_units, 17u);
  }
}

TEST(Grid, SelectionRules) {
  EXPECT_EQ(select_best({0.4}), 0u);
  EXPECT_EQ(select_best({0.4, 0.7, 0.7}), 1u);
  EXPECT_EQ(select_best({std::nan(""), 0.1}), 1u);
  EXPECT_EQ(select_best({0.2, std::nan("")}), 0u);
  Hyperparams only;
  only.hidden_units = 3;
  const auto trials = grid_search({only}, {}, {}, {}, 1);
  ASSERT_EQ(trials.size(), 1u);
  EXPECT_EQ(trials[best_trial(trials)].hyperparams.hidden_units, 3u);
}

TEST(Seeds, MixingSeparatesStreams) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(9, 4), mix_seed(9, 4));
  std::vector<int> hits(10, 0);
  parallel_for(10, 3, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(hits, std::vector<int>(10, 1));
}

TEST(Config, ParsesKeysAndComments) {
  const auto c = parse_config(
      "# comment\n"
      "alpha_mode = adaptive\n"
      "model_order = 2   # trailing\n"
      "grid.learning_rate = 0.1, 0.01\n"
      "hidden_units = 50\n"
      "split_mode = resample\n"
      "hmm_observations = posterior\n"
      "channels.eeg = C4A1\n");
  EXPECT_EQ(c.alpha_mode, AlphaMode::Adaptive);
  EXPECT_EQ(c.base.model_order, 2u);
  EXPECT_EQ(c.grid.learning_rate, (std::vector<double>{0.1, 0.01}));
  EXPECT_EQ(c.base.hidden_units, 50u);
  EXPECT_EQ(c.split_mode, SplitMode::Resample);
  EXPECT_EQ(c.hmm_observations, HmmObservations::Posterior);
  EXPECT_EQ(c.channels[0], "C4A1");
  EXPECT_EQ(c.folds, 5u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config("folds = 5\nbogus = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_config("folds = -1\n"), Error);
  EXPECT_THROW(parse_config("momentum = 1.5\n"), Error);
  EXPECT_THROW(parse_config("just words\n"), Error);
}

TEST(Config, RelativePathsFollowTheFile) {
  const auto dir = scratch("cfg");
  write_file_atomic(dir / "exp.cfg", std::string("dataset = feats\noutput = out\n"));
  const auto c = load_config(dir / "exp.cfg");
  EXPECT_EQ(c.dataset, dir / "feats");
  EXPECT_EQ(c.output, dir / "out");
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(1);
  Checkpoint c;
  c.hyperparams.hidden_units = 6;
  c.hyperparams.model_order = 1;
  c.norm.mean[3] = 0.1;
  c.norm.std.fill(1.0 / 3.0);
  c.alpha = AlphaMatrix::ones(AlphaMode::Adaptive, 28);
  c.alpha.values(2, 5) = 0.123456789012345678;
  c.params = SaeParams::random(28, 6, 1, false, rng);
  c.head = random_head(6, 5, rng);
  c.hmm = HmmModel{Matrix::Identity(5, 5), Matrix::Constant(5, 5, 0.2), Vector::Constant(5, 0.2)};
  const auto dir = scratch("ckpt");
  save_checkpoint(dir / "m.json", c);
  const auto back = load_checkpoint(dir / "m.json");
  EXPECT_EQ(back.params.W, c.params.W);
  EXPECT_EQ(back.params.W_dec, c.params.W_dec);
  EXPECT_EQ(back.params.A[0], c.params.A[0]);
  EXPECT_EQ(back.alpha.values, c.alpha.values);
  EXPECT_EQ(back.alpha.mode, AlphaMode::Adaptive);
  EXPECT_EQ(back.norm.std, c.norm.std);
  EXPECT_EQ(back.head->U, c.head->U);
  EXPECT_EQ(back.hmm->emission, c.hmm->emission);
  EXPECT_EQ(back.hyperparams.hidden_units, 6u);
  write_file_atomic(dir / "bad.json", std::string("{\"format\": \"other\"}"));
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), Error);
}

TEST(Experiment, SmokeConfigRunsAndWritesReport) {
  const auto data = small_dataset(5, 3);
  const auto rep = run_experiment(smoke_config(), data);
  ASSERT_TRUE(rep.ok()) << rep.folds[0].error;
  EXPECT_EQ(rep.folds.size(), 2u);
  EXPECT_EQ(rep.searches.size(), 1u);
  EXPECT_EQ(rep.searches[0].size(), 2u);
  for (const auto& f : rep.folds) {
    EXPECT_GT(f.raw.total(), 0u);
    EXPECT_EQ(f.reconstruction_error.rows(), 5);
  }
  const auto dir = scratch("report");
  write_report(dir, rep);
  for (const char* name : {"report.json", "summary.txt", "timing.json", "fold_1/model.json", "fold_2/alpha.csv",
                           "fold_1/confusion_smoothed.csv", "fold_1/trace_pretrain.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const auto j = Json::parse(read_file_text(dir / "report.json"));
  EXPECT_EQ(j.at("folds").size(), 2u);
  const auto table = parse_csv(read_file_text(dir / "fold_1" / "alpha.csv"));
  EXPECT_EQ(table.rows.size(), 5u);
  EXPECT_EQ(table.header.size(), 29u);
}

TEST(Experiment, FailedFoldIsReportedNotThrown) {
  FoldSplit split{{"missing"}, {"x"}, {"y"}};
  const auto r = run_fold(1, split, {}, Hyperparams{}, FoldOptions{});
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.error.find("missing"), std::string::npos);
}

TEST(Experiment, DatasetLoadsSortedFeatureFiles) {
  const auto dir = scratch("dataset");
  const auto data = small_dataset(3, 4);
  for (auto it = data.recordings.rbegin(); it != data.recordings.rend(); ++it) {
    save_features(dir / (it->recording_id + ".sfeat"), *it);
  }
  write_file_atomic(dir / "notes.txt", std::string("ignored"));
  const auto loaded = load_dataset(dir);
  EXPECT_EQ(loaded.ids(), data.ids());
  EXPECT_THROW(load_dataset(dir / "nope"), Error);
}

TEST(Report, MajorityVotePerEpoch) {
  std::vector<std::size_t> labels(30, 2);
  labels[0] = labels[1] = 4;
  labels.insert(labels.end(), 5, 1);
  const auto v = majority_vote(labels);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], stage_from_index(2));
  EXPECT_EQ(v[1], stage_from_index(1));
}

TEST(Plot, SvgOutputs) {
  Matrix m(2, 2);
  m << 0, 1, 2, 3;
  const auto svg = heatmap_svg(m, {"a", "b"}, {"x<y", "z"}, "t");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("x&lt;y"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 4, true);
  const auto sweep = parse_csv("model_order,alpha_mode,raw_mean,raw_std,smoothed_mean,smoothed_std,ok\n"
                               "0,fixed,70,1,75,2,1\n1,fixed,72,1,77,2,1\n");
  const auto series = sweep_series({sweep}, true);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0].y, (std::vector<double>{75, 77}));
  EXPECT_NE(line_chart_svg(series, "acc", "n", "%").find("polyline"), std::string::npos);
}

}  // namespace
