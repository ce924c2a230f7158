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


// End-to-end walk through the library on generated data: EDF bytes ->
// conditioned signals -> per-second features -> pre-training with fixed
// attention -> fine-tuning -> HMM smoothing on a held-out recording.

#include <iostream>
#include <vector>

#include "sleepsae.hpp"

using namespace sleepsae;

namespace {

FeatureMatrix features_for(std::uint64_t seed) {
  const auto raw = synthetic_recording(600, seed, 128.0, 64.0, "night" + std::to_string(seed));
  const auto edf = recording_to_edf(raw);
  const auto header = parse_edf_header(edf);
  auto rec = read_recording(header, std::span(edf).subspan(static_cast<std::size_t>(header.header_bytes)),
                            {kDefaultChannels.begin(), kDefaultChannels.end()});
  rec.subject_id = raw.subject_id;
  rec.stages = raw.stages;
  return extract_features(preprocess(rec));
}

}  // namespace

int main() {
  std::vector<FeatureMatrix> nights;
  for (std::uint64_t s = 1; s <= 5; ++s) nights.push_back(features_for(s));
  std::cout << "extracted " << nights.size() << " recordings of " << nights[0].rows << " x " << kNumFeatures
            << " features\n";

  const std::vector<const FeatureMatrix*> train{&nights[0], &nights[1], &nights[2]};
  const std::vector<const FeatureMatrix*> validation{&nights[3]};

  Hyperparams hp;
  hp.hidden_units = 20;
  hp.model_order = 1;
  hp.max_epochs = 15;
  hp.batch_segments = 8;
  FoldOptions opt;
  opt.alpha_mode = AlphaMode::Fixed;
  const auto model = train_model(train, validation, hp, opt);
  std::cout << "pre-training stopped after " << model.pretrain.trace.epochs.size() << " epochs (best "
            << model.pretrain.trace.best_epoch << ")\n";

  const auto test = normalized_sequences({&nights[4]}, model.norm)[0];
  const auto pred = predict(model.finetune.model, test);
  const auto smoothed = smooth(model.hmm, pred, HmmObservations::Hard);
  const auto truth = to_indices(test.labels);
  std::cout << "held-out accuracy: raw " << 100.0 * confusion(pred.labels, truth).accuracy() << "%, smoothed "
            << 100.0 * confusion(smoothed, truth).accuracy() << "%\n";

  std::cout << "most attended feature per stage:\n";
  for (std::size_t k = 0; k < kNumStages; ++k) {
    Eigen::Index best = 0;
    model.alpha.values.row(static_cast<Eigen::Index>(k)).maxCoeff(&best);
    std::cout << "  " << stage_name(stage_from_index(k)) << ": " << feature_names()[static_cast<std::size_t>(best)]
              << '\n';
  }
}
