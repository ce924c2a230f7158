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

// Umbrella header.

#pragma once

#include "sleepsae/attention.hpp"
#include "sleepsae/autoencoder.hpp"
#include "sleepsae/checkpoint.hpp"
#include "sleepsae/classify.hpp"
#include "sleepsae/config.hpp"
#include "sleepsae/dataset.hpp"
#include "sleepsae/dsp.hpp"
#include "sleepsae/edf.hpp"
#include "sleepsae/error.hpp"
#include "sleepsae/feature_io.hpp"
#include "sleepsae/features.hpp"
#include "sleepsae/harness.hpp"
#include "sleepsae/hmm.hpp"
#include "sleepsae/hypnogram.hpp"
#include "sleepsae/io.hpp"
#include "sleepsae/metrics.hpp"
#include "sleepsae/normalize.hpp"
#include "sleepsae/plot.hpp"
#include "sleepsae/recording.hpp"
#include "sleepsae/report.hpp"
#include "sleepsae/stage.hpp"
#include "sleepsae/synthetic.hpp"
#include "sleepsae/train.hpp"
