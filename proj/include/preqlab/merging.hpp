// Copyright 2026 The Preqlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREQLAB_MERGING_HPP_
#define PREQLAB_MERGING_HPP_

#include <cstdint>
#include <vector>

#include "preqlab/core.hpp"
#include "preqlab/testing.hpp"

namespace preqlab {

struct MergingReport {
  std::vector<int> horizons;
  std::vector<double> mean_abs_gap;
  std::vector<double> q90;
  std::vector<double> q99;
  // gaps[h][t]: |learner - truth| forecast gap at horizons[h] on trial t.
  std::vector<std::vector<double>> gaps;
};

// Samples `trials` paths from `truth` (trial t uses derive_seed(seed, t)) and
// records the one-step forecast gap after each horizon's worth of outcomes.
// Throws ZeroMassHistory if the learner cannot forecast on a sampled path.
MergingReport merging_gap(const Prior& learner, const Prior& truth, const std::vector<int>& horizons,
                          int trials, std::uint64_t seed, int threads = 0);

// The learner merges with the truth, and yet its forecasts fail composed_T
// on the truth's paths: both halves measured on one scenario.
struct ContrastReport {
  MergingReport merging;
  int test_horizon = 0;
  double learner_pass_rate = 0.0;
  double pass_std_error = 0.0;
  int test_trials = 0;
};

ContrastReport merging_contrast(const Prior& learner, const Prior& truth,
                                const std::vector<int>& horizons, int trials,
                                const ComposedParams& test, int test_horizon, int test_trials,
                                std::uint64_t seed, int threads = 0);

}  // namespace preqlab

#endif  // PREQLAB_MERGING_HPP_
