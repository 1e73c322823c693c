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

#include "preqlab/merging.hpp"

#include <algorithm>
#include <cmath>

#include "preqlab/errors.hpp"
#include "preqlab/manipulation.hpp"
#include "preqlab/parallel.hpp"
#include "preqlab/rng.hpp"
#include "preqlab/stats.hpp"

namespace preqlab {

MergingReport merging_gap(const Prior& learner, const Prior& truth, const std::vector<int>& horizons,
                          int trials, std::uint64_t seed, int threads) {
  if (trials < 1) throw InvalidParams("merging_gap needs trials >= 1");
  if (horizons.empty()) throw InvalidParams("merging_gap needs at least one horizon");
  if (horizons.front() < 0 || !std::is_sorted(horizons.begin(), horizons.end()) ||
      std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
    throw InvalidParams("horizons must be nonnegative and strictly increasing");
  }

  MergingReport report;
  report.horizons = horizons;
  report.gaps.assign(horizons.size(), std::vector<double>(static_cast<std::size_t>(trials)));
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    const double q = draw_parameter(truth, rng);
    int length = 0, ones = 0;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      for (; length < horizons[h]; ++length) ones += bernoulli(rng, q);
      const double gap = std::abs(forecast(learner, length, ones) - forecast(truth, length, ones));
      report.gaps[h][t] = std::min(gap, 1.0);
    }
  });

  for (auto row : report.gaps) {
    double sum = 0.0;
    for (double g : row) sum += g;
    report.mean_abs_gap.push_back(sum / trials);
    std::sort(row.begin(), row.end());
    report.q90.push_back(sorted_quantile(row, 0.90));
    report.q99.push_back(sorted_quantile(row, 0.99));
  }
  return report;
}

ContrastReport merging_contrast(const Prior& learner, const Prior& truth,
                                const std::vector<int>& horizons, int trials,
                                const ComposedParams& test, int test_horizon, int test_trials,
                                std::uint64_t seed, int threads) {
  ContrastReport report;
  report.merging = merging_gap(learner, truth, horizons, trials, derive_seed(seed, 0), threads);
  report.test_horizon = test_horizon;
  report.test_trials = test_trials;
  const TestSpec spec{test_horizon, test};
  const auto est = pass_probability(learner, truth, spec, test_horizon,
                                    MonteCarloMode{test_trials, derive_seed(seed, 1)});
  report.learner_pass_rate = est.value;
  report.pass_std_error = est.std_error;
  return report;
}

}  // namespace preqlab
