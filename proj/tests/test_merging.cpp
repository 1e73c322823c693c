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

#include <doctest.h>

#include <cmath>

#include "preqlab/merging.hpp"
#include "preqlab/rng.hpp"

using namespace preqlab;

TEST_CASE("identical forecasters never disagree") {
  const Prior priors[] = {BetaPrior(1, 1), PointMass(0.3), GridPrior<double>::from_atoms({{0.1, 0.4}, {0.8, 0.6}})};
  for (const auto& p : priors) {
    const auto r = merging_gap(p, p, {0, 10, 100}, 50, 1);
    for (const auto& row : r.gaps) {
      for (double g : row) CHECK(g == 0.0);
    }
  }
}

TEST_CASE("Laplace learner merges with PointMass(0.7)") {
  const auto r = merging_gap(BetaPrior(1, 1), PointMass(0.7), {10, 100, 1000}, 200, 7);
  REQUIRE(r.mean_abs_gap.size() == 3);
  CHECK(r.mean_abs_gap[2] <= 0.02);
  CHECK(r.mean_abs_gap[2] < r.mean_abs_gap[0]);

  // Oracle: at horizon n the gap is |(k+1)/(n+2) - 0.7| with k ~ Binomial(n, 0.7).
  const int n = 1000;
  double expected = 0.0, logc = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) logc += std::log(static_cast<double>(n - k + 1) / k);
    const double pk = std::exp(logc + k * std::log(0.7) + (n - k) * std::log(0.3));
    expected += pk * std::abs((k + 1.0) / (n + 2.0) - 0.7);
  }
  double var = 0.0;
  for (double g : r.gaps[2]) var += (g - r.mean_abs_gap[2]) * (g - r.mean_abs_gap[2]);
  const double se = std::sqrt(var / (r.gaps[2].size() - 1) / r.gaps[2].size());
  CHECK(std::abs(r.mean_abs_gap[2] - expected) <= 4 * se);
}

TEST_CASE("gaps decay for random grid-prior truths") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::pair<double, double>> atoms;
    const int count = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < count; ++i) atoms.emplace_back(uniform01(rng), 1.0 / count);
    const Prior truth = GridPrior<double>::from_atoms(atoms);
    const auto r = merging_gap(BetaPrior(1, 1), truth, {10, 100, 1000}, 200, derive_seed(4, rep));
    CHECK(r.mean_abs_gap[2] < r.mean_abs_gap[0]);
    CHECK(r.q90[2] <= r.q99[2]);
  }
}

TEST_CASE("merging reports are deterministic and thread independent") {
  const auto a = merging_gap(BetaPrior(2, 2), PointMass(0.4), {5, 50}, 64, 9, 1);
  const auto b = merging_gap(BetaPrior(2, 2), PointMass(0.4), {5, 50}, 64, 9, 4);
  CHECK(a.gaps == b.gaps);
  CHECK(a.mean_abs_gap == b.mean_abs_gap);
}

TEST_CASE("a learner that cannot forecast is reported") {
  CHECK_THROWS_AS(merging_gap(PointMass(0.0), PointMass(1.0), {1, 5}, 4, 1), ZeroMassHistory);
}

TEST_CASE("merging and test failure co-occur") {
  ComposedParams params;  // M=20, eps=0.005, delta=0.05
  const auto r = merging_contrast(BetaPrior(1, 1), PointMass(0.7), {10, 100, 1000}, 200, params,
                                  100000, 200, 11);
  CHECK(r.merging.mean_abs_gap[2] <= 0.02);
  CHECK(r.learner_pass_rate <= 0.05);
}
