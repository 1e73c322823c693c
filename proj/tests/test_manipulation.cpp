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

#include "preqlab/manipulation.hpp"
#include "preqlab/rng.hpp"

using namespace preqlab;

namespace {

TestSpec iid(double tol, int horizon) { return TestSpec{horizon, IidFrequencyParams{tol}}; }
TestSpec calibration(int horizon) { return TestSpec{horizon, CalibrationParams{10, 0.15, 3}}; }

ComposedParams small_composed() {
  ComposedParams p;
  p.recovery_order = 6;
  p.grid_size = 101;
  p.region = RegionParams{5, 0.02, 0.05};
  return p;
}

// Brute-force oracle: sum over all 2^N paths of truth mass times the verdict.
double brute_force(const Prior& expert, const Prior& truth, const TestSpec& test) {
  double total = 0.0;
  const int n = test.horizon;
  for (std::uint64_t bits = 0; bits < (1ULL << n); ++bits) {
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (bits >> i) & 1;
    const Realization path(x);
    const double mass = path_probability(truth, path);
    if (mass == 0.0 || path_probability(expert, path) == 0.0) continue;
    if (run_test(test, make_trace(expert, path)) == Verdict::kPass) total += mass;
  }
  return total;
}

}  // namespace

TEST_CASE("pass_probability examples") {
  CHECK(pass_probability(PointMass(1), PointMass(1), iid(0.01, 5), 5, ExactMode{}).value == 1.0);
  for (double tol : {0.1, 0.5, 0.99}) {
    CHECK(pass_probability(PointMass(0), PointMass(1), iid(tol, 5), 5, ExactMode{}).value == 0.0);
  }
}

TEST_CASE("exact enumeration matches a brute-force path sum") {
  const Prior experts[] = {BetaPrior(1, 1), PointMass(0.3),
                           GridPrior<double>::from_atoms({{0.0, 0.3}, {0.6, 0.7}})};
  const Prior truths[] = {PointMass(0.5), BetaPrior(2, 1),
                          GridPrior<double>::from_atoms({{0.2, 0.5}, {0.9, 0.5}})};
  const TestSpec tests[] = {calibration(8), iid(0.1, 8), TestSpec{8, LikelihoodParams{0.05}},
                            TestSpec{8, EventualFrequencyParams{0.2, 4}}, TestSpec{8, small_composed()}};
  for (const auto& e : experts) {
    for (const auto& t : truths) {
      for (const auto& test : tests) {
        CHECK(pass_probability(e, t, test, 8, ExactMode{}).value ==
              doctest::Approx(brute_force(e, t, test)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("Beta expert vs fair coin under calibration: exact and Monte Carlo within 3 sigma") {
  const auto exact = pass_probability(BetaPrior(1, 1), PointMass(0.5), calibration(10), 10, ExactMode{});
  const auto mc = pass_probability(BetaPrior(1, 1), PointMass(0.5), calibration(10), 10,
                                   MonteCarloMode{100000, 42});
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - exact.value) <= 3 * mc.std_error);
}

TEST_CASE("exact and Monte Carlo agree within 4 sigma on random instances") {
  Rng rng(9);
  const int instances = 30;
  int agree = 0;
  for (int rep = 0; rep < instances; ++rep) {
    const int n = 6 + static_cast<int>(rng() % 9);
    const Prior expert = PointMass(uniform01(rng));
    const Prior truth = GridPrior<double>::from_atoms({{uniform01(rng) * 0.5, 0.5}, {0.5 + uniform01(rng) * 0.5, 0.5}});
    const TestSpec test = rep % 2 ? calibration(n) : iid(0.15, n);
    const double exact = pass_probability(expert, truth, test, n, ExactMode{}).value;
    const auto mc = pass_probability(expert, truth, test, n, MonteCarloMode{100000, derive_seed(10, rep)});
    agree += std::abs(mc.value - exact) <= 4 * mc.std_error + 1e-15;
  }
  CHECK(agree >= instances - 1);
}

TEST_CASE("composed_T fast path matches exact enumeration and full traces") {
  const auto params = small_composed();
  const TestSpec test{16, params};
  const Prior experts[] = {BetaPrior(1, 1), GridPrior<double>::from_atoms({{0.2, 0.5}, {0.7, 0.5}})};
  const Prior truths[] = {PointMass(0.7), BetaPrior(1, 1)};
  for (const auto& e : experts) {
    for (const auto& t : truths) {
      const double exact = pass_probability(e, t, test, 16, ExactMode{}).value;
      const auto fast = pass_probability(e, t, test, 16, MonteCarloMode{40000, 1});
      CHECK(std::abs(fast.value - exact) <= 4 * fast.std_error + 1e-12);

      const auto at200 = pass_probability(e, t, test, 200, MonteCarloMode{4000, 2});
      const auto full = detail::pass_probability_full_trace(e, t, test, 200, MonteCarloMode{4000, 3});
      const double se = std::hypot(at200.std_error, full.std_error);
      CHECK(std::abs(at200.value - full.value) <= 4 * se + 1e-12);
    }
  }
}

TEST_CASE("exact mode is capped") {
  CHECK_THROWS_AS(pass_probability(PointMass(0.5), PointMass(0.5), iid(0.1, 21), 21, ExactMode{}),
                  HorizonTooLarge);
}

TEST_CASE("build_game examples") {
  const StrategyGrid one{{PointMass(1)}, {PointMass(1)}};
  const auto m = build_game(one, iid(0.01, 5), 5, ExactMode{});
  CHECK(m.pass_prob.rows() == 1);
  CHECK(m.pass_prob(0, 0) == 1.0);

  const auto masses = std::vector<Prior>{PointMass(0.1), PointMass(0.5), PointMass(0.9)};
  const auto diag = build_game(StrategyGrid{masses, masses}, iid(0.1, 16), 16, ExactMode{});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(diag.pass_prob(i, j) ==
            doctest::Approx(pass_probability(masses[i], masses[j], iid(0.1, 16), 16, ExactMode{}).value));
      if (i == j) CHECK(diag.pass_prob(i, j) >= 0.5);
      if (i != j) CHECK(diag.pass_prob(i, j) <= 0.05);
    }
  }
}

TEST_CASE("build_game respects relabeling of a symmetric grid") {
  const auto grid = point_mass_grid(5);
  const auto test = calibration(8);
  const auto a = build_game(StrategyGrid{grid, grid}, test, 8, ExactMode{});
  // q -> 1 - q flips every outcome and forecast; calibration is invariant.
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(a.pass_prob(i, j) == doctest::Approx(a.pass_prob(4 - i, 4 - j)));
  }
  std::vector<Prior> reversed(grid.rbegin(), grid.rend());
  const auto b = build_game(StrategyGrid{reversed, reversed}, test, 8, ExactMode{});
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(b.pass_prob(i, j) == a.pass_prob(4 - i, 4 - j));
  }
}

TEST_CASE("Monte Carlo matrices are reproducible and thread independent") {
  const auto grid = point_mass_grid(4);
  const TestSpec test{300, small_composed()};
  const auto a = build_game(StrategyGrid{grid, grid}, test, 300, MonteCarloMode{500, 5}, 1);
  const auto b = build_game(StrategyGrid{grid, grid}, test, 300, MonteCarloMode{500, 5}, 4);
  CHECK(a.pass_prob == b.pass_prob);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("demonstrate_prop1 examples") {
  std::vector<Prior> truths;
  const std::vector<double> pts{0.1, 0.3, 0.5, 0.7, 0.9};
  for (double q : pts) truths.emplace_back(PointMass(q));
  const auto test = calibration(8);
  const auto acceptance = self_acceptance(truths, test, 8, ExactMode{});
  const double eps = 1 - acceptance.minCoeff();
  const StrategyGrid grid{lattice_mixtures(pts, 10), truths};
  const auto report = demonstrate_prop1(test, grid, eps, 8, ExactMode{});
  CHECK(report.bound_holds);
  CHECK(report.game.solution.value >= 1 - eps - 0.01);
  CHECK(report.game.solution.duality_gap() <= 1e-6);

  // Degenerate always-pass test.
  const auto always = demonstrate_prop1(iid(1.0, 6), StrategyGrid{truths, truths}, 0.0, 6, ExactMode{});
  CHECK(always.game.solution.value == doctest::Approx(1.0));

  // One truth: the best reply is the truth itself.
  const StrategyGrid single{{PointMass(0.3), PointMass(0.7)}, {PointMass(0.3)}};
  const double diagonal = pass_probability(PointMass(0.3), PointMass(0.3), iid(0.2, 10), 10, ExactMode{}).value;
  const auto one = demonstrate_prop1(iid(0.2, 10), single, 1 - diagonal, 10, ExactMode{});
  CHECK(one.game.solution.value == doctest::Approx(diagonal));
  CHECK(one.game.solution.row_strategy[0] == doctest::Approx(1.0));
}

TEST_CASE("demonstrate_prop1 rejects a failed acceptance precondition") {
  const auto truths = point_mass_grid(3);
  CHECK_THROWS_AS(demonstrate_prop1(iid(0.01, 6), StrategyGrid{truths, truths}, 0.0, 6, ExactMode{}),
                  PreconditionFailed);
}

TEST_CASE("manipulation_curve on a single truth is constant at the diagonal value") {
  const StrategyGrid grid{{PointMass(1)}, {PointMass(1)}};
  CurveOptions options;
  options.trials = 200;
  options.bootstrap = 20;
  const auto curve = manipulation_curve(grid, TestSpec{100, small_composed()}, {100, 200, 400}, options);
  REQUIRE(curve.size() == 3);
  for (const auto& point : curve) {
    CHECK(point.value == 1.0);
    CHECK(point.ci_lo == 1.0);
    CHECK(point.ci_hi == 1.0);
  }
}

TEST_CASE("calibration curve stays manipulable across horizons") {
  // A mixture over the truth grid learns the coin and ends up calibrated, so
  // the expert keeps passing as the horizon grows. Bins visited only during
  // the learning transient are skipped by min_count; with min_count <= 10
  // they stay miscalibrated at every horizon and the mixture passes only
  // 20-95% of the time.
  std::vector<Prior> truths;
  std::vector<std::pair<double, double>> atoms;
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    truths.emplace_back(PointMass(q));
    atoms.emplace_back(q, 0.2);
  }
  std::vector<Prior> experts = truths;
  experts.emplace_back(GridPrior<double>::from_atoms(atoms));
  const TestSpec test{100, CalibrationParams{10, 0.15, 50}};
  CurveOptions options;
  options.trials = 1000;
  options.bootstrap = 20;
  options.seed = 4;
  const auto curve = manipulation_curve(StrategyGrid{experts, truths}, test, {100, 1000, 10000}, options);
  for (const auto& point : curve) {
    const auto acceptance =
        self_acceptance(truths, test.with_horizon(point.horizon), point.horizon, MonteCarloMode{1000, 5});
    const double eps = 1 - acceptance.minCoeff();
    CHECK(point.value >= 1 - eps - 0.02);
  }
}

TEST_CASE("bootstrap interval brackets the point value") {
  const auto grid = point_mass_grid(5);
  const auto m = build_game(StrategyGrid{grid, grid}, TestSpec{200, small_composed()}, 200,
                            MonteCarloMode{400, 8});
  const double v = solve_game(m.pass_prob).solution.value;
  const auto [lo, hi] = bootstrap_value_interval(m, 200, 0.95, 3);
  CHECK(lo <= hi);
  CHECK(lo <= v + 0.05);
  CHECK(hi >= v - 0.05);
}

TEST_CASE("strategy generators") {
  const auto g = point_mass_grid(3);
  REQUIRE(g.size() == 3);
  CHECK(std::get<PointMass>(g[1]).q() == 0.5);
  // Compositions of 2 into 3 parts: C(4,2) = 6 mixtures.
  CHECK(lattice_mixtures({0.0, 0.5, 1.0}, 2).size() == 6);
  // 2-atom progressions over 4 points: 6 pairs; 3-atom with stride 1: 2.
  CHECK(progression_mixtures({0.0, 0.25, 0.5, 0.75}, 3, 1).size() == 3 + 2);
  CHECK(progression_mixtures({0.0, 0.25, 0.5, 0.75}, 2, 0).size() == 6);
}
