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

// Acceptance run: eight numbered criteria, one PASS/FAIL line each. Exit
// status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>

#include "preqlab/game.hpp"
#include "preqlab/harness.hpp"
#include "preqlab/manipulation.hpp"
#include "preqlab/merging.hpp"
#include "preqlab/recovery.hpp"
#include "preqlab/rng.hpp"
#include "preqlab/testing.hpp"

using namespace preqlab;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int run_criterion(int number, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = {false, std::string("threw: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds <= limit_seconds;
  const bool pass = outcome.ok && in_time;
  std::printf("criterion %d %s: %s  %s  time=%.2fs (limit %.0fs%s)\n", number, name, pass ? "PASS" : "FAIL",
              outcome.detail.c_str(), seconds, limit_seconds, in_time ? "" : ", exceeded");
  std::fflush(stdout);
  return pass ? 0 : 1;
}

// Up to `max_atoms` distinct atoms on the 1/20 lattice with integer weights.
GridPrior<Rational> random_rational_prior(Rng& rng, int max_atoms) {
  std::vector<int> slots(21);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  const int atoms = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_atoms));
  std::vector<int> w(static_cast<std::size_t>(atoms));
  int total = 0;
  for (auto& x : w) total += (x = 1 + static_cast<int>(rng() % 9));
  std::vector<std::pair<Rational, Rational>> list;
  for (int i = 0; i < atoms; ++i) list.emplace_back(Rational(slots[i], 20), Rational(w[i], total));
  return GridPrior<Rational>::from_atoms(list);
}

Outcome recovery_roundtrip() {
  Rng rng(derive_seed(2026, 1));
  const int priors = 200, order = 12, horizon = 12;
  int exact_matches = 0;
  double worst = 0.0;
  for (int rep = 0; rep < priors; ++rep) {
    const auto exact_prior = random_rational_prior(rng, 6);
    const auto float_prior = exact_prior.cast<double>();
    const auto truth = exact_prior.moments(order);
    const auto path = sample_realization(Prior(float_prior), horizon, rng);
    exact_matches += recover_moments(make_trace(exact_prior, path), order).values() == truth;
    const auto approx = recover_moments(make_trace(float_prior, path), order);
    for (int k = 0; k <= order; ++k) {
      worst = std::max(worst, std::abs(approx[k] - scalar_cast<double>(truth[k])));
    }
  }
  return {exact_matches == priors && worst <= 1e-8,
          fmt("exact=%d/%d max_float_err=%.3g (tol 1e-8)", exact_matches, priors, worst)};
}

Outcome path_independence() {
  Rng rng(derive_seed(2026, 2));
  const int priors = 200, paths = 10, order = 12, horizon = 16;
  double worst = 0.0;
  int short_supply = 0;
  for (int rep = 0; rep < priors; ++rep) {
    const Prior prior(random_rational_prior(rng, 6).cast<double>());
    // Distinct positive-probability paths: random bit strings, rejected when
    // the prior gives them no mass or they repeat.
    std::set<std::string> seen;
    std::vector<Realization> chosen;
    for (int attempt = 0; attempt < 2000 && static_cast<int>(chosen.size()) < paths; ++attempt) {
      Realization x = attempt % 2 ? sample_realization(prior, horizon, rng)
                                  : sample_realization(PointMass(0.5), horizon, rng);
      if (path_probability(prior, x) == 0.0 || !seen.insert(x.str()).second) continue;
      chosen.push_back(std::move(x));
    }
    short_supply += static_cast<int>(chosen.size()) < paths;
    const auto first = recover_moments(make_trace(prior, chosen.front()), order);
    for (const auto& x : chosen) {
      const auto m = recover_moments(make_trace(prior, x), order);
      worst = std::max(worst, (m.values() - first.values()).cwiseAbs().maxCoeff());
    }
  }
  // Priors supported on {0, 1} alone have only one or two positive paths.
  return {worst <= 1e-10, fmt("max_spread=%.3g (tol 1e-10) priors_with_<%d_paths=%d", worst, paths, short_supply)};
}

Outcome informed_pass() {
  ExperimentConfig cfg;
  cfg.experiment = "informed-pass";
  cfg.master_seed = 2026;
  cfg.replications = 500;
  InformedPassParams p;
  p.horizon = 10000;
  p.test.region.delta = 0.05;
  cfg.params = p;
  const auto record = run_experiment(cfg);
  const double rate = record.summary["pass_rate"].get<double>();
  return {rate >= 0.90, fmt("pass_rate=%.4f over %d seeds (need >= 0.90)", rate, cfg.replications)};
}

Outcome prop1() {
  const std::vector<double> pts{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<Prior> truths;
  for (double q : pts) truths.emplace_back(PointMass(q));
  const TestSpec test{8, CalibrationParams{10, 0.15, 3}};
  const auto acceptance = self_acceptance(truths, test, 8, ExactMode{});
  const double eps = 1 - acceptance.minCoeff();
  const StrategyGrid grid{lattice_mixtures(pts, 10), truths};
  const auto report = demonstrate_prop1(test, grid, eps, 8, ExactMode{});
  const double value = report.game.solution.value, gap = report.game.solution.duality_gap();
  // The convex-hull reading of epsilon, for reference.
  const double hull_eps = 1 - self_acceptance(grid.experts, test, 8, ExactMode{}).minCoeff();
  return {report.matrix.exact && value >= 1 - eps - 0.01 && gap <= 1e-6,
          fmt("eps=%.6f value=%.6f bound=%.6f gap=%.2g experts=%zu (hull eps=%.4f)", eps, value,
              1 - eps - 0.01, gap, grid.experts.size(), hull_eps)};
}

Outcome manipulation_curve_signature() {
  ComposedParams params;
  params.recovery_order = 10;
  params.grid_size = 201;
  params.region = RegionParams{5, 0.005, 0.05};
  const auto truths = point_mass_grid(21);
  std::vector<double> pts;
  for (int i = 0; i <= 20; ++i) pts.push_back(i / 20.0);
  auto experts = point_mass_grid(21);
  const auto mixtures = progression_mixtures(pts, 5, 5);
  experts.insert(experts.end(), mixtures.begin(), mixtures.end());
  CurveOptions options;
  options.trials = 10000;
  options.seed = 7;
  options.bootstrap = 200;
  const auto curve = manipulation_curve(StrategyGrid{experts, truths}, TestSpec{100, params}, {100, 1000, 10000}, options);

  bool monotone = true, narrow = true;
  std::string values;
  for (std::size_t h = 0; h < curve.size(); ++h) {
    if (h > 0 && curve[h].value > curve[h - 1].value) monotone = false;
    const double half = (curve[h].ci_hi - curve[h].ci_lo) / 2;
    narrow = narrow && half <= 0.03;
    values += fmt("N=%d:%.4f[%.4f,%.4f] ", curve[h].horizon, curve[h].value, curve[h].ci_lo, curve[h].ci_hi);
  }
  const auto& last = curve.back();
  const bool small_region = last.max_region_length <= 0.2;
  const bool terminal = !small_region || last.value <= 0.5;
  return {monotone && narrow && small_region && terminal,
          fmt("%sexperts=%zu region_len=%.4f monotone=%d ci_ok=%d", values.c_str(), experts.size(),
              last.max_region_length, monotone, narrow)};
}

Outcome merging() {
  const auto r = merging_gap(BetaPrior(1, 1), PointMass(0.7), {10, 100, 1000}, 200, 11);
  const double g10 = r.mean_abs_gap[0], g1000 = r.mean_abs_gap[2];
  return {g1000 <= 0.02 && g1000 < g10, fmt("gap@10=%.5f gap@100=%.5f gap@1000=%.5f (tol 0.02)", g10,
                                            r.mean_abs_gap[1], g1000)};
}

Outcome game_oracle() {
  Rng rng(derive_seed(2026, 7));
  double worst_fp = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int rows = 1 + static_cast<int>(rng() % 20), cols = 1 + static_cast<int>(rng() % 20);
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) a(i, j) = uniform01(rng);
    }
    const auto r = solve_game(a);
    worst_fp = std::max(worst_fp, r.method_disagreement);
  }
  // Every 2x2 matrix with distinct entries on the 0.1 lattice, plus random ones.
  double worst_closed = 0.0;
  int count = 0;
  auto check = [&](double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    worst_closed = std::max(worst_closed, std::abs(solve_game(m).solution.value - closed_form_2x2_value(a, b, c, d)));
    ++count;
  };
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b)
      for (int c = 0; c <= 10; ++c)
        for (int d = 0; d <= 10; ++d) {
          if (a == b || a == c || a == d || b == c || b == d || c == d) continue;
          check(a / 10.0, b / 10.0, c / 10.0, d / 10.0);
        }
  for (int rep = 0; rep < 2000; ++rep) check(uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng));
  return {worst_fp <= 1e-4 && worst_closed <= 1e-10,
          fmt("max|FP-LP|=%.3g (tol 1e-4) max|2x2-closed|=%.3g over %d (tol 1e-10)", worst_fp, worst_closed, count)};
}

Outcome hausdorff_validity() {
  Rng rng(derive_seed(2026, 8));
  int passes = 0, total = 0;
  for (int rep = 0; rep < 600; ++rep) {
    Prior prior = BetaPrior(1, 1);
    switch (rep % 3) {
      case 0: prior = random_rational_prior(rng, 6).cast<double>(); break;
      case 1: prior = BetaPrior(0.5 + 4 * uniform01(rng), 0.5 + 4 * uniform01(rng)); break;
      default: prior = PointMass(uniform01(rng)); break;
    }
    const int horizon = 12 + static_cast<int>(rng() % 40);
    const int order = std::min(horizon, 16);
    const auto m = recover_moments(make_trace(prior, sample_realization(prior, horizon, rng)), order);
    passes += hausdorff_check(m, 1e-9);
    ++total;
  }
  std::vector<double> p;
  for (int i = 0; i < 12; ++i) p.push_back(i % 2 ? 0.1 : 0.9);
  const ForecastTrace<double> alternating(p, Realization(std::vector<std::uint8_t>(12, 1)));
  const bool counter_fails = !hausdorff_check(recover_moments(alternating, 12), 1e-9);
  return {passes == total && counter_fails,
          fmt("genuine=%d/%d counterexample_rejected=%d", passes, total, counter_fails)};
}

}  // namespace

int main() {
  int failures = 0;
  failures += run_criterion(1, "recovery-roundtrip", 10, recovery_roundtrip);
  failures += run_criterion(2, "path-independence", 10, path_independence);
  failures += run_criterion(3, "informed-pass", 120, informed_pass);
  failures += run_criterion(4, "prop1-manipulable", 30, prop1);
  failures += run_criterion(5, "manipulation-curve", 600, manipulation_curve_signature);
  failures += run_criterion(6, "merging", 30, merging);
  failures += run_criterion(7, "game-solver-oracle", 30, game_oracle);
  failures += run_criterion(8, "hausdorff-validity", 5, hausdorff_validity);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
