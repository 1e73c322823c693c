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

#ifndef PREQLAB_MANIPULATION_HPP_
#define PREQLAB_MANIPULATION_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "preqlab/core.hpp"
#include "preqlab/game.hpp"
#include "preqlab/testing.hpp"

namespace preqlab {

// Pure strategies of the manipulation game: theories the expert may announce
// (rows) and truths Nature may pick (columns).
struct StrategyGrid {
  std::vector<Prior> experts;
  std::vector<Prior> truths;

  void validate() const;
};

// Exhaustive enumeration of all 2^N outcome strings.
struct ExactMode {};
// Average of verdicts over `trials` paths drawn from the truth.
struct MonteCarloMode {
  int trials = 10000;
  std::uint64_t seed = 0;
};
using EvaluationMode = std::variant<ExactMode, MonteCarloMode>;

inline constexpr int kMaxExactHorizon = 20;

struct PassEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero in exact mode
  bool exact = true;
  int trials = 0;
};

// Remembers the unwidened composed-test region of one expert per outcome
// prefix. The forecasts along a prefix are a function of the expert and the
// prefix, so the assessment can be reused across truths and horizons.
class PrefixRegionCache {
 public:
  PrefixRegionCache(Prior expert, ComposedParams params);

  // nullopt when the prefix half of the test already fails.
  const std::optional<AcceptanceRegion>& region(std::uint64_t prefix_bits);

  const Prior& expert() const noexcept { return expert_; }
  const ComposedParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return regions_.size(); }
  // Largest total length among the cached regions after widening by margin.
  double max_widened_length(double margin) const;

 private:
  Prior expert_;
  ComposedParams params_;
  std::vector<double> forecasts_;  // scratch
  std::vector<std::optional<std::optional<AcceptanceRegion>>> regions_;
};

// Probability under `truth` that `expert` passes `test` cut at `horizon`
// (the horizon overrides test.horizon). Histories to which the expert gives
// zero mass count as FAIL.
PassEstimate pass_probability(const Prior& expert, const Prior& truth, const TestSpec& test,
                              int horizon, const EvaluationMode& mode);

// Same, but composed_T in Monte Carlo mode goes through `cache`: the first K
// outcomes are drawn one by one and the rest only as a binomial count.
PassEstimate pass_probability(PrefixRegionCache& cache, const Prior& truth, int horizon,
                              const MonteCarloMode& mode);

struct GameMatrix {
  Eigen::MatrixXd pass_prob;  // rows = experts, cols = truths
  Eigen::MatrixXd std_error;
  bool exact = true;
  int trials = 0;
};

// Entry (i, j) uses seed derive_seed(mode.seed, i * truths + j) in Monte
// Carlo mode, so the matrix does not depend on the thread count.
GameMatrix build_game(const StrategyGrid& grid, const TestSpec& test, int horizon,
                      const EvaluationMode& mode, int threads = 0);

// Acceptance of each truth by its own theory: the diagonal of the game with
// experts = truths.
Eigen::VectorXd self_acceptance(const std::vector<Prior>& truths, const TestSpec& test,
                                int horizon, const EvaluationMode& mode, int threads = 0);

struct Prop1Report {
  double epsilon = 0.0;        // tolerated rejection of the true theory
  Eigen::VectorXd acceptance;  // per truth
  GameMatrix matrix;
  GameReport game;
  int worst_truth = 0;         // column minimizing zeta^T A
  double bound = 0.0;          // 1 - epsilon - slack
  bool bound_holds = false;
};

// Checks that the test accepts every truth with probability >= 1 - epsilon,
// then solves the manipulation game over the grid.
Prop1Report demonstrate_prop1(const TestSpec& test, const StrategyGrid& grid, double epsilon,
                              int horizon, const EvaluationMode& mode, double slack = 0.01,
                              int threads = 0);

struct CurveOptions {
  int trials = 10000;
  std::uint64_t seed = 0;
  int bootstrap = 200;
  double confidence = 0.95;
  int threads = 0;
};

struct CurvePoint {
  int horizon = 0;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  GameMatrix matrix;
  GameReport game;
  // Longest widened acceptance region met by any expert at this horizon.
  double max_region_length = 0.0;
};

// Game value of `test` at each horizon, with Monte Carlo matrices and a
// parametric bootstrap interval (entries redrawn as binomial proportions).
std::vector<CurvePoint> manipulation_curve(const StrategyGrid& grid, const TestSpec& test,
                                           const std::vector<int>& horizons,
                                           const CurveOptions& options);

// Bootstrap percentile interval of the game value of a Monte Carlo matrix.
std::pair<double, double> bootstrap_value_interval(const GameMatrix& matrix, int resamples,
                                                   double confidence, std::uint64_t seed);

namespace detail {
// Monte Carlo over whole traces with no shortcuts; the reference that the
// composed_T fast path is checked against.
PassEstimate pass_probability_full_trace(const Prior& expert, const Prior& truth,
                                         const TestSpec& test, int horizon,
                                         const MonteCarloMode& mode);
}  // namespace detail

// ---------------------------------------------------------------------------
// Strategy generators.

// PointMass(j / (count - 1)) for j = 0..count-1.
std::vector<Prior> point_mass_grid(int count);

// Every GridPrior on `points` whose weights are multiples of 1/denominator
// (single atoms included).
std::vector<Prior> lattice_mixtures(const std::vector<double>& points, int denominator);

// Equal-weight mixtures of k atoms in arithmetic progression over `points`,
// for k = 2..max_atoms and strides up to max_stride (0 means unlimited).
std::vector<Prior> progression_mixtures(const std::vector<double>& points, int max_atoms,
                                        int max_stride = 0);

}  // namespace preqlab

#endif  // PREQLAB_MANIPULATION_HPP_
