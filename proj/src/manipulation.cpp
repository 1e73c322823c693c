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

#include "preqlab/manipulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "preqlab/errors.hpp"
#include "preqlab/parallel.hpp"
#include "preqlab/rng.hpp"
#include "preqlab/stats.hpp"

namespace preqlab {
namespace {

// Forecasts depend on (length, ones) only; undefined entries are NaN.
class ForecastTable {
 public:
  ForecastTable(const Prior& expert, int horizon) : horizon_(horizon) {
    values_.resize(static_cast<std::size_t>(horizon) * (horizon + 1),
                   std::numeric_limits<double>::quiet_NaN());
    for (int n = 0; n < horizon; ++n) {
      for (int k = 0; k <= n; ++k) {
        if (log_path_probability(expert, n, k) == -std::numeric_limits<double>::infinity()) {
          continue;
        }
        values_[index(n, k)] = forecast(expert, n, k);
      }
    }
  }
  double at(int n, int k) const { return values_[index(n, k)]; }

 private:
  std::size_t index(int n, int k) const {
    return static_cast<std::size_t>(n) * (horizon_ + 1) + static_cast<std::size_t>(k);
  }
  int horizon_;
  std::vector<double> values_;
};

bool inside_widened(const AcceptanceRegion& region, double q, double margin) {
  for (const auto& iv : region.intervals()) {
    if (q >= iv.lo - margin && q <= iv.hi + margin) return true;
  }
  return false;
}

// Depth-first walk over all outcome strings of length N, pruning subtrees the
// truth never reaches and subtrees where the expert's forecast is undefined.
class Enumerator {
 public:
  Enumerator(const Prior& expert, const Prior& truth, const TestSpec& spec)
      : spec_(spec), n_(spec.horizon), table_(expert, spec.horizon) {
    truth_mass_.resize(static_cast<std::size_t>(n_) + 1);
    for (int k = 0; k <= n_; ++k) truth_mass_[k] = path_probability(truth, n_, k);
    composed_ = std::get_if<ComposedParams>(&spec_.params);
    forecasts_.reserve(static_cast<std::size_t>(n_));
  }

  double run() {
    visit(0, 0, nullptr);
    return std::clamp(total_, 0.0, 1.0);
  }

 private:
  void visit(int depth, int ones, const AcceptanceRegion* region) {
    if (depth == n_) {
      total_ += leaf_passes(ones, region) ? truth_mass_[ones] : 0.0;
      return;
    }
    const double p = table_.at(depth, ones);
    if (std::isnan(p)) return;  // zero-mass history for the expert: FAIL
    std::optional<AcceptanceRegion> owned;
    for (int s = 0; s <= 1; ++s) {
      forecasts_.push_back(p);
      outcomes_.push_back(s);
      if (reachable(depth + 1, ones + s)) {
        if (composed_ && depth + 1 == composed_->recovery_order) {
          const auto a = assess_prefix(forecasts_, outcomes_, *composed_);
          if (a.region) visit(depth + 1, ones + s, &*a.region);
        } else {
          visit(depth + 1, ones + s, region);
        }
      }
      forecasts_.pop_back();
      outcomes_ = outcomes_.prefix(outcomes_.size() - 1);
    }
  }

  // Can the truth produce some path through (length, ones)? Path masses only
  // shrink along a path, so checking the extremes of the completions suffices.
  bool reachable(int length, int ones) const {
    for (int extra = 0; extra <= n_ - length; ++extra) {
      if (truth_mass_[ones + extra] > 0.0) return true;
    }
    return false;
  }

  bool leaf_passes(int ones, const AcceptanceRegion* region) const {
    if (composed_) {
      return region != nullptr &&
             inside_widened(*region, static_cast<double>(ones) / n_, composed_->margin(n_));
    }
    return run_test(spec_, ForecastTrace<double>(forecasts_, outcomes_)) == Verdict::kPass;
  }

  const TestSpec& spec_;
  int n_;
  ForecastTable table_;
  std::vector<double> truth_mass_;
  const ComposedParams* composed_ = nullptr;
  std::vector<double> forecasts_;
  Realization outcomes_;
  double total_ = 0.0;
};

PassEstimate from_counts(long passes, int trials) {
  PassEstimate est;
  est.exact = false;
  est.trials = trials;
  est.value = static_cast<double>(passes) / trials;
  est.std_error = std::sqrt(est.value * (1.0 - est.value) / trials);
  return est;
}

TestSpec at_horizon(const TestSpec& test, int horizon) {
  TestSpec spec = test.with_horizon(horizon);
  spec.validate();
  return spec;
}

PassEstimate monte_carlo_full_trace(const Prior& expert, const Prior& truth, const TestSpec& spec,
                                    const MonteCarloMode& mode) {
  if (mode.trials < 1) throw InvalidParams("Monte Carlo needs at least one trial");
  Rng rng(mode.seed);
  long passes = 0;
  std::vector<double> forecasts;
  for (int t = 0; t < mode.trials; ++t) {
    const double q = draw_parameter(truth, rng);
    SequentialForecaster expert_forecaster(expert);
    forecasts.clear();
    std::vector<std::uint8_t> outcomes;
    bool defined = true;
    for (int n = 0; n < spec.horizon; ++n) {
      // Keep drawing even after the expert breaks down, so that the random
      // stream stays aligned across experts.
      if (defined && !expert_forecaster.defined()) defined = false;
      const int s = bernoulli(rng, q);
      if (defined) {
        forecasts.push_back(expert_forecaster.current());
        expert_forecaster.observe(s);
      }
      outcomes.push_back(static_cast<std::uint8_t>(s));
    }
    if (!defined) continue;
    const ForecastTrace<double> trace(forecasts, Realization(std::move(outcomes)));
    if (run_test(spec, trace) == Verdict::kPass) ++passes;
  }
  return from_counts(passes, mode.trials);
}

}  // namespace

void StrategyGrid::validate() const {
  if (experts.empty()) throw InvalidParams("strategy grid needs at least one expert theory");
  if (truths.empty()) throw InvalidParams("strategy grid needs at least one truth");
}

// ---------------------------------------------------------------------------

PrefixRegionCache::PrefixRegionCache(Prior expert, ComposedParams params)
    : expert_(std::move(expert)), params_(params) {
  params_.validate();
  if (params_.recovery_order > 24) {
    throw InvalidParams("prefix cache supports recovery_order up to 24");
  }
  regions_.resize(std::size_t{1} << params_.recovery_order);
}

const std::optional<AcceptanceRegion>& PrefixRegionCache::region(std::uint64_t prefix_bits) {
  auto& slot = regions_.at(prefix_bits);
  if (slot) return *slot;
  const int order = params_.recovery_order;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) bits[i] = static_cast<std::uint8_t>((prefix_bits >> i) & 1U);
  const Realization prefix(std::move(bits));

  forecasts_.clear();
  int ones = 0;
  for (int n = 0; n < order; ++n) {
    if (log_path_probability(expert_, n, ones) == -std::numeric_limits<double>::infinity()) {
      slot.emplace(std::nullopt);
      return *slot;
    }
    forecasts_.push_back(forecast(expert_, n, ones));
    ones += prefix[n];
  }
  slot.emplace(assess_prefix(forecasts_, prefix, params_).region);
  return *slot;
}

double PrefixRegionCache::max_widened_length(double margin) const {
  double longest = 0.0;
  for (const auto& slot : regions_) {
    if (slot && *slot) longest = std::max(longest, (*slot)->widened(margin).total_length());
  }
  return longest;
}

PassEstimate pass_probability(PrefixRegionCache& cache, const Prior& truth, int horizon,
                              const MonteCarloMode& mode) {
  const int order = cache.params().recovery_order;
  if (horizon < order) throw InvalidParams("composed_T horizon is below the recovery order");
  if (mode.trials < 1) throw InvalidParams("Monte Carlo needs at least one trial");
  const double margin = cache.params().margin(horizon);
  const int tail = horizon - order;
  const auto& expert = cache.expert();
  Rng rng(mode.seed);
  long passes = 0;
  for (int t = 0; t < mode.trials; ++t) {
    const double q = draw_parameter(truth, rng);
    std::uint64_t bits = 0;
    int ones = 0;
    for (int i = 0; i < order; ++i) {
      const int s = bernoulli(rng, q);
      bits |= static_cast<std::uint64_t>(s) << i;
      ones += s;
    }
    // Only the count of later ones matters to the verdict; the last outcome
    // is drawn on its own because the forecast for it must be defined.
    int before_last = ones;
    if (tail > 0) {
      std::binomial_distribution<int> middle(tail - 1, q);
      before_last += middle(rng);
      ones = before_last + bernoulli(rng, q);
      if (log_path_probability(expert, horizon - 1, before_last) ==
          -std::numeric_limits<double>::infinity()) {
        continue;
      }
    }
    const auto& region = cache.region(bits);
    if (region && inside_widened(*region, static_cast<double>(ones) / horizon, margin)) ++passes;
  }
  return from_counts(passes, mode.trials);
}

PassEstimate pass_probability(const Prior& expert, const Prior& truth, const TestSpec& test,
                              int horizon, const EvaluationMode& mode) {
  const TestSpec spec = at_horizon(test, horizon);
  if (std::holds_alternative<ExactMode>(mode)) {
    if (horizon > kMaxExactHorizon) {
      throw HorizonTooLarge("exact enumeration is capped at horizon " +
                            std::to_string(kMaxExactHorizon));
    }
    return PassEstimate{Enumerator(expert, truth, spec).run(), 0.0, true, 0};
  }
  const auto& mc = std::get<MonteCarloMode>(mode);
  if (const auto* composed = std::get_if<ComposedParams>(&spec.params)) {
    PrefixRegionCache cache(expert, *composed);
    return pass_probability(cache, truth, horizon, mc);
  }
  return monte_carlo_full_trace(expert, truth, spec, mc);
}

namespace detail {
PassEstimate pass_probability_full_trace(const Prior& expert, const Prior& truth,
                                         const TestSpec& test, int horizon,
                                         const MonteCarloMode& mode) {
  return monte_carlo_full_trace(expert, truth, at_horizon(test, horizon), mode);
}
}  // namespace detail

// ---------------------------------------------------------------------------

namespace {

GameMatrix empty_matrix(Eigen::Index rows, Eigen::Index cols, const EvaluationMode& mode) {
  GameMatrix g;
  g.pass_prob = Eigen::MatrixXd::Zero(rows, cols);
  g.std_error = Eigen::MatrixXd::Zero(rows, cols);
  g.exact = std::holds_alternative<ExactMode>(mode);
  if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) g.trials = mc->trials;
  return g;
}

// Fills row i of `g`, reusing one prefix cache across the row for composed_T.
void fill_row(GameMatrix& g, std::size_t i, const Prior& expert, const std::vector<Prior>& truths,
              const TestSpec& spec, const EvaluationMode& mode, PrefixRegionCache* cache) {
  const auto cols = truths.size();
  for (std::size_t j = 0; j < cols; ++j) {
    PassEstimate est;
    if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) {
      const MonteCarloMode entry{mc->trials, derive_seed(mc->seed, i * cols + j)};
      est = cache ? pass_probability(*cache, truths[j], spec.horizon, entry)
                  : pass_probability(expert, truths[j], spec, spec.horizon, entry);
    } else {
      est = pass_probability(expert, truths[j], spec, spec.horizon, mode);
    }
    g.pass_prob(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = est.value;
    g.std_error(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = est.std_error;
  }
}

}  // namespace

GameMatrix build_game(const StrategyGrid& grid, const TestSpec& test, int horizon,
                      const EvaluationMode& mode, int threads) {
  grid.validate();
  const TestSpec spec = at_horizon(test, horizon);
  GameMatrix g = empty_matrix(static_cast<Eigen::Index>(grid.experts.size()),
                              static_cast<Eigen::Index>(grid.truths.size()), mode);
  const auto* composed = std::get_if<ComposedParams>(&spec.params);
  const bool use_cache = composed && std::holds_alternative<MonteCarloMode>(mode);
  parallel_for(grid.experts.size(), threads, [&](std::size_t i) {
    std::optional<PrefixRegionCache> cache;
    if (use_cache) cache.emplace(grid.experts[i], *composed);
    fill_row(g, i, grid.experts[i], grid.truths, spec, mode, cache ? &*cache : nullptr);
  });
  return g;
}

Eigen::VectorXd self_acceptance(const std::vector<Prior>& truths, const TestSpec& test,
                                int horizon, const EvaluationMode& mode, int threads) {
  if (truths.empty()) throw InvalidParams("self_acceptance needs at least one truth");
  Eigen::VectorXd out(static_cast<Eigen::Index>(truths.size()));
  parallel_for(truths.size(), threads, [&](std::size_t j) {
    EvaluationMode entry = mode;
    if (auto* mc = std::get_if<MonteCarloMode>(&entry)) {
      mc->seed = derive_seed(mc->seed, j * truths.size() + j);
    }
    out[static_cast<Eigen::Index>(j)] =
        pass_probability(truths[j], truths[j], test, horizon, entry).value;
  });
  return out;
}

Prop1Report demonstrate_prop1(const TestSpec& test, const StrategyGrid& grid, double epsilon,
                              int horizon, const EvaluationMode& mode, double slack,
                              int threads) {
  grid.validate();
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidParams("epsilon must lie in [0,1)");
  Prop1Report report;
  report.epsilon = epsilon;
  report.acceptance = self_acceptance(grid.truths, test, horizon, mode, threads);
  for (Eigen::Index j = 0; j < report.acceptance.size(); ++j) {
    if (report.acceptance[j] < 1.0 - epsilon - 1e-12) {
      throw PreconditionFailed("the test accepts truth " + std::to_string(j) + " (" +
                               describe(grid.truths[static_cast<std::size_t>(j)]) +
                               ") with probability " + std::to_string(report.acceptance[j]) +
                               " < 1 - epsilon");
    }
  }
  report.matrix = build_game(grid, test, horizon, mode, threads);
  report.game = solve_game(report.matrix.pass_prob);
  Eigen::Index worst = 0;
  (report.game.solution.row_strategy.transpose() * report.matrix.pass_prob).minCoeff(&worst);
  report.worst_truth = static_cast<int>(worst);
  report.bound = 1.0 - epsilon - slack;
  report.bound_holds = report.game.solution.value >= report.bound;
  return report;
}

std::pair<double, double> bootstrap_value_interval(const GameMatrix& matrix, int resamples,
                                                   double confidence, std::uint64_t seed) {
  if (matrix.exact || matrix.trials < 1) {
    const double v = solve_game_lp(matrix.pass_prob).value;
    return {v, v};
  }
  if (resamples < 1) throw InvalidParams("bootstrap needs at least one resample");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidParams("confidence must lie in (0,1)");
  Rng rng(seed);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  Eigen::MatrixXd draw(matrix.pass_prob.rows(), matrix.pass_prob.cols());
  for (int b = 0; b < resamples; ++b) {
    for (Eigen::Index j = 0; j < draw.cols(); ++j) {
      for (Eigen::Index i = 0; i < draw.rows(); ++i) {
        std::binomial_distribution<int> count(matrix.trials, matrix.pass_prob(i, j));
        draw(i, j) = static_cast<double>(count(rng)) / matrix.trials;
      }
    }
    values.push_back(solve_game_lp(draw).value);
  }
  std::sort(values.begin(), values.end());
  const double tail = 0.5 * (1.0 - confidence);
  return {sorted_quantile(values, tail), sorted_quantile(values, 1.0 - tail)};
}

std::vector<CurvePoint> manipulation_curve(const StrategyGrid& grid, const TestSpec& test,
                                           const std::vector<int>& horizons,
                                           const CurveOptions& options) {
  grid.validate();
  if (horizons.empty()) throw InvalidParams("manipulation_curve needs at least one horizon");
  if (!std::is_sorted(horizons.begin(), horizons.end()) ||
      std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
    throw InvalidParams("horizons must be strictly increasing");
  }
  for (int n : horizons) at_horizon(test, n);

  const auto* composed = std::get_if<ComposedParams>(&test.params);
  std::vector<std::optional<PrefixRegionCache>> caches(grid.experts.size());
  if (composed) {
    for (std::size_t i = 0; i < caches.size(); ++i) caches[i].emplace(grid.experts[i], *composed);
  }

  std::vector<CurvePoint> curve;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const int n = horizons[h];
    const TestSpec spec = at_horizon(test, n);
    const MonteCarloMode mode{options.trials, derive_seed(options.seed, h)};
    CurvePoint point;
    point.horizon = n;
    point.matrix = empty_matrix(static_cast<Eigen::Index>(grid.experts.size()),
                                static_cast<Eigen::Index>(grid.truths.size()), mode);
    parallel_for(grid.experts.size(), options.threads, [&](std::size_t i) {
      fill_row(point.matrix, i, grid.experts[i], grid.truths, spec, mode,
               caches[i] ? &*caches[i] : nullptr);
    });
    point.game = solve_game(point.matrix.pass_prob);
    point.value = point.game.solution.value;
    std::tie(point.ci_lo, point.ci_hi) =
        bootstrap_value_interval(point.matrix, options.bootstrap, options.confidence,
                                 derive_seed(mode.seed, 0x626f6f74ULL));
    if (composed) {
      for (const auto& cache : caches) {
        point.max_region_length =
            std::max(point.max_region_length, cache->max_widened_length(composed->margin(n)));
      }
    }
    curve.push_back(std::move(point));
  }
  return curve;
}

// ---------------------------------------------------------------------------

std::vector<Prior> point_mass_grid(int count) {
  if (count < 1) throw InvalidParams("point_mass_grid needs count >= 1");
  std::vector<Prior> out;
  if (count == 1) {
    out.emplace_back(PointMass(0.5));
    return out;
  }
  for (int j = 0; j < count; ++j) out.emplace_back(PointMass(static_cast<double>(j) / (count - 1)));
  return out;
}

std::vector<Prior> lattice_mixtures(const std::vector<double>& points, int denominator) {
  if (points.empty()) throw InvalidParams("lattice_mixtures needs at least one point");
  if (denominator < 1) throw InvalidParams("lattice_mixtures needs denominator >= 1");
  std::vector<Prior> out;
  std::vector<int> parts(points.size(), 0);
  // Enumerate compositions of `denominator` into points.size() parts.
  auto emit = [&] {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] > 0) atoms.emplace_back(points[i], static_cast<double>(parts[i]) / denominator);
    }
    if (atoms.size() == 1) {
      out.emplace_back(PointMass(atoms.front().first));
    } else {
      out.emplace_back(GridPrior<double>::from_atoms(std::move(atoms)));
    }
  };
  auto recurse = [&](auto&& self, std::size_t i, int remaining) -> void {
    if (i + 1 == parts.size()) {
      parts[i] = remaining;
      emit();
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      parts[i] = c;
      self(self, i + 1, remaining - c);
    }
  };
  recurse(recurse, 0, denominator);
  return out;
}

std::vector<Prior> progression_mixtures(const std::vector<double>& points, int max_atoms,
                                        int max_stride) {
  const int n = static_cast<int>(points.size());
  std::vector<Prior> out;
  for (int k = 2; k <= max_atoms; ++k) {
    for (int stride = 1; (k - 1) * stride < n; ++stride) {
      if (max_stride > 0 && stride > max_stride) break;
      for (int offset = 0; offset + (k - 1) * stride < n; ++offset) {
        std::vector<std::pair<double, double>> atoms;
        for (int a = 0; a < k; ++a) atoms.emplace_back(points[offset + a * stride], 1.0 / k);
        out.emplace_back(GridPrior<double>::from_atoms(std::move(atoms)));
      }
    }
  }
  return out;
}

}  // namespace preqlab
