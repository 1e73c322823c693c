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

#ifndef PREQLAB_CORE_HPP_
#define PREQLAB_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "preqlab/common.hpp"
#include "preqlab/errors.hpp"
#include "preqlab/realization.hpp"
#include "preqlab/rng.hpp"

namespace preqlab {

// A discrete mixing distribution over coin biases q in [0,1]: the
// exchangeable theory it induces draws q once and then flips i.i.d. coins.
// Points are strictly increasing; weights are nonnegative and sum to one
// (exactly for exact scalars, within 1e-12 otherwise).
template <typename Scalar>
class GridPrior {
 public:
  using VectorType = Vector<Scalar>;

  GridPrior(VectorType points, VectorType weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    validate();
  }

  // Builds a prior from unordered (point, weight) pairs, merging duplicates.
  static GridPrior from_atoms(std::vector<std::pair<Scalar, Scalar>> atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Scalar, Scalar>> merged;
    for (auto& atom : atoms) {
      if (!merged.empty() && merged.back().first == atom.first) {
        merged.back().second += atom.second;
      } else {
        merged.push_back(atom);
      }
    }
    VectorType points(static_cast<Eigen::Index>(merged.size()));
    VectorType weights(points.size());
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      points[i] = merged[i].first;
      weights[i] = merged[i].second;
    }
    return GridPrior(std::move(points), std::move(weights));
  }

  static GridPrior point(const Scalar& q) {
    VectorType points(1), weights(1);
    points[0] = q;
    weights[0] = Scalar(1);
    return GridPrior(std::move(points), std::move(weights));
  }

  // Uniform grid {0, 1/(n-1), ..., 1} with the given weights (n >= 2).
  static VectorType uniform_grid(int size) {
    if (size < 1) throw InvalidParams("grid size must be positive");
    VectorType grid(size);
    if (size == 1) {
      grid[0] = Scalar(1) / Scalar(2);
      return grid;
    }
    for (int i = 0; i < size; ++i) grid[i] = Scalar(i) / Scalar(size - 1);
    return grid;
  }

  const VectorType& points() const noexcept { return points_; }
  const VectorType& weights() const noexcept { return weights_; }
  Eigen::Index size() const noexcept { return points_.size(); }

  // The k-th raw moment: sum_i w_i q_i^k.
  Scalar moment(int k) const {
    Scalar total(0);
    for (Eigen::Index i = 0; i < size(); ++i) {
      total += weights_[i] * ipow(points_[i], k);
    }
    return total;
  }

  VectorType moments(int max_order) const {
    VectorType m(max_order + 1);
    for (int k = 0; k <= max_order; ++k) m[k] = moment(k);
    return m;
  }

  template <typename To>
  GridPrior<To> cast() const {
    Vector<To> points(size()), weights(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      points[i] = scalar_cast<To>(points_[i]);
      weights[i] = scalar_cast<To>(weights_[i]);
    }
    if constexpr (std::is_floating_point_v<To>) {
      weights /= weights.sum();
    }
    return GridPrior<To>(std::move(points), std::move(weights));
  }

  bool operator==(const GridPrior& other) const {
    return points_ == other.points_ && weights_ == other.weights_;
  }

 private:
  void validate() const {
    if (points_.size() == 0) throw InvalidArgument("grid prior needs at least one point");
    if (points_.size() != weights_.size()) {
      throw InvalidArgument("grid prior points and weights differ in length");
    }
    Scalar total(0);
    for (Eigen::Index i = 0; i < points_.size(); ++i) {
      if (!(points_[i] >= Scalar(0) && points_[i] <= Scalar(1))) {
        throw InvalidArgument("grid prior point outside [0,1]");
      }
      if (i > 0 && !(points_[i - 1] < points_[i])) {
        throw InvalidArgument("grid prior points must be strictly increasing");
      }
      if (!(weights_[i] >= Scalar(0))) {
        throw InvalidArgument("grid prior weights must be nonnegative");
      }
      total += weights_[i];
    }
    if constexpr (is_exact_v<Scalar>) {
      if (total != Scalar(1)) throw InvalidArgument("grid prior weights must sum to 1");
    } else {
      using std::abs;
      if (abs(total - Scalar(1)) > Scalar(1e-12)) {
        throw InvalidArgument("grid prior weights must sum to 1");
      }
    }
  }

  VectorType points_;
  VectorType weights_;
};

// Beta(alpha, beta) mixing distribution; Beta(1,1) is the uniform prior.
class BetaPrior {
 public:
  BetaPrior(double alpha, double beta);
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  bool operator==(const BetaPrior&) const = default;

 private:
  double alpha_;
  double beta_;
};

// Dirac mass at q: the i.i.d. coin with bias q.
class PointMass {
 public:
  explicit PointMass(double q);
  double q() const noexcept { return q_; }
  bool operator==(const PointMass&) const = default;

 private:
  double q_;
};

using Prior = std::variant<GridPrior<double>, BetaPrior, PointMass>;

std::string describe(const Prior& prior);

// Midpoint-rule discretization of a Beta density on `grid_size` cells.
GridPrior<double> discretize(const BetaPrior& prior, int grid_size = 1001);

// ---------------------------------------------------------------------------
// Path probabilities and forecasts. Every path functional depends on a
// realization only through its length n and its count of ones k.

// sum_i w_i q_i^k (1 - q_i)^(n - k), evaluated directly.
template <typename Scalar>
Scalar path_probability(const GridPrior<Scalar>& prior, int length, int ones) {
  Scalar total(0);
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const Scalar& q = prior.points()[i];
    total += prior.weights()[i] * ipow(q, ones) * ipow(Scalar(1) - q, length - ones);
  }
  return total;
}

template <typename Scalar>
Scalar path_probability(const GridPrior<Scalar>& prior, const Realization& sigma) {
  return path_probability(prior, sigma.length(), sigma.ones());
}

namespace detail {
// log sum_i w_i q_i^k (1-q_i)^(n-k), -inf when the history has zero mass.
double log_grid_mass(const GridPrior<double>& prior, int length, int ones);
double grid_forecast(const GridPrior<double>& prior, int length, int ones);
}  // namespace detail

// One-step forecast of outcome 1 after a history with `ones` ones among
// `length` outcomes. Throws ZeroMassHistory when the history has zero mass.
template <typename Scalar>
Scalar forecast(const GridPrior<Scalar>& prior, int length, int ones) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return detail::grid_forecast(prior, length, ones);
  } else {
    const Scalar denominator = path_probability(prior, length, ones);
    if (denominator == Scalar(0)) {
      throw ZeroMassHistory("forecast undefined: history has zero mass");
    }
    return path_probability(prior, length + 1, ones + 1) / denominator;
  }
}

template <typename Scalar>
Scalar forecast(const GridPrior<Scalar>& prior, const Realization& history) {
  return forecast(prior, history.length(), history.ones());
}

// Bayes update on one outcome; throws ZeroMassOutcome if it has probability 0.
template <typename Scalar>
GridPrior<Scalar> posterior(const GridPrior<Scalar>& prior, int outcome) {
  check_outcome(outcome);
  Vector<Scalar> weights(prior.size());
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const Scalar& q = prior.points()[i];
    weights[i] = prior.weights()[i] * (outcome == 1 ? q : Scalar(1) - q);
  }
  const Scalar total = weights.sum();
  if (total == Scalar(0)) {
    throw ZeroMassOutcome("posterior undefined: outcome has zero probability");
  }
  weights /= total;
  return GridPrior<Scalar>(prior.points(), std::move(weights));
}

double path_probability(const Prior& prior, int length, int ones);
double path_probability(const Prior& prior, const Realization& sigma);
double log_path_probability(const Prior& prior, int length, int ones);
double forecast(const Prior& prior, int length, int ones);
double forecast(const Prior& prior, const Realization& history);
Prior posterior(const Prior& prior, int outcome);

// k-th raw moment of the mixing distribution.
double prior_moment(const Prior& prior, int k);

// Draws the coin bias q from the mixing distribution.
double draw_parameter(const Prior& prior, Rng& rng);

// Two-stage sampling: q from the prior, then `horizon` Bernoulli(q) outcomes.
Realization sample_realization(const Prior& prior, int horizon, std::uint64_t seed);
Realization sample_realization(const Prior& prior, int horizon, Rng& rng);

// ---------------------------------------------------------------------------

// Forecasts p_0..p_{N-1} (probability of outcome 1) paired with outcomes.
template <typename Scalar>
class ForecastTrace {
 public:
  ForecastTrace() = default;
  ForecastTrace(std::vector<Scalar> forecasts, Realization outcomes)
      : forecasts_(std::move(forecasts)), outcomes_(std::move(outcomes)) {
    if (forecasts_.size() != outcomes_.size()) {
      throw InvalidArgument("trace forecasts and outcomes differ in length");
    }
    for (const auto& p : forecasts_) {
      if (!(p >= Scalar(0) && p <= Scalar(1))) {
        throw InvalidArgument("trace forecast outside [0,1]");
      }
    }
  }

  int horizon() const noexcept { return outcomes_.length(); }
  const std::vector<Scalar>& forecasts() const noexcept { return forecasts_; }
  const Realization& outcomes() const noexcept { return outcomes_; }

  ForecastTrace truncated(int n) const {
    n = std::clamp(n, 0, horizon());
    return ForecastTrace(std::vector<Scalar>(forecasts_.begin(), forecasts_.begin() + n),
                         outcomes_.prefix(static_cast<std::size_t>(n)));
  }

  template <typename To>
  ForecastTrace<To> cast() const {
    std::vector<To> out;
    out.reserve(forecasts_.size());
    for (const auto& p : forecasts_) out.push_back(scalar_cast<To>(p));
    return ForecastTrace<To>(std::move(out), outcomes_);
  }

 private:
  std::vector<Scalar> forecasts_;
  Realization outcomes_;
};

// The forecasts a grid prior issues along a realization.
template <typename Scalar>
ForecastTrace<Scalar> make_trace(const GridPrior<Scalar>& prior, const Realization& x) {
  std::vector<Scalar> forecasts;
  forecasts.reserve(x.size());
  int ones = 0;
  for (int n = 0; n < x.length(); ++n) {
    forecasts.push_back(forecast(prior, n, ones));
    ones += x[n];
  }
  return ForecastTrace<Scalar>(std::move(forecasts), x);
}

ForecastTrace<double> make_trace(const Prior& prior, const Realization& x);

// Incremental forecaster: O(1) per step for Beta and point masses, O(atoms)
// for grids (log-domain posterior weights).
class SequentialForecaster {
 public:
  explicit SequentialForecaster(const Prior& prior);

  // Forecast for the next period; throws ZeroMassHistory if undefined.
  double current() const;
  bool defined() const noexcept;
  void observe(int outcome);

  int length() const noexcept { return length_; }
  int ones() const noexcept { return ones_; }

 private:
  Prior prior_;
  std::vector<double> log_weights_;
  std::vector<double> log_q_;
  std::vector<double> log_1mq_;
  int length_ = 0;
  int ones_ = 0;
};

}  // namespace preqlab

#endif  // PREQLAB_CORE_HPP_
