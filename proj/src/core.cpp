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

#include "preqlab/core.hpp"

#include <sstream>

namespace preqlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// count * log(p) with 0 * log(0) = 0.
double xlogy(int count, double p) {
  if (count == 0) return 0.0;
  if (p <= 0.0) return kNegInf;
  return count * std::log(p);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

bool point_mass_defined(double q, int length, int ones) {
  return !((q == 0.0 && ones > 0) || (q == 1.0 && length - ones > 0));
}

}  // namespace

BetaPrior::BetaPrior(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InvalidArgument("Beta prior parameters must be positive and finite");
  }
}

PointMass::PointMass(double q) : q_(q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("point mass outside [0,1]");
}

std::string describe(const Prior& prior) {
  std::ostringstream out;
  out.precision(6);
  std::visit(Overloaded{
                 [&](const GridPrior<double>& g) { out << "grid(" << g.size() << " atoms)"; },
                 [&](const BetaPrior& b) { out << "beta(" << b.alpha() << "," << b.beta() << ")"; },
                 [&](const PointMass& p) { out << "point(" << p.q() << ")"; },
             },
             prior);
  return out.str();
}

GridPrior<double> discretize(const BetaPrior& prior, int grid_size) {
  if (grid_size < 1) throw InvalidParams("grid size must be positive");
  Eigen::VectorXd points(grid_size), log_density(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double q = (i + 0.5) / grid_size;
    points[i] = q;
    log_density[i] = (prior.alpha() - 1.0) * std::log(q) + (prior.beta() - 1.0) * std::log1p(-q);
  }
  Eigen::VectorXd weights = (log_density.array() - log_density.maxCoeff()).exp();
  weights /= weights.sum();
  return GridPrior<double>(std::move(points), std::move(weights));
}

namespace detail {

double log_grid_mass(const GridPrior<double>& prior, int length, int ones) {
  double peak = kNegInf;
  std::vector<double> terms(static_cast<std::size_t>(prior.size()));
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const double q = prior.points()[i];
    const double w = prior.weights()[i];
    terms[i] = w > 0.0 ? std::log(w) + xlogy(ones, q) + xlogy(length - ones, 1.0 - q) : kNegInf;
    peak = std::max(peak, terms[i]);
  }
  if (peak == kNegInf) return kNegInf;
  double total = 0.0;
  for (double t : terms) total += std::exp(t - peak);
  return peak + std::log(total);
}

double grid_forecast(const GridPrior<double>& prior, int length, int ones) {
  double peak = kNegInf;
  std::vector<double> terms(static_cast<std::size_t>(prior.size()));
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const double q = prior.points()[i];
    const double w = prior.weights()[i];
    terms[i] = w > 0.0 ? std::log(w) + xlogy(ones, q) + xlogy(length - ones, 1.0 - q) : kNegInf;
    peak = std::max(peak, terms[i]);
  }
  if (peak == kNegInf) throw ZeroMassHistory("forecast undefined: history has zero mass");
  double numerator = 0.0, denominator = 0.0;
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const double e = std::exp(terms[i] - peak);
    numerator += e * prior.points()[i];
    denominator += e;
  }
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

}  // namespace detail

double path_probability(const Prior& prior, int length, int ones) {
  return std::visit(
      Overloaded{
          [&](const GridPrior<double>& g) { return path_probability(g, length, ones); },
          [&](const BetaPrior& b) {
            return std::exp(log_beta(b.alpha() + ones, b.beta() + length - ones) -
                            log_beta(b.alpha(), b.beta()));
          },
          [&](const PointMass& p) {
            return std::pow(p.q(), ones) * std::pow(1.0 - p.q(), length - ones);
          },
      },
      prior);
}

double path_probability(const Prior& prior, const Realization& sigma) {
  return path_probability(prior, sigma.length(), sigma.ones());
}

double log_path_probability(const Prior& prior, int length, int ones) {
  return std::visit(
      Overloaded{
          [&](const GridPrior<double>& g) { return detail::log_grid_mass(g, length, ones); },
          [&](const BetaPrior& b) {
            return log_beta(b.alpha() + ones, b.beta() + length - ones) -
                   log_beta(b.alpha(), b.beta());
          },
          [&](const PointMass& p) {
            return xlogy(ones, p.q()) + xlogy(length - ones, 1.0 - p.q());
          },
      },
      prior);
}

double forecast(const Prior& prior, int length, int ones) {
  return std::visit(
      Overloaded{
          [&](const GridPrior<double>& g) { return detail::grid_forecast(g, length, ones); },
          [&](const BetaPrior& b) { return (b.alpha() + ones) / (b.alpha() + b.beta() + length); },
          [&](const PointMass& p) {
            if (!point_mass_defined(p.q(), length, ones)) {
              throw ZeroMassHistory("forecast undefined: history has zero mass");
            }
            return p.q();
          },
      },
      prior);
}

double forecast(const Prior& prior, const Realization& history) {
  return forecast(prior, history.length(), history.ones());
}

Prior posterior(const Prior& prior, int outcome) {
  check_outcome(outcome);
  return std::visit(
      Overloaded{
          [&](const GridPrior<double>& g) -> Prior { return posterior(g, outcome); },
          [&](const BetaPrior& b) -> Prior {
            return BetaPrior(b.alpha() + outcome, b.beta() + 1 - outcome);
          },
          [&](const PointMass& p) -> Prior {
            if (!point_mass_defined(p.q(), 1, outcome)) {
              throw ZeroMassOutcome("posterior undefined: outcome has zero probability");
            }
            return p;
          },
      },
      prior);
}

double prior_moment(const Prior& prior, int k) {
  return std::visit(Overloaded{
                        [&](const GridPrior<double>& g) { return g.moment(k); },
                        [&](const BetaPrior& b) {
                          double m = 1.0;
                          for (int i = 0; i < k; ++i) {
                            m *= (b.alpha() + i) / (b.alpha() + b.beta() + i);
                          }
                          return m;
                        },
                        [&](const PointMass& p) { return std::pow(p.q(), k); },
                    },
                    prior);
}

double draw_parameter(const Prior& prior, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const GridPrior<double>& g) {
            const double u = uniform01(rng);
            double cumulative = 0.0;
            for (Eigen::Index i = 0; i < g.size(); ++i) {
              cumulative += g.weights()[i];
              if (u < cumulative) return g.points()[i];
            }
            // u landed in the rounding slack above the last partial sum.
            for (Eigen::Index i = g.size() - 1; i >= 0; --i) {
              if (g.weights()[i] > 0.0) return g.points()[i];
            }
            return g.points()[g.size() - 1];
          },
          [&](const BetaPrior& b) {
            std::gamma_distribution<double> x(b.alpha(), 1.0), y(b.beta(), 1.0);
            const double gx = x(rng);
            const double gy = y(rng);
            return gx + gy > 0.0 ? gx / (gx + gy) : 0.5;
          },
          [&](const PointMass& p) { return p.q(); },
      },
      prior);
}

Realization sample_realization(const Prior& prior, int horizon, Rng& rng) {
  if (horizon < 0) throw InvalidArgument("horizon must be nonnegative");
  const double q = draw_parameter(prior, rng);
  std::vector<std::uint8_t> symbols(static_cast<std::size_t>(horizon));
  for (auto& s : symbols) s = static_cast<std::uint8_t>(bernoulli(rng, q));
  return Realization(std::move(symbols));
}

Realization sample_realization(const Prior& prior, int horizon, std::uint64_t seed) {
  Rng rng(seed);
  return sample_realization(prior, horizon, rng);
}

ForecastTrace<double> make_trace(const Prior& prior, const Realization& x) {
  SequentialForecaster forecaster(prior);
  std::vector<double> forecasts;
  forecasts.reserve(x.size());
  for (int n = 0; n < x.length(); ++n) {
    forecasts.push_back(forecaster.current());
    forecaster.observe(x[n]);
  }
  return ForecastTrace<double>(std::move(forecasts), x);
}

SequentialForecaster::SequentialForecaster(const Prior& prior) : prior_(prior) {
  if (const auto* g = std::get_if<GridPrior<double>>(&prior_)) {
    const auto n = static_cast<std::size_t>(g->size());
    log_weights_.resize(n);
    log_q_.resize(n);
    log_1mq_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = g->weights()[static_cast<Eigen::Index>(i)];
      const double q = g->points()[static_cast<Eigen::Index>(i)];
      log_weights_[i] = w > 0.0 ? std::log(w) : kNegInf;
      log_q_[i] = q > 0.0 ? std::log(q) : kNegInf;
      log_1mq_[i] = q < 1.0 ? std::log1p(-q) : kNegInf;
    }
  }
}

bool SequentialForecaster::defined() const noexcept {
  if (const auto* p = std::get_if<PointMass>(&prior_)) {
    return point_mass_defined(p->q(), length_, ones_);
  }
  if (std::holds_alternative<GridPrior<double>>(prior_)) {
    return std::any_of(log_weights_.begin(), log_weights_.end(),
                       [](double lw) { return lw != kNegInf; });
  }
  return true;
}

double SequentialForecaster::current() const {
  if (const auto* g = std::get_if<GridPrior<double>>(&prior_)) {
    const double peak = *std::max_element(log_weights_.begin(), log_weights_.end());
    if (peak == kNegInf) throw ZeroMassHistory("forecast undefined: history has zero mass");
    double numerator = 0.0, denominator = 0.0;
    for (std::size_t i = 0; i < log_weights_.size(); ++i) {
      const double e = std::exp(log_weights_[i] - peak);
      numerator += e * g->points()[static_cast<Eigen::Index>(i)];
      denominator += e;
    }
    return std::clamp(numerator / denominator, 0.0, 1.0);
  }
  return forecast(prior_, length_, ones_);
}

void SequentialForecaster::observe(int outcome) {
  check_outcome(outcome);
  if (!log_weights_.empty()) {
    const auto& step = outcome == 1 ? log_q_ : log_1mq_;
    for (std::size_t i = 0; i < log_weights_.size(); ++i) log_weights_[i] += step[i];
  }
  ++length_;
  ones_ += outcome;
}

}  // namespace preqlab
