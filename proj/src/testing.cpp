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

#include "preqlab/testing.hpp"

#include <algorithm>
#include <cmath>

namespace preqlab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Partial sums of grid weights can fall short of an exact level by rounding.
constexpr double kLevelSlack = 1e-12;

// Frequencies like 2/8 sit exactly on tolerance boundaries such as
// |0.25 - 0.1| <= 0.15, which rounding would otherwise decide at random.
constexpr double kTieSlack = 1e-12;
bool within(double distance, double tol) { return distance <= tol + kTieSlack; }

Verdict pass_if(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::kPass ? "PASS" : "FAIL"; }

Verdict verdict_from_string(std::string_view s) {
  if (s == "PASS") return Verdict::kPass;
  if (s == "FAIL") return Verdict::kFail;
  throw InvalidArgument("unknown verdict '" + std::string(s) + "'");
}

AcceptanceRegion::AcceptanceRegion(std::vector<Interval> intervals) {
  for (auto& iv : intervals) {
    iv.lo = std::max(iv.lo, 0.0);
    iv.hi = std::min(iv.hi, 1.0);
  }
  std::erase_if(intervals, [](const Interval& iv) { return !(iv.lo <= iv.hi); });
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
  for (const auto& iv : intervals_) total_length_ += iv.length();
}

bool AcceptanceRegion::contains(double q) const noexcept {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), q,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == intervals_.begin()) return false;
  --it;
  return q <= it->hi;
}

AcceptanceRegion AcceptanceRegion::widened(double margin) const {
  std::vector<Interval> grown = intervals_;
  for (auto& iv : grown) {
    iv.lo -= margin;
    iv.hi += margin;
  }
  return AcceptanceRegion(std::move(grown));
}

void RegionParams::validate() const {
  if (quantiles < 1) throw InvalidParams("quantile count M must be at least 1");
  if (!(half_width > 0.0)) throw InvalidParams("interval half-width eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParams("delta must lie in (0,1)");
}

AcceptanceRegion build_acceptance_region(const GridPrior<double>& mu_bar, int quantiles,
                                         double half_width, double delta) {
  RegionParams{quantiles, half_width, delta}.validate();
  const auto& points = mu_bar.points();
  const auto& weights = mu_bar.weights();

  std::vector<double> centers;
  double cumulative = 0.0;
  Eigen::Index cursor = 0;
  for (int i = 1; i <= quantiles; ++i) {
    const double level = static_cast<double>(i) / (quantiles + 1);
    while (cursor < points.size() && cumulative + weights[cursor] < level - kLevelSlack) {
      cumulative += weights[cursor];
      ++cursor;
    }
    centers.push_back(points[std::min(cursor, points.size() - 1)]);
  }
  const double large_atom = delta / quantiles;
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    if (weights[i] >= large_atom) centers.push_back(points[i]);
  }

  std::vector<Interval> intervals;
  intervals.reserve(centers.size());
  for (double a : centers) intervals.push_back({a - half_width, a + half_width});
  return AcceptanceRegion(std::move(intervals));
}

AcceptanceRegion build_acceptance_region(const GridPrior<double>& mu_bar,
                                         const RegionParams& params) {
  return build_acceptance_region(mu_bar, params.quantiles, params.half_width, params.delta);
}

Verdict one_shot_test(const GridPrior<double>& mu_bar, double q_hat, const RegionParams& params) {
  return pass_if(build_acceptance_region(mu_bar, params).contains(q_hat));
}

// ---------------------------------------------------------------------------

void ComposedParams::validate() const {
  if (recovery_order < 1) throw InvalidParams("recovery_order must be at least 1");
  if (grid_size < 1) throw InvalidParams("grid_size must be positive");
  region.validate();
  if (!(widening >= 0.0)) throw InvalidParams("widening must be nonnegative");
  if (!(consistency_tol > 0.0)) throw InvalidParams("consistency_tol must be positive");
  if (!(feasibility_threshold > 0.0)) throw InvalidParams("feasibility_threshold must be positive");
}

double ComposedParams::margin(int horizon) const {
  return widening * std::sqrt(std::log(1.0 / region.delta) / (2.0 * horizon));
}

void CalibrationParams::validate() const {
  if (bins < 1) throw InvalidParams("calibration bins must be at least 1");
  if (!(tol > 0.0)) throw InvalidParams("calibration tol must be positive");
  if (min_count < 1) throw InvalidParams("calibration min_count must be at least 1");
}

void LikelihoodParams::validate() const {
  if (!(tol > 0.0)) throw InvalidParams("likelihood tol must be positive");
}

void IidFrequencyParams::validate() const {
  if (!(tol > 0.0)) throw InvalidParams("frequency tol must be positive");
}

void EventualFrequencyParams::validate() const {
  if (!(tol > 0.0)) throw InvalidParams("frequency tol must be positive");
  if (burn_in < 0) throw InvalidParams("burn_in must be nonnegative");
}

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::kComposedT: return "composed_T";
    case TestKind::kCalibration: return "calibration";
    case TestKind::kLikelihood: return "likelihood";
    case TestKind::kIidFrequency: return "iid_frequency";
    case TestKind::kEventualFrequency: return "eventual_frequency";
  }
  return "unknown";
}

TestKind test_kind_from_string(std::string_view s) {
  for (auto kind : {TestKind::kComposedT, TestKind::kCalibration, TestKind::kLikelihood,
                    TestKind::kIidFrequency, TestKind::kEventualFrequency}) {
    if (to_string(kind) == s) return kind;
  }
  throw InvalidParams("unknown test kind '" + std::string(s) + "'");
}

TestKind TestSpec::kind() const noexcept {
  return static_cast<TestKind>(params.index());
}

void TestSpec::validate() const {
  if (horizon < 1) throw InvalidParams("test horizon must be at least 1");
  std::visit([](const auto& p) { p.validate(); }, params);
  if (const auto* c = std::get_if<ComposedParams>(&params); c && c->recovery_order > horizon) {
    throw InvalidParams("composed_T recovery_order exceeds the test horizon");
  }
  if (const auto* e = std::get_if<EventualFrequencyParams>(&params); e && e->burn_in >= horizon) {
    throw InvalidParams("eventual_frequency burn_in must be below the horizon");
  }
}

TestSpec TestSpec::with_horizon(int n) const {
  TestSpec copy = *this;
  copy.horizon = n;
  return copy;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ComposedStage stage) {
  switch (stage) {
    case ComposedStage::kPassed: return "passed";
    case ComposedStage::kInconsistentTrace: return "inconsistent_trace";
    case ComposedStage::kNotCompletelyMonotone: return "not_completely_monotone";
    case ComposedStage::kInfeasible: return "infeasible_moments";
    case ComposedStage::kOutsideRegion: return "outside_region";
  }
  return "unknown";
}

PrefixAssessment assess_prefix(std::span<const double> forecasts, const Realization& prefix,
                               const ComposedParams& params) {
  PrefixAssessment out;
  const ForecastTrace<double> head(std::vector<double>(forecasts.begin(), forecasts.end()), prefix);
  try {
    out.moments = recover_moments(head, params.recovery_order,
                                  RecoveryOptions{params.consistency_tol});
  } catch (const InconsistentTrace&) {
    out.stage = ComposedStage::kInconsistentTrace;
    return out;
  }
  if (!hausdorff_check(*out.moments, params.consistency_tol)) {
    out.stage = ComposedStage::kNotCompletelyMonotone;
    return out;
  }
  try {
    auto rec = reconstruct_prior(*out.moments, params.grid_size,
                                 ReconstructionOptions{params.feasibility_threshold});
    out.moment_mismatch = rec.max_abs_error;
    out.region = build_acceptance_region(rec.prior, params.region);
  } catch (const InfeasibleMoments&) {
    out.stage = ComposedStage::kInfeasible;
  }
  return out;
}

ComposedDiagnostics composed_test_diagnostics(const ForecastTrace<double>& trace,
                                              const ComposedParams& params) {
  params.validate();
  if (trace.horizon() < params.recovery_order) {
    throw InvalidArgument("composed_T needs a trace at least as long as the recovery order");
  }
  const int order = params.recovery_order;
  const auto assessment =
      assess_prefix(std::span<const double>(trace.forecasts().data(), static_cast<std::size_t>(order)),
                    trace.outcomes().prefix(static_cast<std::size_t>(order)), params);

  ComposedDiagnostics diag;
  diag.moments = assessment.moments;
  diag.moment_mismatch = assessment.moment_mismatch;
  diag.q_hat = empirical_mean(trace.outcomes());
  diag.margin = params.margin(trace.horizon());
  diag.stage = assessment.stage;
  if (!assessment.region) return diag;

  const AcceptanceRegion region = assessment.region->widened(diag.margin);
  diag.region_length = region.total_length();
  const bool inside = region.contains(diag.q_hat);
  diag.stage = inside ? ComposedStage::kPassed : ComposedStage::kOutsideRegion;
  diag.verdict = pass_if(inside);
  return diag;
}

Verdict composed_test_T(const ForecastTrace<double>& trace, const ComposedParams& params) {
  return composed_test_diagnostics(trace, params).verdict;
}

Verdict iid_frequency_test(const ForecastTrace<double>& trace, double tol) {
  if (trace.horizon() < 1) throw InvalidArgument("iid_frequency_test needs horizon >= 1");
  const auto& p = trace.forecasts();
  const bool constant = std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); });
  return pass_if(constant && within(std::abs(p.front() - empirical_mean(trace.outcomes())), tol));
}

Verdict eventual_frequency_test(const ForecastTrace<double>& trace, double tol, int burn_in) {
  if (burn_in < 0 || burn_in >= trace.horizon()) {
    throw InvalidArgument("eventual_frequency_test needs 0 <= burn_in < horizon");
  }
  const double mean = empirical_mean(trace.outcomes());
  const auto& p = trace.forecasts();
  return pass_if(std::all_of(p.begin() + burn_in, p.end(),
                             [&](double v) { return within(std::abs(v - mean), tol); }));
}

Verdict calibration_test(const ForecastTrace<double>& trace, int bins, double tol, int min_count) {
  CalibrationParams{bins, tol, min_count}.validate();
  std::vector<int> count(static_cast<std::size_t>(bins), 0);
  std::vector<double> forecast_sum(count.size(), 0.0), outcome_sum(count.size(), 0.0);
  for (int n = 0; n < trace.horizon(); ++n) {
    const double p = trace.forecasts()[n];
    const auto b = static_cast<std::size_t>(std::min(static_cast<int>(p * bins), bins - 1));
    ++count[b];
    forecast_sum[b] += p;
    outcome_sum[b] += trace.outcomes()[n];
  }
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] < min_count) continue;
    if (!within(std::abs(outcome_sum[b] - forecast_sum[b]) / count[b], tol)) return Verdict::kFail;
  }
  return Verdict::kPass;
}

Verdict likelihood_test(const ForecastTrace<double>& trace, double tol) {
  if (trace.horizon() < 1) throw InvalidArgument("likelihood_test needs horizon >= 1");
  const double q_hat = empirical_mean(trace.outcomes());
  auto log_score = [](double p, int s) {
    const double prob = s == 1 ? p : 1.0 - p;
    return prob > 0.0 ? std::log(prob) : -std::numeric_limits<double>::infinity();
  };
  double excess = 0.0;
  for (int n = 0; n < trace.horizon(); ++n) {
    const int s = trace.outcomes()[n];
    excess += log_score(trace.forecasts()[n], s) - log_score(q_hat, s);
  }
  return pass_if(excess / trace.horizon() >= -tol);
}

Verdict run_test(const TestSpec& spec, const ForecastTrace<double>& trace) {
  spec.validate();
  if (trace.horizon() < spec.horizon) {
    throw InvalidArgument("trace horizon " + std::to_string(trace.horizon()) +
                          " is shorter than the test horizon " + std::to_string(spec.horizon));
  }
  const ForecastTrace<double> head =
      trace.horizon() == spec.horizon ? trace : trace.truncated(spec.horizon);
  return std::visit(
      Overloaded{
          [&](const ComposedParams& p) { return composed_test_T(head, p); },
          [&](const CalibrationParams& p) { return calibration_test(head, p.bins, p.tol, p.min_count); },
          [&](const LikelihoodParams& p) { return likelihood_test(head, p.tol); },
          [&](const IidFrequencyParams& p) { return iid_frequency_test(head, p.tol); },
          [&](const EventualFrequencyParams& p) {
            return eventual_frequency_test(head, p.tol, p.burn_in);
          },
      },
      spec.params);
}

}  // namespace preqlab
