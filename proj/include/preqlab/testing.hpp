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

#ifndef PREQLAB_TESTING_HPP_
#define PREQLAB_TESTING_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "preqlab/core.hpp"
#include "preqlab/recovery.hpp"

namespace preqlab {

enum class Verdict { kFail, kPass };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

// Finite union of closed subintervals of [0,1], kept sorted, clipped and
// pairwise disjoint.
class AcceptanceRegion {
 public:
  AcceptanceRegion() = default;
  explicit AcceptanceRegion(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  double total_length() const noexcept { return total_length_; }
  bool contains(double q) const noexcept;

  // Every interval grown by `margin` on both sides, then re-normalized.
  AcceptanceRegion widened(double margin) const;

 private:
  std::vector<Interval> intervals_;
  double total_length_ = 0.0;
};

// Parameters of the one-shot parameter test.
struct RegionParams {
  int quantiles = 20;        // M
  double half_width = 0.005; // eps
  double delta = 0.05;       // tolerated mass deficit

  void validate() const;
};

// Union of [a - eps, a + eps] over the generalized-inverse quantiles
// a_i = inf{q : F(q) >= i/(M+1)}, i = 1..M, and over every atom of mass at
// least delta/M.
AcceptanceRegion build_acceptance_region(const GridPrior<double>& mu_bar, int quantiles,
                                         double half_width, double delta);
AcceptanceRegion build_acceptance_region(const GridPrior<double>& mu_bar,
                                         const RegionParams& params);

// PASS iff q_hat lies in the acceptance region of the claimed parameter law.
Verdict one_shot_test(const GridPrior<double>& mu_bar, double q_hat, const RegionParams& params);

// ---------------------------------------------------------------------------
// Test specifications.

struct ComposedParams {
  int recovery_order = 16;
  int grid_size = 1001;
  RegionParams region;
  // Acceptance intervals are widened by widening * sqrt(ln(1/delta) / (2N)).
  double widening = 1.0;
  double consistency_tol = 1e-9;
  double feasibility_threshold = 1e-3;

  void validate() const;
  double margin(int horizon) const;
};

struct CalibrationParams {
  int bins = 10;
  double tol = 0.1;
  int min_count = 1;
  void validate() const;
};

struct LikelihoodParams {
  double tol = 0.05;
  void validate() const;
};

struct IidFrequencyParams {
  double tol = 0.05;
  void validate() const;
};

struct EventualFrequencyParams {
  double tol = 0.05;
  int burn_in = 0;
  void validate() const;
};

enum class TestKind { kComposedT, kCalibration, kLikelihood, kIidFrequency, kEventualFrequency };

std::string_view to_string(TestKind kind);
TestKind test_kind_from_string(std::string_view s);

using TestParams = std::variant<ComposedParams, CalibrationParams, LikelihoodParams,
                                IidFrequencyParams, EventualFrequencyParams>;

// A finite prequential test: reads the first `horizon` periods of a trace.
struct TestSpec {
  int horizon = 1;
  TestParams params;

  TestKind kind() const noexcept;
  void validate() const;
  TestSpec with_horizon(int n) const;
};

// ---------------------------------------------------------------------------
// Verdict functions. Each one sees only forecasts along the realized path and
// the outcomes; none can query the forecaster elsewhere.

enum class ComposedStage { kPassed, kInconsistentTrace, kNotCompletelyMonotone, kInfeasible, kOutsideRegion };
std::string_view to_string(ComposedStage stage);

struct ComposedDiagnostics {
  Verdict verdict = Verdict::kFail;
  ComposedStage stage = ComposedStage::kOutsideRegion;
  std::optional<MomentVector<double>> moments;
  double moment_mismatch = 0.0;
  double region_length = 0.0;  // after widening
  double q_hat = 0.0;
  double margin = 0.0;
};

// The "prefix half" of the composed test: moment recovery, the finite
// B-membership surrogate, reconstruction and the unwidened region. nullopt
// when the trace is rejected before the region is built.
struct PrefixAssessment {
  ComposedStage stage = ComposedStage::kPassed;
  std::optional<MomentVector<double>> moments;
  std::optional<AcceptanceRegion> region;
  double moment_mismatch = 0.0;
};
PrefixAssessment assess_prefix(std::span<const double> forecasts, const Realization& prefix,
                               const ComposedParams& params);

ComposedDiagnostics composed_test_diagnostics(const ForecastTrace<double>& trace,
                                              const ComposedParams& params);
Verdict composed_test_T(const ForecastTrace<double>& trace, const ComposedParams& params);

Verdict iid_frequency_test(const ForecastTrace<double>& trace, double tol);
Verdict eventual_frequency_test(const ForecastTrace<double>& trace, double tol, int burn_in);
Verdict calibration_test(const ForecastTrace<double>& trace, int bins, double tol,
                         int min_count = 1);
Verdict likelihood_test(const ForecastTrace<double>& trace, double tol);

// Applies `spec` to the first spec.horizon periods of the trace.
Verdict run_test(const TestSpec& spec, const ForecastTrace<double>& trace);

}  // namespace preqlab

#endif  // PREQLAB_TESTING_HPP_
