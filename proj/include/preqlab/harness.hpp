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

#ifndef PREQLAB_HARNESS_HPP_
#define PREQLAB_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "preqlab/core.hpp"
#include "preqlab/manipulation.hpp"
#include "preqlab/serialize.hpp"
#include "preqlab/testing.hpp"

namespace preqlab {

std::string_view software_version();

// A list of theories given explicitly and/or by generators; the union is
// taken in the order priors, point_grid, lattice, progression.
struct StrategySet {
  struct Lattice {
    std::vector<double> points;
    int denominator = 10;
  };
  struct Progression {
    std::vector<double> points;
    int max_atoms = 3;
    int max_stride = 0;
  };
  std::vector<Prior> priors;
  int point_grid = 0;
  std::optional<Lattice> lattice;
  std::optional<Progression> progression;

  std::vector<Prior> build() const;
};

struct ModeSpec {
  bool exact = true;
  int trials = 10000;  // Monte Carlo only
};

struct InformedPassParams {
  enum class TruthMode { kIidDraw, kMixture };
  int horizon = 10000;
  Prior truth_prior = BetaPrior(1.0, 1.0);
  TruthMode truth_mode = TruthMode::kIidDraw;
  ComposedParams test;
};

struct Prop1Params {
  TestSpec test;
  StrategySet experts;
  StrategySet truths;
  ModeSpec mode;
  std::optional<double> epsilon;  // measured from the truths when absent
  double slack = 0.01;
};

struct CurveParams {
  TestSpec test;  // horizon is replaced by each entry of `horizons`
  std::vector<int> horizons;
  StrategySet experts;
  StrategySet truths;
  int trials = 10000;
  int bootstrap = 200;
  double confidence = 0.95;
};

struct MergingParams {
  struct Contrast {
    ComposedParams test;
    int horizon = 100000;
    int trials = 1000;
  };
  Prior learner = BetaPrior(1.0, 1.0);
  Prior truth = PointMass(0.7);
  std::vector<int> horizons{10, 100, 1000};
  int trials = 200;
  std::optional<Contrast> contrast;
};

struct RoundtripParams {
  int max_atoms = 6;
  int order = 12;
  int horizon = 12;
  int paths = 10;
  int denominator = 20;  // atoms sit on multiples of 1/denominator
};

using ExperimentParams =
    std::variant<InformedPassParams, Prop1Params, CurveParams, MergingParams, RoundtripParams>;

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t master_seed = 0;
  int replications = 1;
  int threads = 0;  // 0 = hardware concurrency; never changes results
  ExperimentParams params;
};

// The registry of experiment names, in a fixed order.
const std::vector<std::string>& experiment_names();

// Full validation: names, keys, ranges and module preconditions. Throws
// ConfigError with the field path.
ExperimentConfig parse_config(const Json& document);
ExperimentConfig load_config(const std::string& path);

// Canonical form with every default filled in; `threads` is left out since
// it does not affect results.
Json canonical_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

struct ResultRecord {
  std::string experiment;
  std::string config_hash;
  Json config;
  int replications = 0;
  std::vector<Json> outputs;  // one per replication
  Json summary;
  std::vector<std::string> table_columns;
  std::vector<std::vector<double>> table_rows;
  double wall_clock_seconds = 0.0;
  std::string software_version;

  bool operator==(const ResultRecord& other) const;
};

ResultRecord run_experiment(const ExperimentConfig& config);

enum class OutputFormat { kCsv, kJsonl };
OutputFormat output_format_from_string(std::string_view s);

// CSV holds the tabular series when there is one, otherwise one row per
// replication with its scalar fields. JSONL holds a header line with the
// record metadata and summary, then one line per replication.
void emit_results(const ResultRecord& record, OutputFormat format, std::ostream& out);
void emit_results(const ResultRecord& record, OutputFormat format, const std::string& path);

ResultRecord parse_jsonl(std::istream& in);

}  // namespace preqlab

#endif  // PREQLAB_HARNESS_HPP_
