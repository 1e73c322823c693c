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

#include <algorithm>
#include <cctype>
#include <sstream>

#include "preqlab/harness.hpp"

using namespace preqlab;

namespace {

ExperimentConfig config_of(const char* text) { return parse_config(Json::parse(text)); }

std::string error_path(const char* text) {
  try {
    config_of(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

const char* kCurve = R"({
  "experiment": "manipulation-curve", "master_seed": 3,
  "params": {
    "test": {"kind": "composed_T", "recovery_order": 6, "grid_size": 51, "quantiles": 5,
             "half_width": 0.02, "delta": 0.05},
    "horizons": [50, 100],
    "experts": {"point_grid": 3},
    "truths": {"point_grid": 3},
    "trials": 200, "bootstrap": 10
  }})";

const char* kMerging = R"({
  "experiment": "merging", "master_seed": 5,
  "params": {"learner": {"kind": "beta", "alpha": 1, "beta": 1},
             "truth": {"kind": "point", "q": 0.7},
             "horizons": [10, 100], "trials": 50}})";

const char* kRoundtrip = R"({"experiment": "recovery-roundtrip", "master_seed": 1, "replications": 20,
  "params": {"max_atoms": 6, "order": 12, "horizon": 12, "paths": 10, "denominator": 20}})";

}  // namespace

TEST_CASE("config validation names the offending field") {
  CHECK(error_path(R"({"experiment": "nope"})") == "experiment");
  CHECK(error_path(R"({"experiment": "merging", "typo": 1})") == "typo");
  CHECK(error_path(R"({"experiment": "merging", "replications": 0})") == "replications");
  CHECK(error_path(R"({"experiment": "merging", "params": {"trials": -1}})") == "params.trials");
  CHECK(error_path(R"({"experiment": "merging", "params": {"truth": {"kind": "point", "q": 2}}})") ==
        "params.truth");
  CHECK(error_path(R"({"experiment": "informed-pass", "params": {"test": {"quantiles": 20, "bogus": 1}}})") ==
        "params.test.bogus");
  CHECK(error_path(R"({"experiment": "prop1-demo", "params": {
      "test": {"kind": "calibration", "horizon": 30}, "experts": {"point_grid": 2},
      "truths": {"point_grid": 2}}})") == "params.test.horizon");
  CHECK(error_path(R"({"experiment": "manipulation-curve", "params": {
      "test": {"kind": "iid_frequency", "tol": 0.1}, "horizons": [100, 50],
      "experts": {"point_grid": 2}, "truths": {"point_grid": 2}}})") == "params.horizons[1]");
  CHECK(error_path(R"({"experiment": "merging", "params": {"learner": {"kind": "grid", "points": [0.1, 0.2], "weights": [0.5]}}})") ==
        "params.learner");
}

TEST_CASE("defaults fill every parameter block") {
  for (const auto& name : experiment_names()) {
    if (name == "prop1-demo" || name == "manipulation-curve") continue;  // grids are required
    const auto cfg = parse_config(Json{{"experiment", name}});
    CHECK(cfg.replications == 1);
    CHECK(parse_config(canonical_json(cfg)).params.index() == cfg.params.index());
  }
}

TEST_CASE("canonical form round-trips and the hash ignores thread count") {
  auto cfg = config_of(kCurve);
  const auto again = parse_config(canonical_json(cfg));
  CHECK(canonical_json(again) == canonical_json(cfg));
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);
  auto threaded = cfg;
  threaded.threads = 7;
  CHECK(config_hash(threaded) == config_hash(cfg));
  auto reseeded = cfg;
  reseeded.master_seed = 4;
  CHECK(config_hash(reseeded) != config_hash(cfg));
}

TEST_CASE("identical configs produce identical outputs") {
  for (const char* text : {kCurve, kMerging, kRoundtrip}) {
    auto cfg = config_of(text);
    cfg.threads = 1;
    const auto a = run_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    CHECK(a.outputs == b.outputs);
    CHECK(a.summary == b.summary);
    CHECK(a.table_rows == b.table_rows);
  }
}

TEST_CASE("CSV headers") {
  std::ostringstream curve, merging;
  emit_results(run_experiment(config_of(kCurve)), OutputFormat::kCsv, curve);
  emit_results(run_experiment(config_of(kMerging)), OutputFormat::kCsv, merging);
  CHECK(curve.str().rfind("horizon,value,ci_lo,ci_hi\n", 0) == 0);
  CHECK(merging.str().rfind("horizon,mean_gap,q90,q99\n", 0) == 0);
  // Two horizons, so two data rows.
  const std::string text = curve.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("CSV numbers carry 17 significant digits") {
  std::ostringstream out;
  emit_results(run_experiment(config_of(kMerging)), OutputFormat::kCsv, out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto field = row.substr(row.find(',') + 1, row.find(',', row.find(',') + 1) - row.find(',') - 1);
  CHECK(std::stod(field) == std::stod(field));  // parses
  const auto digits = std::count_if(field.begin(), field.end(), [](char c) { return std::isdigit(c); });
  CHECK(digits >= 16);
}

TEST_CASE("JSON lines round-trip to an equal record") {
  for (const char* text : {kCurve, kMerging, kRoundtrip}) {
    const auto record = run_experiment(config_of(text));
    std::stringstream stream;
    emit_results(record, OutputFormat::kJsonl, stream);
    CHECK(parse_jsonl(stream) == record);
  }
  std::istringstream junk("not json\n");
  CHECK_THROWS_AS(parse_jsonl(junk), IoError);
}

TEST_CASE("emit_results reports unwritable destinations") {
  const auto record = run_experiment(config_of(kMerging));
  CHECK_THROWS_AS(emit_results(record, OutputFormat::kCsv, std::string("/nonexistent/dir/out.csv")), IoError);
}

TEST_CASE("recovery round-trip experiment") {
  const auto record = run_experiment(config_of(kRoundtrip));
  CHECK(record.summary["exact_matches"] == 20);
  CHECK(record.summary["hausdorff_passes"] == 20);
  CHECK(record.summary["max_float_error"].get<double>() <= 1e-8);
  CHECK(record.summary["max_path_spread"].get<double>() <= 1e-10);
}

TEST_CASE("prop1-demo with an always-pass test has value 1") {
  const auto record = run_experiment(config_of(R"({"experiment": "prop1-demo", "params": {
      "test": {"kind": "iid_frequency", "horizon": 6, "tol": 1.0},
      "experts": {"point_grid": 3}, "truths": {"point_grid": 3}}})"));
  CHECK(record.summary["value"].get<double>() == doctest::Approx(1.0));
  CHECK(record.summary["epsilon"].get<double>() == 0.0);
}

TEST_CASE("informed-pass meets its target") {
  const auto record = run_experiment(config_of(R"({"experiment": "informed-pass", "master_seed": 2026,
      "replications": 500, "params": {"horizon": 10000}})"));
  CHECK(record.outputs.size() == 500);
  CHECK(record.summary["pass_rate"].get<double>() >= 0.90);
}

TEST_CASE("module errors carry the replication index") {
  // Expert PointMass(0) cannot forecast after a 1 from truth PointMass(1).
  try {
    run_experiment(config_of(R"({"experiment": "merging", "replications": 2, "params": {
        "learner": {"kind": "point", "q": 0}, "truth": {"kind": "point", "q": 1}, "horizons": [3]}})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("replication 0") != std::string::npos);
  }
}
