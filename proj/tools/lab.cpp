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

// lab: command-line front end for the experiment harness and the modules.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "preqlab/harness.hpp"
#include "preqlab/recovery.hpp"
#include "preqlab/rng.hpp"
#include "preqlab/serialize.hpp"
#include "preqlab/testing.hpp"

namespace {

using preqlab::Json;

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  int threads = 0;
};

// Argument that is either inline JSON or @path.
Json json_argument(const std::string& text, const std::string& what) {
  if (!text.empty() && text.front() == '@') return preqlab::read_json_file(text.substr(1));
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw preqlab::ConfigError(what, std::string("not valid JSON: ") + e.what());
  }
}

void write_text(const GlobalOptions& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(g.out);
  if (!out) throw preqlab::IoError("cannot open '" + g.out + "' for writing");
  out << text;
  out.flush();
  if (!out) throw preqlab::IoError("failed to write '" + g.out + "'");
}

void write_json(const GlobalOptions& g, const Json& j) { write_text(g, j.dump(2) + "\n"); }

preqlab::ExperimentConfig load(const std::string& path, const GlobalOptions& g) {
  preqlab::ExperimentConfig cfg;
  try {
    cfg = preqlab::load_config(path);
  } catch (const preqlab::IoError& e) {
    throw preqlab::ConfigError("config", e.what());
  }
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.threads > 0) cfg.threads = g.threads;
  return cfg;
}

void emit(const preqlab::ResultRecord& record, const GlobalOptions& g, std::string_view fallback) {
  const auto format = preqlab::output_format_from_string(g.format.empty() ? fallback : g.format);
  if (g.out.empty()) {
    preqlab::emit_results(record, format, std::cout);
  } else {
    preqlab::emit_results(record, format, g.out);
  }
}

int cmd_run(const std::string& config, const GlobalOptions& g) {
  emit(preqlab::run_experiment(load(config, g)), g, "jsonl");
  return 0;
}

int cmd_manipulate(const std::string& config, const std::string& curve_csv, const GlobalOptions& g) {
  const auto cfg = load(config, g);
  if (cfg.experiment != "prop1-demo" && cfg.experiment != "manipulation-curve") {
    throw preqlab::ConfigError("experiment", "manipulate expects prop1-demo or manipulation-curve");
  }
  const auto record = preqlab::run_experiment(cfg);
  emit(record, g, "jsonl");
  if (!curve_csv.empty()) {
    if (record.table_columns.empty()) {
      throw preqlab::ConfigError("experiment", "--curve-csv needs a manipulation-curve config");
    }
    preqlab::emit_results(record, preqlab::OutputFormat::kCsv, curve_csv);
  }
  return 0;
}

int cmd_merge(const std::string& config, const GlobalOptions& g) {
  const auto cfg = load(config, g);
  if (cfg.experiment != "merging") {
    throw preqlab::ConfigError("experiment", "merge expects a merging config");
  }
  emit(preqlab::run_experiment(cfg), g, "csv");
  return 0;
}

int cmd_simulate(const std::string& prior_text, const std::string& truth_text, int horizon,
                 const GlobalOptions& g) {
  if (horizon < 0) throw preqlab::ConfigError("horizon", "must be nonnegative");
  const auto prior = preqlab::prior_from_json(json_argument(prior_text, "prior"), "prior");
  const auto truth = truth_text.empty()
                         ? prior
                         : preqlab::prior_from_json(json_argument(truth_text, "truth"), "truth");
  const auto path = preqlab::sample_realization(truth, horizon, g.seed.value_or(0));
  write_json(g, preqlab::to_json(preqlab::make_trace(prior, path)));
  return 0;
}

int cmd_recover(const std::string& trace_path, int order, bool exact, int grid_size,
                const GlobalOptions& g) {
  const auto trace = preqlab::trace_from_json(preqlab::read_json_file(trace_path));
  if (order < 0) order = preqlab::default_recovery_order(trace.horizon());
  if (order > trace.horizon()) throw preqlab::ConfigError("order", "exceeds the trace length");
  if (grid_size < 2) throw preqlab::ConfigError("grid", "must be at least 2");

  Json out;
  out["order"] = order;
  out["horizon"] = trace.horizon();
  const auto moments = preqlab::recover_moments(trace, order);
  out["moments"] = preqlab::to_json(moments);
  if (exact) {
    // Forecasts are binary floating-point numbers, hence exact rationals.
    const auto rational = preqlab::recover_moments(trace.cast<preqlab::Rational>(), order);
    Json exact_moments = Json::array();
    for (int k = 0; k <= order; ++k) exact_moments.push_back(rational[k].str());
    out["exact_moments"] = exact_moments;
  }
  const bool hausdorff = preqlab::hausdorff_check(moments, 1e-9);
  out["hausdorff_pass"] = hausdorff;
  if (hausdorff) {
    try {
      const auto fit = preqlab::reconstruct_prior(moments, grid_size);
      out["reconstruction"] = {{"prior", preqlab::to_json(preqlab::Prior(fit.prior))},
                               {"max_abs_error", fit.max_abs_error},
                               {"squared_error", fit.squared_error}};
    } catch (const preqlab::InfeasibleMoments& e) {
      out["reconstruction"] = {{"error", e.what()}};
    }
  }
  write_json(g, out);
  return 0;
}

int cmd_test(const std::string& trace_path, const std::string& spec_path, const GlobalOptions& g) {
  const auto trace = preqlab::trace_from_json(preqlab::read_json_file(trace_path));
  const auto spec = preqlab::test_spec_from_json(preqlab::read_json_file(spec_path), "test");
  if (trace.horizon() < spec.horizon) {
    throw preqlab::ConfigError("test.horizon", "trace is shorter than the test horizon");
  }
  Json out;
  out["test"] = preqlab::to_json(spec);
  out["verdict"] = std::string(preqlab::to_string(preqlab::run_test(spec, trace)));
  if (const auto* composed = std::get_if<preqlab::ComposedParams>(&spec.params)) {
    const auto d = preqlab::composed_test_diagnostics(trace.truncated(spec.horizon), *composed);
    out["stage"] = std::string(preqlab::to_string(d.stage));
    out["q_hat"] = d.q_hat;
    out["region_length"] = d.region_length;
    out["margin"] = d.margin;
    out["moment_mismatch"] = d.moment_mismatch;
  }
  write_json(g, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prequential testing laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(preqlab::software_version()));

  GlobalOptions g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output path (default: stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  std::string config, trace, spec, prior, truth, curve_csv;
  int horizon = 100, order = -1, grid = 201;
  bool exact = false;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config)->required();

  auto* simulate = app.add_subcommand("simulate", "Sample a path and emit a forecast trace");
  simulate->add_option("--prior", prior, "Forecaster prior as JSON or @file")->required();
  simulate->add_option("--truth", truth, "Data-generating prior (default: the forecaster)");
  simulate->add_option("--horizon", horizon, "Number of periods");

  auto* recover = app.add_subcommand("recover", "Recover moments from a trace");
  recover->add_option("trace", trace)->required();
  recover->add_option("--order", order, "Recovery order (default min(N,16))");
  recover->add_flag("--exact", exact, "Also recover in exact rational arithmetic");
  recover->add_option("--grid", grid, "Reconstruction grid size");

  auto* test = app.add_subcommand("test", "Run a test spec on a trace");
  test->add_option("trace", trace)->required();
  test->add_option("spec", spec)->required();

  auto* manipulate = app.add_subcommand("manipulate", "Solve a manipulation game");
  manipulate->add_option("config", config)->required();
  manipulate->add_option("--curve-csv", curve_csv, "Also write the curve table as CSV");

  auto* merge = app.add_subcommand("merge", "Measure merging gaps");
  merge->add_option("config", config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*run) return cmd_run(config, g);
    if (*simulate) return cmd_simulate(prior, truth, horizon, g);
    if (*recover) return cmd_recover(trace, order, exact, grid, g);
    if (*test) return cmd_test(trace, spec, g);
    if (*manipulate) return cmd_manipulate(config, curve_csv, g);
    if (*merge) return cmd_merge(config, g);
  } catch (const preqlab::ConfigError& e) {
    std::cerr << "lab: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "lab: error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
