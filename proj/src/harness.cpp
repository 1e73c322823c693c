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

#include "preqlab/harness.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "preqlab/merging.hpp"
#include "preqlab/parallel.hpp"
#include "preqlab/recovery.hpp"
#include "preqlab/rng.hpp"

#ifndef PREQLAB_VERSION
#define PREQLAB_VERSION "0.0.0"
#endif

namespace preqlab {

std::string_view software_version() { return PREQLAB_VERSION; }

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using config::join;
using preqlab::to_json;

constexpr std::string_view kInformedPass = "informed-pass";
constexpr std::string_view kProp1Demo = "prop1-demo";
constexpr std::string_view kManipulationCurve = "manipulation-curve";
constexpr std::string_view kMerging = "merging";
constexpr std::string_view kRecoveryRoundtrip = "recovery-roundtrip";

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

// Wraps module validation so that failures carry the config path.
template <class Fn>
void validate_at(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

// ---------------------------------------------------------------------------
// Strategy sets and modes.

StrategySet strategy_set_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"priors", "point_grid", "lattice", "progression"});
  StrategySet set;
  if (node.contains("priors")) {
    const Json& list = node["priors"];
    require(list.is_array(), join(path, "priors"), "expected an array of priors");
    for (std::size_t i = 0; i < list.size(); ++i) {
      set.priors.push_back(prior_from_json(list[i], join(join(path, "priors"), i)));
    }
  }
  set.point_grid = int_or(node, "point_grid", path, 0);
  require(set.point_grid >= 0, join(path, "point_grid"), "must be nonnegative");
  if (node.contains("lattice")) {
    const std::string p = join(path, "lattice");
    check_keys(node["lattice"], p, {"points", "denominator"});
    StrategySet::Lattice lattice;
    lattice.points = numbers(member(node["lattice"], "points", p), join(p, "points"));
    lattice.denominator = int_or(node["lattice"], "denominator", p, lattice.denominator);
    require(!lattice.points.empty(), join(p, "points"), "needs at least one point");
    require(lattice.denominator >= 1, join(p, "denominator"), "must be at least 1");
    set.lattice = lattice;
  }
  if (node.contains("progression")) {
    const std::string p = join(path, "progression");
    check_keys(node["progression"], p, {"points", "max_atoms", "max_stride"});
    StrategySet::Progression prog;
    prog.points = numbers(member(node["progression"], "points", p), join(p, "points"));
    prog.max_atoms = int_or(node["progression"], "max_atoms", p, prog.max_atoms);
    prog.max_stride = int_or(node["progression"], "max_stride", p, prog.max_stride);
    require(prog.max_atoms >= 2, join(p, "max_atoms"), "must be at least 2");
    require(prog.max_stride >= 0, join(p, "max_stride"), "must be nonnegative");
    set.progression = prog;
  }
  validate_at(path, [&] {
    if (set.build().empty()) throw InvalidParams("strategy set is empty");
  });
  return set;
}

Json to_json(const StrategySet& set) {
  Json out = Json::object();
  Json priors = Json::array();
  for (const auto& p : set.priors) priors.push_back(to_json(p));
  out["priors"] = priors;
  out["point_grid"] = set.point_grid;
  if (set.lattice) {
    out["lattice"] = {{"points", set.lattice->points}, {"denominator", set.lattice->denominator}};
  }
  if (set.progression) {
    out["progression"] = {{"points", set.progression->points},
                          {"max_atoms", set.progression->max_atoms},
                          {"max_stride", set.progression->max_stride}};
  }
  return out;
}

ModeSpec mode_from_json(const Json& node, const std::string& path) {
  using namespace config;
  if (node.is_string()) {
    const auto s = node.get<std::string>();
    if (s == "exact") return ModeSpec{true, 0};
    if (s == "monte_carlo") return ModeSpec{false, 10000};
    throw ConfigError(path, "mode must be 'exact' or 'monte_carlo'");
  }
  check_keys(node, path, {"kind", "trials"});
  ModeSpec mode = mode_from_json(member(node, "kind", path), join(path, "kind"));
  if (!mode.exact) mode.trials = int_or(node, "trials", path, mode.trials);
  require(mode.exact || mode.trials >= 1, join(path, "trials"), "must be at least 1");
  return mode;
}

Json to_json(const ModeSpec& mode) {
  if (mode.exact) return Json{{"kind", "exact"}};
  return Json{{"kind", "monte_carlo"}, {"trials", mode.trials}};
}

EvaluationMode evaluation_mode(const ModeSpec& mode, std::uint64_t seed) {
  if (mode.exact) return ExactMode{};
  return MonteCarloMode{mode.trials, seed};
}

// A test block whose horizon may be omitted; `fallback_horizon` fills it in.
TestSpec test_from_json(Json node, const std::string& path, std::optional<int> fallback_horizon) {
  if (node.is_object() && !node.contains("horizon") && fallback_horizon) {
    node["horizon"] = *fallback_horizon;
  }
  return test_spec_from_json(node, path);
}

ComposedParams composed_block(const Json& node, const std::string& path) {
  config::check_keys(node, path,
                     {"recovery_order", "grid_size", "quantiles", "half_width", "delta",
                      "widening", "consistency_tol", "feasibility_threshold"});
  ComposedParams p = composed_params_from_json(node, path);
  validate_at(path, [&] { p.validate(); });
  return p;
}

// ---------------------------------------------------------------------------
// Per-experiment parameter blocks.

InformedPassParams informed_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"horizon", "truth_prior", "truth_mode", "test"});
  InformedPassParams p;
  p.horizon = int_or(node, "horizon", path, p.horizon);
  if (node.contains("truth_prior")) p.truth_prior = prior_from_json(node["truth_prior"], join(path, "truth_prior"));
  if (node.contains("truth_mode")) {
    const std::string mode = string(node["truth_mode"], join(path, "truth_mode"));
    if (mode == "iid_draw") {
      p.truth_mode = InformedPassParams::TruthMode::kIidDraw;
    } else if (mode == "mixture") {
      p.truth_mode = InformedPassParams::TruthMode::kMixture;
    } else {
      throw ConfigError(join(path, "truth_mode"), "must be 'iid_draw' or 'mixture'");
    }
  }
  if (node.contains("test")) p.test = composed_block(node["test"], join(path, "test"));
  require(p.horizon >= p.test.recovery_order, join(path, "horizon"),
          "must be at least test.recovery_order");
  return p;
}

Json to_json(const InformedPassParams& p) {
  return Json{{"horizon", p.horizon},
              {"truth_prior", to_json(p.truth_prior)},
              {"truth_mode", p.truth_mode == InformedPassParams::TruthMode::kIidDraw ? "iid_draw" : "mixture"},
              {"test", to_json(p.test)}};
}

Prop1Params prop1_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"test", "experts", "truths", "mode", "epsilon", "slack"});
  Prop1Params p;
  p.test = test_from_json(member(node, "test", path), join(path, "test"), std::nullopt);
  p.experts = strategy_set_from_json(member(node, "experts", path), join(path, "experts"));
  p.truths = strategy_set_from_json(member(node, "truths", path), join(path, "truths"));
  if (node.contains("mode")) p.mode = mode_from_json(node["mode"], join(path, "mode"));
  if (node.contains("epsilon")) {
    p.epsilon = number(node["epsilon"], join(path, "epsilon"));
    require(*p.epsilon >= 0.0 && *p.epsilon < 1.0, join(path, "epsilon"), "must lie in [0,1)");
  }
  p.slack = number_or(node, "slack", path, p.slack);
  require(p.slack >= 0.0, join(path, "slack"), "must be nonnegative");
  require(!p.mode.exact || p.test.horizon <= kMaxExactHorizon, join(path, "test.horizon"),
          "exact mode is capped at horizon " + std::to_string(kMaxExactHorizon));
  return p;
}

Json to_json(const Prop1Params& p) {
  Json out{{"test", to_json(p.test)},
           {"experts", to_json(p.experts)},
           {"truths", to_json(p.truths)},
           {"mode", to_json(p.mode)},
           {"slack", p.slack}};
  if (p.epsilon) out["epsilon"] = *p.epsilon;
  return out;
}

CurveParams curve_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"test", "horizons", "experts", "truths", "trials", "bootstrap", "confidence"});
  CurveParams p;
  p.horizons = integers(member(node, "horizons", path), join(path, "horizons"));
  require(!p.horizons.empty(), join(path, "horizons"), "needs at least one horizon");
  p.test = test_from_json(member(node, "test", path), join(path, "test"), p.horizons.front());
  for (std::size_t i = 0; i < p.horizons.size(); ++i) {
    validate_at(join(join(path, "horizons"), i), [&] { p.test.with_horizon(p.horizons[i]).validate(); });
    require(i == 0 || p.horizons[i] > p.horizons[i - 1], join(join(path, "horizons"), i),
            "horizons must be strictly increasing");
  }
  p.test = p.test.with_horizon(p.horizons.front());
  p.experts = strategy_set_from_json(member(node, "experts", path), join(path, "experts"));
  p.truths = strategy_set_from_json(member(node, "truths", path), join(path, "truths"));
  p.trials = int_or(node, "trials", path, p.trials);
  p.bootstrap = int_or(node, "bootstrap", path, p.bootstrap);
  p.confidence = number_or(node, "confidence", path, p.confidence);
  require(p.trials >= 1, join(path, "trials"), "must be at least 1");
  require(p.bootstrap >= 1, join(path, "bootstrap"), "must be at least 1");
  require(p.confidence > 0.0 && p.confidence < 1.0, join(path, "confidence"), "must lie in (0,1)");
  return p;
}

Json to_json(const CurveParams& p) {
  Json test = to_json(p.test);
  test.erase("horizon");
  return Json{{"test", test},
              {"horizons", p.horizons},
              {"experts", to_json(p.experts)},
              {"truths", to_json(p.truths)},
              {"trials", p.trials},
              {"bootstrap", p.bootstrap},
              {"confidence", p.confidence}};
}

MergingParams merging_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"learner", "truth", "horizons", "trials", "contrast"});
  MergingParams p;
  if (node.contains("learner")) p.learner = prior_from_json(node["learner"], join(path, "learner"));
  if (node.contains("truth")) p.truth = prior_from_json(node["truth"], join(path, "truth"));
  if (node.contains("horizons")) p.horizons = integers(node["horizons"], join(path, "horizons"));
  p.trials = int_or(node, "trials", path, p.trials);
  require(!p.horizons.empty(), join(path, "horizons"), "needs at least one horizon");
  for (std::size_t i = 0; i < p.horizons.size(); ++i) {
    require(p.horizons[i] >= 0 && (i == 0 || p.horizons[i] > p.horizons[i - 1]),
            join(join(path, "horizons"), i), "horizons must be nonnegative and strictly increasing");
  }
  require(p.trials >= 1, join(path, "trials"), "must be at least 1");
  if (node.contains("contrast")) {
    const std::string cp = join(path, "contrast");
    check_keys(node["contrast"], cp, {"test", "horizon", "trials"});
    MergingParams::Contrast c;
    if (node["contrast"].contains("test")) c.test = composed_block(node["contrast"]["test"], join(cp, "test"));
    c.horizon = int_or(node["contrast"], "horizon", cp, c.horizon);
    c.trials = int_or(node["contrast"], "trials", cp, c.trials);
    require(c.horizon >= c.test.recovery_order, join(cp, "horizon"), "must be at least test.recovery_order");
    require(c.trials >= 1, join(cp, "trials"), "must be at least 1");
    p.contrast = c;
  }
  return p;
}

Json to_json(const MergingParams& p) {
  Json out{{"learner", to_json(p.learner)},
           {"truth", to_json(p.truth)},
           {"horizons", p.horizons},
           {"trials", p.trials}};
  if (p.contrast) {
    out["contrast"] = {{"test", to_json(p.contrast->test)},
                       {"horizon", p.contrast->horizon},
                       {"trials", p.contrast->trials}};
  }
  return out;
}

RoundtripParams roundtrip_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"max_atoms", "order", "horizon", "paths", "denominator"});
  RoundtripParams p;
  p.max_atoms = int_or(node, "max_atoms", path, p.max_atoms);
  p.order = int_or(node, "order", path, p.order);
  p.horizon = int_or(node, "horizon", path, p.horizon);
  p.paths = int_or(node, "paths", path, p.paths);
  p.denominator = int_or(node, "denominator", path, p.denominator);
  require(p.max_atoms >= 1, join(path, "max_atoms"), "must be at least 1");
  require(p.order >= 1, join(path, "order"), "must be at least 1");
  require(p.horizon >= p.order, join(path, "horizon"), "must be at least order");
  require(p.paths >= 1, join(path, "paths"), "must be at least 1");
  require(p.denominator >= p.max_atoms - 1 && p.denominator >= 1, join(path, "denominator"),
          "needs at least max_atoms distinct grid points");
  return p;
}

Json to_json(const RoundtripParams& p) {
  return Json{{"max_atoms", p.max_atoms},
              {"order", p.order},
              {"horizon", p.horizon},
              {"paths", p.paths},
              {"denominator", p.denominator}};
}

// ---------------------------------------------------------------------------
// Replication bodies. Each returns the JSON output of one replication.

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Json informed_replication(const InformedPassParams& p, std::uint64_t seed) {
  Rng rng(seed);
  double q = 0.0;
  Prior expert = p.truth_prior;
  Realization path;
  if (p.truth_mode == InformedPassParams::TruthMode::kIidDraw) {
    q = draw_parameter(p.truth_prior, rng);
    expert = PointMass(q);
    path = sample_realization(PointMass(q), p.horizon, rng);
  } else {
    q = draw_parameter(p.truth_prior, rng);
    path = sample_realization(PointMass(q), p.horizon, rng);
  }
  const auto trace = make_trace(expert, path);
  const auto diag = composed_test_diagnostics(trace, p.test);
  return Json{{"q", q},
              {"verdict", std::string(to_string(diag.verdict))},
              {"stage", std::string(to_string(diag.stage))},
              {"q_hat", diag.q_hat},
              {"region_length", diag.region_length},
              {"moment_mismatch", diag.moment_mismatch},
              {"margin", diag.margin}};
}

Json summarize_informed(const std::vector<Json>& outputs, const InformedPassParams& p) {
  int passes = 0;
  double longest = 0.0;
  for (const auto& o : outputs) {
    if (o["verdict"] == "PASS") ++passes;
    longest = std::max(longest, o["region_length"].get<double>());
  }
  const double rate = static_cast<double>(passes) / static_cast<double>(outputs.size());
  return Json{{"pass_rate", rate},
              {"passes", passes},
              {"target", 1.0 - p.test.region.delta},
              {"max_region_length", longest}};
}

Json prop1_replication(const Prop1Params& p, std::uint64_t seed, int threads) {
  const StrategyGrid grid{p.experts.build(), p.truths.build()};
  const EvaluationMode mode = evaluation_mode(p.mode, seed);
  double epsilon = 0.0;
  Eigen::VectorXd acceptance;
  if (p.epsilon) {
    epsilon = *p.epsilon;
  } else {
    acceptance = self_acceptance(grid.truths, p.test, p.test.horizon, mode, threads);
    epsilon = 1.0 - acceptance.minCoeff();
  }
  const Prop1Report report =
      demonstrate_prop1(p.test, grid, epsilon, p.test.horizon, mode, p.slack, threads);
  Json zeta = Json::array();
  const auto& x = report.game.solution.row_strategy;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 1e-9) {
      zeta.push_back({{"expert", static_cast<int>(i)},
                      {"weight", x[i]},
                      {"theory", to_json(grid.experts[static_cast<std::size_t>(i)])}});
    }
  }
  return Json{{"epsilon", report.epsilon},
              {"acceptance", to_json(report.acceptance)},
              {"value", report.game.solution.value},
              {"bound", report.bound},
              {"bound_holds", report.bound_holds},
              {"duality_gap", report.game.solution.duality_gap()},
              {"fictitious_play_value", report.game.fictitious_play_value},
              {"method_disagreement", report.game.method_disagreement},
              {"worst_truth", report.worst_truth},
              {"zeta", zeta},
              {"nature", to_json(report.game.solution.col_strategy)},
              {"experts", static_cast<int>(grid.experts.size())},
              {"truths", static_cast<int>(grid.truths.size())},
              {"exact", report.matrix.exact},
              {"pass_prob", to_json(report.matrix.pass_prob)}};
}

Json curve_replication(const CurveParams& p, std::uint64_t seed, int threads) {
  const StrategyGrid grid{p.experts.build(), p.truths.build()};
  CurveOptions options;
  options.trials = p.trials;
  options.seed = seed;
  options.bootstrap = p.bootstrap;
  options.confidence = p.confidence;
  options.threads = threads;
  const auto curve = manipulation_curve(grid, p.test, p.horizons, options);
  Json points = Json::array();
  for (const auto& point : curve) {
    points.push_back({{"horizon", point.horizon},
                      {"value", point.value},
                      {"ci_lo", point.ci_lo},
                      {"ci_hi", point.ci_hi},
                      {"duality_gap", point.game.solution.duality_gap()},
                      {"method_disagreement", point.game.method_disagreement},
                      {"max_region_length", point.max_region_length},
                      {"max_std_error", point.matrix.std_error.maxCoeff()}});
  }
  return Json{{"curve", points},
              {"experts", static_cast<int>(grid.experts.size())},
              {"truths", static_cast<int>(grid.truths.size())}};
}

Json merging_replication(const MergingParams& p, std::uint64_t seed, int threads) {
  Json out;
  MergingReport report;
  if (p.contrast) {
    const auto contrast = merging_contrast(p.learner, p.truth, p.horizons, p.trials, p.contrast->test,
                                           p.contrast->horizon, p.contrast->trials, seed, threads);
    report = contrast.merging;
    out["contrast"] = {{"test_horizon", contrast.test_horizon},
                       {"learner_pass_rate", contrast.learner_pass_rate},
                       {"pass_std_error", contrast.pass_std_error},
                       {"test_trials", contrast.test_trials}};
  } else {
    report = merging_gap(p.learner, p.truth, p.horizons, p.trials, seed, threads);
  }
  out["horizons"] = report.horizons;
  out["mean_gap"] = report.mean_abs_gap;
  out["q90"] = report.q90;
  out["q99"] = report.q99;
  return out;
}

Json roundtrip_replication(const RoundtripParams& p, std::uint64_t seed) {
  Rng rng(seed);
  // Random rational prior: distinct atoms on the 1/denominator lattice with
  // small integer weights.
  const int atoms = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(p.max_atoms));
  std::vector<int> slots(static_cast<std::size_t>(p.denominator) + 1);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(atoms));
  std::sort(slots.begin(), slots.end());
  std::vector<int> raw(slots.size());
  int total = 0;
  for (auto& w : raw) total += (w = 1 + static_cast<int>(rng() % 9));

  Vector<Rational> rq(atoms), rw(atoms);
  Eigen::VectorXd dq(atoms), dw(atoms);
  for (int i = 0; i < atoms; ++i) {
    rq[i] = Rational(slots[i], p.denominator);
    rw[i] = Rational(raw[i], total);
    dq[i] = static_cast<double>(slots[i]) / p.denominator;
    dw[i] = static_cast<double>(raw[i]) / total;
  }
  const GridPrior<Rational> exact_prior(rq, rw);
  const GridPrior<double> float_prior(dq, dw.array() / dw.sum());
  const Vector<Rational> truth = exact_prior.moments(p.order);

  bool exact_match = true;
  bool hausdorff_ok = true;
  double float_error = 0.0;
  double spread = 0.0;
  std::optional<Eigen::VectorXd> first;
  for (int path_index = 0; path_index < p.paths; ++path_index) {
    const Realization path = sample_realization(Prior(float_prior), p.horizon, rng);
    const auto exact = recover_moments(make_trace(exact_prior, path), p.order);
    exact_match = exact_match && exact.values() == truth;
    const auto approx = recover_moments(make_trace(float_prior, path), p.order);
    hausdorff_ok = hausdorff_ok && hausdorff_check(approx, 1e-9);
    for (int k = 0; k <= p.order; ++k) {
      float_error = std::max(float_error,
                             std::abs(approx[k] - scalar_cast<double>(truth[k])));
    }
    if (!first) {
      first = approx.values();
    } else {
      spread = std::max(spread, (approx.values() - *first).cwiseAbs().maxCoeff());
    }
  }
  return Json{{"atoms", atoms},
              {"prior", to_json(Prior(float_prior))},
              {"exact_match", exact_match},
              {"float_max_error", float_error},
              {"path_spread", spread},
              {"hausdorff_pass", hausdorff_ok}};
}

Json summarize_roundtrip(const std::vector<Json>& outputs) {
  int exact = 0, hausdorff = 0;
  double error = 0.0, spread = 0.0;
  for (const auto& o : outputs) {
    exact += o["exact_match"].get<bool>() ? 1 : 0;
    hausdorff += o["hausdorff_pass"].get<bool>() ? 1 : 0;
    error = std::max(error, o["float_max_error"].get<double>());
    spread = std::max(spread, o["path_spread"].get<double>());
  }
  return Json{{"exact_matches", exact},
              {"hausdorff_passes", hausdorff},
              {"max_float_error", error},
              {"max_path_spread", spread}};
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const Json& v) {
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    return quoted + "\"";
  }
  return "";
}

}  // namespace

std::vector<Prior> StrategySet::build() const {
  std::vector<Prior> out = priors;
  if (point_grid > 0) {
    auto grid = point_mass_grid(point_grid);
    out.insert(out.end(), grid.begin(), grid.end());
  }
  if (lattice) {
    auto mixtures = lattice_mixtures(lattice->points, lattice->denominator);
    out.insert(out.end(), mixtures.begin(), mixtures.end());
  }
  if (progression) {
    auto mixtures = progression_mixtures(progression->points, progression->max_atoms,
                                         progression->max_stride);
    out.insert(out.end(), mixtures.begin(), mixtures.end());
  }
  return out;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      std::string(kInformedPass), std::string(kProp1Demo), std::string(kManipulationCurve),
      std::string(kMerging), std::string(kRecoveryRoundtrip)};
  return names;
}

ExperimentConfig parse_config(const Json& document) {
  using namespace config;
  check_keys(document, "", {"experiment", "master_seed", "replications", "threads", "params"});
  ExperimentConfig cfg;
  cfg.experiment = string(member(document, "experiment", ""), "experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
  }
  if (document.contains("master_seed")) {
    cfg.master_seed = unsigned_integer(document["master_seed"], "master_seed");
  }
  cfg.replications = int_or(document, "replications", "", cfg.replications);
  require(cfg.replications >= 1, "replications", "must be at least 1");
  cfg.threads = int_or(document, "threads", "", cfg.threads);
  require(cfg.threads >= 0, "threads", "must be nonnegative");

  const Json empty = Json::object();
  const Json& params = document.contains("params") ? document["params"] : empty;
  if (cfg.experiment == kInformedPass) {
    cfg.params = informed_from_json(params, "params");
  } else if (cfg.experiment == kProp1Demo) {
    cfg.params = prop1_from_json(params, "params");
  } else if (cfg.experiment == kManipulationCurve) {
    cfg.params = curve_from_json(params, "params");
  } else if (cfg.experiment == kMerging) {
    cfg.params = merging_from_json(params, "params");
  } else {
    cfg.params = roundtrip_from_json(params, "params");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

Json canonical_json(const ExperimentConfig& config) {
  return Json{{"experiment", config.experiment},
              {"master_seed", config.master_seed},
              {"replications", config.replications},
              {"params", std::visit([](const auto& p) { return to_json(p); }, config.params)}};
}

std::string config_hash(const ExperimentConfig& config) {
  // 64-bit FNV-1a over the canonical dump; keys are sorted by the JSON type.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(config).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

bool ResultRecord::operator==(const ResultRecord& o) const {
  return experiment == o.experiment && config_hash == o.config_hash && config == o.config &&
         replications == o.replications && outputs == o.outputs && summary == o.summary &&
         table_columns == o.table_columns && table_rows == o.table_rows &&
         wall_clock_seconds == o.wall_clock_seconds && software_version == o.software_version;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord record;
  record.experiment = config.experiment;
  record.config = canonical_json(config);
  record.config_hash = config_hash(config);
  record.replications = config.replications;
  record.software_version = std::string(software_version());
  record.outputs.resize(static_cast<std::size_t>(config.replications));

  // Experiments that parallelize internally get the threads; the others
  // spread replications over the pool.
  const bool inner_parallel = !std::holds_alternative<InformedPassParams>(config.params) &&
                              !std::holds_alternative<RoundtripParams>(config.params);
  const int outer_threads = inner_parallel ? 1 : config.threads;
  const int inner_threads = inner_parallel ? config.threads : 1;
  parallel_for(record.outputs.size(), outer_threads, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(config.master_seed, r);
    try {
      Json out = std::visit(
          Overloaded{
              [&](const InformedPassParams& p) { return informed_replication(p, seed); },
              [&](const Prop1Params& p) { return prop1_replication(p, seed, inner_threads); },
              [&](const CurveParams& p) { return curve_replication(p, seed, inner_threads); },
              [&](const MergingParams& p) { return merging_replication(p, seed, inner_threads); },
              [&](const RoundtripParams& p) { return roundtrip_replication(p, seed); },
          },
          config.params);
      out["replication"] = static_cast<int>(r);
      out["seed"] = seed;
      record.outputs[r] = std::move(out);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error("replication " + std::to_string(r) + ": " + e.what());
    }
  });

  std::visit(
      Overloaded{
          [&](const InformedPassParams& p) { record.summary = summarize_informed(record.outputs, p); },
          [&](const Prop1Params&) {
            const Json& first = record.outputs.front();
            record.summary = {{"value", first["value"]},
                              {"epsilon", first["epsilon"]},
                              {"bound", first["bound"]},
                              {"bound_holds", first["bound_holds"]},
                              {"duality_gap", first["duality_gap"]}};
          },
          [&](const CurveParams&) {
            record.table_columns = {"horizon", "value", "ci_lo", "ci_hi"};
            for (const auto& point : record.outputs.front()["curve"]) {
              record.table_rows.push_back({point["horizon"].get<double>(), point["value"].get<double>(),
                                           point["ci_lo"].get<double>(), point["ci_hi"].get<double>()});
            }
            record.summary = {{"terminal_value", record.table_rows.back()[1]}};
          },
          [&](const MergingParams&) {
            const Json& first = record.outputs.front();
            record.table_columns = {"horizon", "mean_gap", "q90", "q99"};
            for (std::size_t h = 0; h < first["horizons"].size(); ++h) {
              record.table_rows.push_back({first["horizons"][h].get<double>(), first["mean_gap"][h].get<double>(),
                                           first["q90"][h].get<double>(), first["q99"][h].get<double>()});
            }
            record.summary = {{"final_mean_gap", record.table_rows.back()[1]}};
            if (first.contains("contrast")) record.summary["contrast"] = first["contrast"];
          },
          [&](const RoundtripParams&) { record.summary = summarize_roundtrip(record.outputs); },
      },
      config.params);

  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "jsonl") return OutputFormat::kJsonl;
  throw ConfigError("format", "must be 'csv' or 'jsonl'");
}

void emit_results(const ResultRecord& record, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::kJsonl) {
    Json table{{"columns", record.table_columns}, {"rows", record.table_rows}};
    Json header{{"type", "header"},
                {"experiment", record.experiment},
                {"config_hash", record.config_hash},
                {"config", record.config},
                {"replications", record.replications},
                {"summary", record.summary},
                {"table", table},
                {"wall_clock_seconds", record.wall_clock_seconds},
                {"software_version", record.software_version}};
    out << header.dump() << '\n';
    for (std::size_t r = 0; r < record.outputs.size(); ++r) {
      out << Json{{"type", "replication"}, {"index", r}, {"output", record.outputs[r]}}.dump()
          << '\n';
    }
  } else if (!record.table_columns.empty()) {
    for (std::size_t c = 0; c < record.table_columns.size(); ++c) {
      out << (c ? "," : "") << record.table_columns[c];
    }
    out << '\n';
    for (const auto& row : record.table_rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
      out << '\n';
    }
  } else {
    std::vector<std::string> columns;
    if (!record.outputs.empty()) {
      for (const auto& item : record.outputs.front().items()) {
        if (item.value().is_primitive()) columns.push_back(item.key());
      }
    }
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& o : record.outputs) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        out << (c ? "," : "") << (o.contains(columns[c]) ? csv_cell(o[columns[c]]) : "");
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed to write results");
}

void emit_results(const ResultRecord& record, OutputFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  emit_results(record, format, out);
  out.flush();
  if (!out) throw IoError("failed to write '" + path + "'");
}

ResultRecord parse_jsonl(std::istream& in) {
  ResultRecord record;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IoError(std::string("malformed JSON line: ") + e.what());
    }
    if (j.value("type", "") == "header") {
      record.experiment = j.at("experiment").get<std::string>();
      record.config_hash = j.at("config_hash").get<std::string>();
      record.config = j.at("config");
      record.replications = j.at("replications").get<int>();
      record.summary = j.at("summary");
      record.table_columns = j.at("table").at("columns").get<std::vector<std::string>>();
      record.table_rows = j.at("table").at("rows").get<std::vector<std::vector<double>>>();
      record.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
      record.software_version = j.at("software_version").get<std::string>();
      have_header = true;
    } else if (j.value("type", "") == "replication") {
      record.outputs.push_back(j.at("output"));
    } else {
      throw IoError("JSON line has no recognized type");
    }
  }
  if (!have_header) throw IoError("JSON-lines stream has no header line");
  return record;
}

}  // namespace preqlab
