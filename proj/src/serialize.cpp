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

#include "preqlab/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace preqlab {
namespace config {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

void expect_object(const Json& node, const std::string& path) {
  if (!node.is_object()) throw ConfigError(path, "expected an object");
}

void check_keys(const Json& node, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  expect_object(node, path);
  for (const auto& item : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(join(path, item.key()), "unknown key");
    }
  }
}

double number(const Json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path, "expected a number");
  return node.get<double>();
}

long long integer(const Json& node, const std::string& path) {
  if (node.is_number_integer()) return node.get<long long>();
  if (node.is_number_float()) {
    const double v = node.get<double>();
    if (v == static_cast<double>(static_cast<long long>(v))) return static_cast<long long>(v);
  }
  throw ConfigError(path, "expected an integer");
}

std::uint64_t unsigned_integer(const Json& node, const std::string& path) {
  if (node.is_number_unsigned()) return node.get<std::uint64_t>();
  const long long v = integer(node, path);
  if (v < 0) throw ConfigError(path, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

std::string string(const Json& node, const std::string& path) {
  if (!node.is_string()) throw ConfigError(path, "expected a string");
  return node.get<std::string>();
}

std::vector<double> numbers(const Json& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], join(path, i)));
  return out;
}

std::vector<int> integers(const Json& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const long long v = integer(node[i], join(path, i));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(join(path, i), "integer out of range");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

double number_or(const Json& obj, std::string_view key, const std::string& path, double fallback) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? fallback : number(*it, join(path, key));
}

int int_or(const Json& obj, std::string_view key, const std::string& path, int fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  const long long v = integer(*it, join(path, key));
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(join(path, key), "integer out of range");
  }
  return static_cast<int>(v);
}

const Json& member(const Json& obj, std::string_view key, const std::string& path) {
  expect_object(obj, path);
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required key");
  return *it;
}

}  // namespace config

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Runs `build`, turning domain validation errors into ConfigErrors at `path`.
template <class Fn>
auto validated(const std::string& path, Fn&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

Json to_json(const Prior& prior) {
  return std::visit(
      Overloaded{
          [](const GridPrior<double>& g) {
            return Json{{"kind", "grid"},
                        {"points", std::vector<double>(g.points().begin(), g.points().end())},
                        {"weights", std::vector<double>(g.weights().begin(), g.weights().end())}};
          },
          [](const BetaPrior& b) {
            return Json{{"kind", "beta"}, {"alpha", b.alpha()}, {"beta", b.beta()}};
          },
          [](const PointMass& p) { return Json{{"kind", "point"}, {"q", p.q()}}; },
      },
      prior);
}

Prior prior_from_json(const Json& node, const std::string& path) {
  using namespace config;
  const std::string kind = string(member(node, "kind", path), join(path, "kind"));
  return validated(path, [&]() -> Prior {
    if (kind == "point") {
      check_keys(node, path, {"kind", "q"});
      return PointMass(number(member(node, "q", path), join(path, "q")));
    }
    if (kind == "beta") {
      check_keys(node, path, {"kind", "alpha", "beta"});
      return BetaPrior(number(member(node, "alpha", path), join(path, "alpha")),
                       number(member(node, "beta", path), join(path, "beta")));
    }
    if (kind == "grid") {
      check_keys(node, path, {"kind", "points", "weights"});
      const auto points = numbers(member(node, "points", path), join(path, "points"));
      const auto weights = numbers(member(node, "weights", path), join(path, "weights"));
      return GridPrior<double>(Eigen::Map<const Eigen::VectorXd>(points.data(), static_cast<Eigen::Index>(points.size())),
                               Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size())));
    }
    throw ConfigError(join(path, "kind"), "unknown prior kind '" + kind + "'");
  });
}

Json to_json(const ForecastTrace<double>& trace) {
  return Json{{"forecasts", trace.forecasts()}, {"outcomes", trace.outcomes().str()}};
}

ForecastTrace<double> trace_from_json(const Json& node, const std::string& path) {
  using namespace config;
  check_keys(node, path, {"forecasts", "outcomes"});
  const auto forecasts = numbers(member(node, "forecasts", path), join(path, "forecasts"));
  const std::string outcomes = string(member(node, "outcomes", path), join(path, "outcomes"));
  return validated(path, [&] {
    return ForecastTrace<double>(forecasts, Realization::parse(outcomes));
  });
}

Json to_json(const ComposedParams& p) {
  return Json{{"recovery_order", p.recovery_order},
              {"grid_size", p.grid_size},
              {"quantiles", p.region.quantiles},
              {"half_width", p.region.half_width},
              {"delta", p.region.delta},
              {"widening", p.widening},
              {"consistency_tol", p.consistency_tol},
              {"feasibility_threshold", p.feasibility_threshold}};
}

ComposedParams composed_params_from_json(const Json& node, const std::string& path) {
  using namespace config;
  expect_object(node, path);
  ComposedParams p;
  p.recovery_order = int_or(node, "recovery_order", path, p.recovery_order);
  p.grid_size = int_or(node, "grid_size", path, p.grid_size);
  p.region.quantiles = int_or(node, "quantiles", path, p.region.quantiles);
  p.region.half_width = number_or(node, "half_width", path, p.region.half_width);
  p.region.delta = number_or(node, "delta", path, p.region.delta);
  p.widening = number_or(node, "widening", path, p.widening);
  p.consistency_tol = number_or(node, "consistency_tol", path, p.consistency_tol);
  p.feasibility_threshold = number_or(node, "feasibility_threshold", path, p.feasibility_threshold);
  return p;
}

Json to_json(const TestSpec& spec) {
  Json out = std::visit(
      Overloaded{
          [](const ComposedParams& p) { return to_json(p); },
          [](const CalibrationParams& p) {
            return Json{{"bins", p.bins}, {"tol", p.tol}, {"min_count", p.min_count}};
          },
          [](const LikelihoodParams& p) { return Json{{"tol", p.tol}}; },
          [](const IidFrequencyParams& p) { return Json{{"tol", p.tol}}; },
          [](const EventualFrequencyParams& p) {
            return Json{{"tol", p.tol}, {"burn_in", p.burn_in}};
          },
      },
      spec.params);
  out["kind"] = std::string(to_string(spec.kind()));
  out["horizon"] = spec.horizon;
  return out;
}

TestSpec test_spec_from_json(const Json& node, const std::string& path) {
  using namespace config;
  const std::string kind_name = string(member(node, "kind", path), join(path, "kind"));
  TestKind kind;
  try {
    kind = test_kind_from_string(kind_name);
  } catch (const Error& e) {
    throw ConfigError(join(path, "kind"), e.what());
  }
  TestSpec spec;
  spec.horizon = int_or(node, "horizon", path, 0);
  if (!node.contains("horizon")) throw ConfigError(join(path, "horizon"), "missing required key");
  switch (kind) {
    case TestKind::kComposedT:
      check_keys(node, path, {"kind", "horizon", "recovery_order", "grid_size", "quantiles",
                              "half_width", "delta", "widening", "consistency_tol",
                              "feasibility_threshold"});
      spec.params = composed_params_from_json(node, path);
      break;
    case TestKind::kCalibration: {
      check_keys(node, path, {"kind", "horizon", "bins", "tol", "min_count"});
      CalibrationParams p;
      p.bins = int_or(node, "bins", path, p.bins);
      p.tol = number_or(node, "tol", path, p.tol);
      p.min_count = int_or(node, "min_count", path, p.min_count);
      spec.params = p;
      break;
    }
    case TestKind::kLikelihood: {
      check_keys(node, path, {"kind", "horizon", "tol"});
      spec.params = LikelihoodParams{number_or(node, "tol", path, LikelihoodParams{}.tol)};
      break;
    }
    case TestKind::kIidFrequency: {
      check_keys(node, path, {"kind", "horizon", "tol"});
      spec.params = IidFrequencyParams{number_or(node, "tol", path, IidFrequencyParams{}.tol)};
      break;
    }
    case TestKind::kEventualFrequency: {
      check_keys(node, path, {"kind", "horizon", "tol", "burn_in"});
      EventualFrequencyParams p;
      p.tol = number_or(node, "tol", path, p.tol);
      p.burn_in = int_or(node, "burn_in", path, p.burn_in);
      spec.params = p;
      break;
    }
  }
  validated(path, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

Json to_json(const MomentVector<double>& m) {
  return std::vector<double>(m.values().begin(), m.values().end());
}

Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Json to_json(const Eigen::MatrixXd& matrix) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    rows.push_back(to_json(Eigen::VectorXd(matrix.row(i).transpose())));
  }
  return rows;
}

Json to_json(const GameSolution& s) {
  return Json{{"value", s.value},
              {"lower", s.lower},
              {"upper", s.upper},
              {"duality_gap", s.duality_gap()},
              {"row_strategy", to_json(s.row_strategy)},
              {"col_strategy", to_json(s.col_strategy)}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace preqlab
