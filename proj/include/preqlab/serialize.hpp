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

#ifndef PREQLAB_SERIALIZE_HPP_
#define PREQLAB_SERIALIZE_HPP_

#include <initializer_list>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "preqlab/core.hpp"
#include "preqlab/errors.hpp"
#include "preqlab/game.hpp"
#include "preqlab/recovery.hpp"
#include "preqlab/testing.hpp"

namespace preqlab {

using Json = nlohmann::json;

// Strict field access for configuration documents. Every failure is a
// ConfigError naming the dotted path of the field.
namespace config {

std::string join(const std::string& path, std::string_view key);
std::string join(const std::string& path, std::size_t index);

void expect_object(const Json& node, const std::string& path);
// Rejects keys outside `allowed`.
void check_keys(const Json& node, const std::string& path,
                std::initializer_list<std::string_view> allowed);

double number(const Json& node, const std::string& path);
long long integer(const Json& node, const std::string& path);
std::uint64_t unsigned_integer(const Json& node, const std::string& path);
std::string string(const Json& node, const std::string& path);
std::vector<double> numbers(const Json& node, const std::string& path);
std::vector<int> integers(const Json& node, const std::string& path);

// Optional members of an object; `fallback` when absent.
double number_or(const Json& obj, std::string_view key, const std::string& path, double fallback);
int int_or(const Json& obj, std::string_view key, const std::string& path, int fallback);
const Json& member(const Json& obj, std::string_view key, const std::string& path);

}  // namespace config

Json to_json(const Prior& prior);
Prior prior_from_json(const Json& node, const std::string& path = "prior");

Json to_json(const ForecastTrace<double>& trace);
ForecastTrace<double> trace_from_json(const Json& node, const std::string& path = "trace");

Json to_json(const TestSpec& spec);
TestSpec test_spec_from_json(const Json& node, const std::string& path = "test");

Json to_json(const ComposedParams& params);
ComposedParams composed_params_from_json(const Json& node, const std::string& path);

Json to_json(const MomentVector<double>& m);
Json to_json(const GameSolution& solution);
Json to_json(const Eigen::MatrixXd& matrix);
Json to_json(const Eigen::VectorXd& vector);

// Reads a whole file as JSON; IoError if unreadable, ConfigError if the text
// is not JSON.
Json read_json_file(const std::string& path);

}  // namespace preqlab

#endif  // PREQLAB_SERIALIZE_HPP_
