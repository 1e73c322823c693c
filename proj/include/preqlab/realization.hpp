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

#ifndef PREQLAB_REALIZATION_HPP_
#define PREQLAB_REALIZATION_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace preqlab {

// A finite binary outcome sequence (s_0, ..., s_{n-1}), s_i in {0, 1}.
// Keeps a running count of ones since every exchangeable quantity in this
// library depends on a path only through (length, ones).
class Realization {
 public:
  Realization() = default;
  explicit Realization(std::vector<std::uint8_t> symbols);

  // Parses a string of '0'/'1' characters.
  static Realization parse(std::string_view bits);
  std::string str() const;

  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }
  int length() const noexcept { return static_cast<int>(symbols_.size()); }
  int ones() const noexcept { return ones_; }
  int zeros() const noexcept { return length() - ones_; }

  int operator[](std::size_t i) const { return symbols_[i]; }
  const std::vector<std::uint8_t>& symbols() const noexcept { return symbols_; }

  void push_back(int outcome);
  Realization prefix(std::size_t n) const;

  bool operator==(const Realization& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::uint8_t> symbols_;
  int ones_ = 0;
};

// Throws InvalidArgument unless outcome is 0 or 1.
int check_outcome(int outcome);

// (s_0 + ... + s_{n-1}) / n; throws EmptyRealization for n = 0.
double empirical_mean(const Realization& x);

}  // namespace preqlab

#endif  // PREQLAB_REALIZATION_HPP_
