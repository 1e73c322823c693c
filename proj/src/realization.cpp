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

#include "preqlab/realization.hpp"

#include <algorithm>

#include "preqlab/errors.hpp"

namespace preqlab {

int check_outcome(int outcome) {
  if (outcome != 0 && outcome != 1) {
    throw InvalidArgument("outcome must be 0 or 1, got " +
                          std::to_string(outcome));
  }
  return outcome;
}

Realization::Realization(std::vector<std::uint8_t> symbols)
    : symbols_(std::move(symbols)) {
  for (auto s : symbols_) ones_ += check_outcome(s);
}

Realization Realization::parse(std::string_view bits) {
  Realization x;
  x.symbols_.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw InvalidArgument(std::string("realization strings contain only "
                                        "'0' and '1', found '") + c + "'");
    }
    x.push_back(c - '0');
  }
  return x;
}

std::string Realization::str() const {
  std::string out(symbols_.size(), '0');
  std::transform(symbols_.begin(), symbols_.end(), out.begin(),
                 [](std::uint8_t s) { return static_cast<char>('0' + s); });
  return out;
}

void Realization::push_back(int outcome) {
  symbols_.push_back(static_cast<std::uint8_t>(check_outcome(outcome)));
  ones_ += outcome;
}

Realization Realization::prefix(std::size_t n) const {
  n = std::min(n, symbols_.size());
  return Realization(std::vector<std::uint8_t>(symbols_.begin(),
                                               symbols_.begin() + n));
}

double empirical_mean(const Realization& x) {
  if (x.empty()) throw EmptyRealization("empirical mean of an empty realization");
  return static_cast<double>(x.ones()) / static_cast<double>(x.length());
}

}  // namespace preqlab
