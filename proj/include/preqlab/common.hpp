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

#ifndef PREQLAB_COMMON_HPP_
#define PREQLAB_COMMON_HPP_

#include <cstdint>
#include <type_traits>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

namespace preqlab {

using Rational = boost::multiprecision::cpp_rational;
using WideReal = boost::multiprecision::float128;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Precision used for alternating-sign accumulations over a storage scalar.
// Binomial moment identities cancel catastrophically in double, so double
// inputs are lifted to 113-bit floats; exact types stay exact.
template <typename Scalar>
struct Accumulator {
  using type = Scalar;
};
template <>
struct Accumulator<double> {
  using type = WideReal;
};
template <typename Scalar>
using accumulator_t = typename Accumulator<Scalar>::type;

template <typename Scalar>
inline constexpr bool is_exact_v = !std::is_floating_point_v<Scalar> &&
                                   !std::is_same_v<Scalar, WideReal>;

template <typename To, typename From>
To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<From, Rational> &&
                       std::is_same_v<To, WideReal>) {
    return WideReal(numerator(x)) / WideReal(denominator(x));
  } else {
    return static_cast<To>(x);
  }
}

// base^exp by repeated squaring; exact for rationals.
template <typename Scalar>
Scalar ipow(Scalar base, int exp) {
  Scalar result(1);
  while (exp > 0) {
    if (exp & 1) result *= base;
    base *= base;
    exp >>= 1;
  }
  return result;
}

}  // namespace preqlab

#endif  // PREQLAB_COMMON_HPP_
