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

#ifndef PREQLAB_RECOVERY_HPP_
#define PREQLAB_RECOVERY_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "preqlab/common.hpp"
#include "preqlab/core.hpp"
#include "preqlab/errors.hpp"

namespace preqlab {

// c_0..c_N with c_n the theory's mass of the observed length-n prefix.
template <typename Scalar>
struct PathProbabilities {
  Vector<Scalar> probs;
};

// Raw moments m_0..m_K of a mixing distribution on [0,1].
template <typename Scalar>
class MomentVector {
 public:
  MomentVector() = default;
  explicit MomentVector(Vector<Scalar> moments) : moments_(std::move(moments)) {
    if (moments_.size() == 0) throw InvalidArgument("moment vector needs m_0");
  }

  int order() const noexcept { return static_cast<int>(moments_.size()) - 1; }
  const Vector<Scalar>& values() const noexcept { return moments_; }
  const Scalar& operator[](int k) const { return moments_[k]; }

  template <typename To>
  MomentVector<To> cast() const {
    Vector<To> out(moments_.size());
    for (Eigen::Index k = 0; k < moments_.size(); ++k) out[k] = scalar_cast<To>(moments_[k]);
    return MomentVector<To>(std::move(out));
  }

  bool operator==(const MomentVector& other) const { return moments_ == other.moments_; }

 private:
  Vector<Scalar> moments_;
};

struct RecoveryOptions {
  // Slack allowed on m_n in [0, m_{n-1}] before the trace is declared
  // inconsistent with every exchangeable theory.
  double tolerance = 1e-9;
};

// Recovery order used when the caller does not pick one.
inline int default_recovery_order(int horizon) { return std::min(horizon, 16); }

template <typename Scalar>
PathProbabilities<Scalar> recover_path_probs(const ForecastTrace<Scalar>& trace) {
  Vector<Scalar> c(trace.horizon() + 1);
  c[0] = Scalar(1);
  for (int n = 0; n < trace.horizon(); ++n) {
    const Scalar& p = trace.forecasts()[n];
    c[n + 1] = c[n] * (trace.outcomes()[n] == 1 ? p : Scalar(1) - p);
  }
  return {std::move(c)};
}

namespace detail {

// Rows 0..order of Pascal's triangle in the working scalar.
template <typename Work>
std::vector<std::vector<Work>> binomial_table(int order) {
  std::vector<std::vector<Work>> table(order + 1);
  for (int n = 0; n <= order; ++n) {
    table[n].assign(n + 1, Work(1));
    for (int j = 1; j < n; ++j) table[n][j] = table[n - 1][j - 1] + table[n - 1][j];
  }
  return table;
}

}  // namespace detail

// Solves the moment identities along the observed path one unknown at a
// time. With k ones among the first n outcomes and r = n - k,
//   c_n = sum_{j=0}^{r} C(r, j) (-1)^j m_{k+j},
// where m_n (j = r) is the only moment not already determined. Exact scalars
// are solved exactly; double traces are solved in 113-bit arithmetic and
// rounded once at the end.
template <typename Scalar>
MomentVector<Scalar> recover_moments(const ForecastTrace<Scalar>& trace, int order,
                                     RecoveryOptions options = {}) {
  using Work = accumulator_t<Scalar>;
  if (order < 0) throw InvalidArgument("recovery order must be nonnegative");
  if (order > trace.horizon()) {
    throw InvalidArgument("recovery order " + std::to_string(order) +
                          " exceeds trace horizon " + std::to_string(trace.horizon()));
  }
  const auto binom = detail::binomial_table<Work>(order);
  const Work tol = scalar_cast<Work>(Scalar(options.tolerance));

  std::vector<Work> m(order + 1);
  m[0] = Work(1);
  Work c(1);
  int ones = 0;
  for (int n = 1; n <= order; ++n) {
    const Work p = scalar_cast<Work>(trace.forecasts()[n - 1]);
    const int s = trace.outcomes()[n - 1];
    c *= (s == 1 ? p : Work(1) - p);
    ones += s;
    const int r = n - ones;
    Work known(0);
    for (int j = 0; j < r; ++j) {
      const Work term = binom[r][j] * m[ones + j];
      if (j % 2 == 0) {
        known += term;
      } else {
        known -= term;
      }
    }
    m[n] = (r % 2 == 0) ? c - known : known - c;
    if (m[n] < -tol || m[n] > m[n - 1] + tol) {
      throw InconsistentTrace("recovered moment m_" + std::to_string(n) +
                              " leaves [0, m_" + std::to_string(n - 1) +
                              "]: forecasts are not exchangeable-consistent");
    }
  }

  Vector<Scalar> out(order + 1);
  for (int k = 0; k <= order; ++k) out[k] = scalar_cast<Scalar>(m[k]);
  return MomentVector<Scalar>(std::move(out));
}

// Finite Hausdorff condition: (-1)^j Delta^j m_k >= -tol for all j + k <= K.
// (-1)^j Delta^j m_k equals the integral of q^k (1-q)^j, i.e. the mass of any
// single path with k ones and j zeros.
template <typename Scalar>
bool hausdorff_check(const MomentVector<Scalar>& m, double tol) {
  using Work = accumulator_t<Scalar>;
  const Work slack = scalar_cast<Work>(Scalar(tol));
  {
    using std::abs;
    const Work m0 = scalar_cast<Work>(m[0]);
    if (abs(m0 - Work(1)) > slack) {
      throw InvalidArgument("hausdorff_check requires m_0 = 1");
    }
  }
  std::vector<Work> row(m.order() + 1);
  for (int k = 0; k <= m.order(); ++k) row[k] = scalar_cast<Work>(m[k]);
  for (int j = 0; j <= m.order(); ++j) {
    for (int k = 0; k + j <= m.order(); ++k) {
      if (row[k] < -slack) return false;
    }
    for (int k = 0; k + j + 1 <= m.order(); ++k) row[k] = row[k] - row[k + 1];
  }
  return true;
}

struct ReconstructionOptions {
  // InfeasibleMoments is raised when the best fit still misses some moment
  // by more than this.
  double feasibility_threshold = 1e-3;
};

struct Reconstruction {
  GridPrior<double> prior;
  double max_abs_error = 0.0;   // max_k |sum_i w_i q_i^k - m_k|
  double squared_error = 0.0;   // sum_k (sum_i w_i q_i^k - m_k)^2
};

// Simplex-constrained least-squares fit of grid weights to the moments.
Reconstruction reconstruct_prior(const MomentVector<double>& m, const Eigen::VectorXd& grid,
                                 ReconstructionOptions options = {});
Reconstruction reconstruct_prior(const MomentVector<double>& m, int grid_size,
                                 ReconstructionOptions options = {});

}  // namespace preqlab

#endif  // PREQLAB_RECOVERY_HPP_
