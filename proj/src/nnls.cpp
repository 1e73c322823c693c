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

#include "preqlab/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace preqlab {

NnlsResult nonnegative_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                     int max_iterations) {
  const Eigen::Index n = A.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() *
                     static_cast<double>(std::max(A.rows(), n));

  NnlsResult result;
  result.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& x = result.x;
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);

  auto solve_passive = [&](std::vector<Eigen::Index>& index) {
    index.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[j]) index.push_back(j);
    }
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(index.size()));
    for (std::size_t c = 0; c < index.size(); ++c) sub.col(c) = A.col(index[c]);
    return Eigen::VectorXd(sub.colPivHouseholderQr().solve(b));
  };

  Eigen::VectorXd gradient = A.transpose() * (b - A * x);
  std::vector<Eigen::Index> index;
  while (result.iterations < max_iterations) {
    Eigen::Index entering = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && !blocked[j] && gradient[j] > best) {
        best = gradient[j];
        entering = j;
      }
    }
    if (entering < 0) {
      result.converged = true;
      break;
    }
    passive[entering] = true;

    bool first = true;
    while (result.iterations < max_iterations) {
      ++result.iterations;
      const Eigen::VectorXd z = solve_passive(index);
      double step = 1.0;
      bool feasible = true;
      for (std::size_t c = 0; c < index.size(); ++c) {
        if (z[c] <= 0.0) {
          feasible = false;
          const double xi = x[index[c]];
          step = std::min(step, xi / (xi - z[c]));
        }
      }
      if (feasible) {
        x.setZero();
        for (std::size_t c = 0; c < index.size(); ++c) x[index[c]] = z[c];
        std::fill(blocked.begin(), blocked.end(), false);
        break;
      }
      if (first && z[static_cast<Eigen::Index>(
                       std::find(index.begin(), index.end(), entering) - index.begin())] <= 0.0) {
        // The entering column cannot carry positive weight; skip it until x moves.
        passive[entering] = false;
        blocked[entering] = true;
        break;
      }
      first = false;
      for (std::size_t c = 0; c < index.size(); ++c) {
        const Eigen::Index j = index[c];
        x[j] += step * (z[c] - x[j]);
        if (x[j] <= tol) {
          x[j] = 0.0;
          passive[j] = false;
        }
      }
    }
    gradient = A.transpose() * (b - A * x);
  }
  return result;
}

}  // namespace preqlab
