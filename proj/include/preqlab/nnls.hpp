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

#ifndef PREQLAB_NNLS_HPP_
#define PREQLAB_NNLS_HPP_

#include <Eigen/Dense>

namespace preqlab {

struct NnlsResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

// Lawson-Hanson active-set solver for min ||A x - b||_2 subject to x >= 0.
// Deterministic; the passive-set subproblems are solved by column-pivoted QR.
NnlsResult nonnegative_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                     int max_iterations = 0);

}  // namespace preqlab

#endif  // PREQLAB_NNLS_HPP_
