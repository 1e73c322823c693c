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

#ifndef PREQLAB_GAME_HPP_
#define PREQLAB_GAME_HPP_

#include <Eigen/Core>

namespace preqlab {

// Solution of the zero-sum game where the row player maximizes x^T A y.
// `lower` and `upper` are the guaranteed payoffs of the two strategies:
//   lower = min_j (x^T A)_j,   upper = max_i (A y)_i,
// so the true value lies in [lower, upper] whatever solver produced them.
struct GameSolution {
  Eigen::VectorXd row_strategy;
  Eigen::VectorXd col_strategy;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;

  double duality_gap() const noexcept { return upper - lower; }
};

// Bounds certified by a pair of mixed strategies.
GameSolution certify(const Eigen::MatrixXd& payoff, Eigen::VectorXd row, Eigen::VectorXd col);

// Tableau simplex on the standard LP reformulation.
GameSolution solve_game_lp(const Eigen::MatrixXd& payoff);

struct FictitiousPlayOptions {
  int max_iterations = 1000000;
  // Stop as soon as the certified gap drops below this.
  double target_gap = 1e-10;
  // Try to finish exactly by solving the indifference equations on the
  // supports that the empirical frequencies point at.
  bool polish = true;
};

GameSolution solve_game_fictitious_play(const Eigen::MatrixXd& payoff,
                                        const FictitiousPlayOptions& options = {});

// Linear-program solution, cross-checked by fictitious play.
struct GameReport {
  GameSolution solution;
  double fictitious_play_value = 0.0;
  double fictitious_play_gap = 0.0;
  double method_disagreement = 0.0;
};
GameReport solve_game(const Eigen::MatrixXd& payoff);

// Value of [[a, b], [c, d]] from the textbook formula, saddle points included.
double closed_form_2x2_value(double a, double b, double c, double d);

}  // namespace preqlab

#endif  // PREQLAB_GAME_HPP_
