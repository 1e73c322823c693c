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

#include "preqlab/game.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "preqlab/errors.hpp"

namespace preqlab {
namespace {

// Tableau entries are O(1) after the shift, so absolute tolerances suffice.
constexpr double kReducedCostEps = 1e-11;
constexpr double kPivotEps = 1e-9;

void require_nonempty(const Eigen::MatrixXd& payoff) {
  if (payoff.rows() == 0 || payoff.cols() == 0) throw InvalidArgument("game matrix is empty");
  if (!payoff.allFinite()) throw InvalidArgument("game matrix has non-finite entries");
}

Eigen::VectorXd to_simplex(Eigen::VectorXd v) {
  v = v.cwiseMax(0.0);
  const double total = v.sum();
  if (total > 0.0) {
    v /= total;
  } else {
    v.setConstant(1.0 / static_cast<double>(v.size()));
  }
  return v;
}

// Solves max sum(y) s.t. P y <= 1, y >= 0 for strictly positive P, starting
// from the slack basis. Returns the primal y and the dual x (row prices).
struct LpOutcome {
  Eigen::VectorXd primal;
  Eigen::VectorXd dual;
  double objective = 0.0;
  int pivots = 0;
};

LpOutcome simplex_packing(const Eigen::MatrixXd& P) {
  const Eigen::Index m = P.rows(), n = P.cols();
  const Eigen::Index width = n + m + 1, rhs = n + m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, width);
  T.topLeftCorner(m, n) = P;
  T.block(0, n, m, m).setIdentity();
  T.col(rhs).head(m).setOnes();
  T.row(m).head(n).setConstant(-1.0);

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), n);

  // Dantzig's rule is fast; Bland's rule guarantees termination if we start
  // cycling through degenerate pivots.
  const int bland_after = static_cast<int>(50 * (m + n));
  const int max_pivots = bland_after + static_cast<int>(200 * (m + n)) + 1000;
  LpOutcome out;
  while (true) {
    const bool bland = out.pivots >= bland_after;
    Eigen::Index enter = -1;
    double best = -kReducedCostEps;
    for (Eigen::Index c = 0; c < n + m; ++c) {
      if (T(m, c) < best) {
        enter = c;
        if (bland) break;
        best = T(m, c);
      }
    }
    if (enter < 0) break;
    if (out.pivots >= max_pivots) throw Error("simplex failed to terminate");

    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      if (T(r, enter) <= kPivotEps) continue;
      const double q = T(r, rhs) / T(r, enter);
      if (q < ratio - kPivotEps ||
          (q <= ratio + kPivotEps && leave >= 0 && basis[r] < basis[leave])) {
        ratio = std::min(ratio, q);
        leave = r;
      }
    }
    if (leave < 0) {
      // A positive P keeps the LP bounded, so a column with no admissible
      // pivot is rounding noise. Freeze it and carry on.
      if (T(m, enter) > -1e-7) {
        T(m, enter) = 0.0;
        ++out.pivots;
        continue;
      }
      throw Error("simplex detected an unbounded packing LP");
    }

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r <= m; ++r) {
      if (r != leave && T(r, enter) != 0.0) T.row(r) -= T(r, enter) * T.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
    ++out.pivots;
  }

  out.primal = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (basis[r] < n) out.primal[basis[r]] = T(r, rhs);
  }
  out.dual = T.row(m).segment(n, m).transpose();
  out.objective = T(m, rhs);
  return out;
}

GameSolution lp_wide(const Eigen::MatrixXd& A) {
  const double shift = 1.0 - A.minCoeff();
  const LpOutcome lp = simplex_packing(A.array() + shift);
  GameSolution sol = certify(A, lp.dual / lp.objective, lp.primal / lp.objective);
  sol.value = 1.0 / lp.objective - shift;
  sol.iterations = lp.pivots;
  return sol;
}

// Weights on `support` (rows of M) that make every column in `against` pay
// the same; the last entry of the result is that common payoff. Weights may
// come out negative when the support guess is wrong.
Eigen::VectorXd equalize(const Eigen::MatrixXd& M, const std::vector<Eigen::Index>& support,
                         const std::vector<Eigen::Index>& against) {
  const auto s = static_cast<Eigen::Index>(support.size());
  const auto a = static_cast<Eigen::Index>(against.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(a + 1, s + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a + 1);
  for (Eigen::Index j = 0; j < a; ++j) {
    for (Eigen::Index i = 0; i < s; ++i) sys(j, i) = M(support[i], against[j]);
    sys(j, s) = -1.0;
  }
  sys.row(a).head(s).setOnes();
  rhs[a] = 1.0;
  return sys.completeOrthogonalDecomposition().solve(rhs);
}

Eigen::VectorXd scatter(const Eigen::VectorXd& z, const std::vector<Eigen::Index>& support,
                        Eigen::Index size) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = z[static_cast<Eigen::Index>(i)];
  return out;
}

// Removes the index carrying the most negative weight; false if none is
// negative.
bool drop_negative(std::vector<Eigen::Index>& support, const Eigen::VectorXd& z) {
  Eigen::Index worst = 0;
  const double w = z.head(static_cast<Eigen::Index>(support.size())).minCoeff(&worst);
  if (w >= -1e-12) return false;
  support.erase(support.begin() + worst);
  return true;
}

// Local search over support pairs: solve the indifference equations, drop a
// strategy that gets negative weight, add a missing best response, repeat.
void try_supports(const Eigen::MatrixXd& A, const Eigen::MatrixXd& At,
                  std::vector<Eigen::Index> sr, std::vector<Eigen::Index> sc,
                  GameSolution& best) {
  const auto limit = 2 * (A.rows() + A.cols());
  for (Eigen::Index step = 0; step < limit && !sr.empty() && !sc.empty(); ++step) {
    const Eigen::VectorXd x = equalize(A, sr, sc);
    const Eigen::VectorXd y = equalize(At, sc, sr);
    if (!x.allFinite() || !y.allFinite()) return;
    const bool dropped_row = drop_negative(sr, x);
    const bool dropped_col = drop_negative(sc, y);
    if (dropped_row || dropped_col) continue;

    GameSolution candidate = certify(A, scatter(x, sr, A.rows()), scatter(y, sc, A.cols()));
    if (candidate.duality_gap() < best.duality_gap()) {
      candidate.iterations = best.iterations;
      best = candidate;
    }
    if (candidate.duality_gap() <= 1e-12) return;

    Eigen::Index row = 0, col = 0;
    (A * candidate.col_strategy).maxCoeff(&row);
    (candidate.row_strategy.transpose() * A).minCoeff(&col);
    bool grew = false;
    if (std::find(sr.begin(), sr.end(), row) == sr.end()) {
      sr.push_back(row);
      grew = true;
    }
    if (std::find(sc.begin(), sc.end(), col) == sc.end()) {
      sc.push_back(col);
      grew = true;
    }
    if (!grew) return;
  }
}

std::vector<Eigen::Index> ranked(const Eigen::VectorXd& score, bool positive_only) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < score.size(); ++i) {
    if (!positive_only || score[i] > 0.0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });
  return idx;
}

void polish_supports(const Eigen::MatrixXd& A, const std::vector<Eigen::Index>& rows,
                     const std::vector<Eigen::Index>& cols, GameSolution& best) {
  const Eigen::MatrixXd At = A.transpose();
  for (std::size_t k = 1; k <= std::min(rows.size(), cols.size()); ++k) {
    try_supports(A, At, {rows.begin(), rows.begin() + static_cast<long>(k)},
                 {cols.begin(), cols.begin() + static_cast<long>(k)}, best);
    if (best.duality_gap() <= 1e-12) return;
  }
}

// Guesses the equilibrium supports two ways: by how often fictitious play
// used each strategy, and by how well each strategy does against the
// opponent's empirical mixture. The second ordering is the sharper one late
// in the run, when early detours still inflate some counts.
void polish(const Eigen::MatrixXd& A, const Eigen::VectorXd& row_counts,
            const Eigen::VectorXd& col_counts, GameSolution& best) {
  polish_supports(A, ranked(row_counts, true), ranked(col_counts, true), best);
  const Eigen::VectorXd row_score = A * col_counts;
  const Eigen::VectorXd col_score = -(row_counts.transpose() * A).transpose();
  polish_supports(A, ranked(row_score, false), ranked(col_score, false), best);

  // Strategies paying within tau of the best response, for a ladder of tau
  // around the current gap. Support sizes need not match here.
  const Eigen::MatrixXd At = A.transpose();
  const double total = row_counts.sum();
  const double row_top = row_score.maxCoeff() / total;
  const double col_top = col_score.maxCoeff() / total;
  const double gap = std::max(best.duality_gap(), 1e-9);
  for (double tau = gap / 16.0; tau <= 64.0 * gap && best.duality_gap() > 1e-12; tau *= 2.0) {
    std::vector<Eigen::Index> sr, sc;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (row_score[i] / total >= row_top - tau) sr.push_back(i);
    }
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (col_score[j] / total >= col_top - tau) sc.push_back(j);
    }
    try_supports(A, At, std::move(sr), std::move(sc), best);
  }

  // Strategies played with at least a given frequency.
  const Eigen::VectorXd row_freq = row_counts / total;
  const Eigen::VectorXd col_freq = col_counts / col_counts.sum();
  for (double level = 0.1; level >= 1e-4 && best.duality_gap() > 1e-12; level /= 2.0) {
    std::vector<Eigen::Index> sr, sc;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (row_freq[i] >= level) sr.push_back(i);
    }
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (col_freq[j] >= level) sc.push_back(j);
    }
    try_supports(A, At, std::move(sr), std::move(sc), best);
  }
}

}  // namespace

GameSolution certify(const Eigen::MatrixXd& payoff, Eigen::VectorXd row, Eigen::VectorXd col) {
  GameSolution sol;
  sol.row_strategy = to_simplex(std::move(row));
  sol.col_strategy = to_simplex(std::move(col));
  sol.lower = (sol.row_strategy.transpose() * payoff).minCoeff();
  sol.upper = (payoff * sol.col_strategy).maxCoeff();
  sol.value = 0.5 * (sol.lower + sol.upper);
  return sol;
}

GameSolution solve_game_lp(const Eigen::MatrixXd& payoff) {
  require_nonempty(payoff);
  // Keep the tableau short: the constraint count is the row count.
  if (payoff.rows() <= payoff.cols()) return lp_wide(payoff);
  GameSolution t = lp_wide(-payoff.transpose());
  GameSolution sol;
  sol.row_strategy = std::move(t.col_strategy);
  sol.col_strategy = std::move(t.row_strategy);
  sol.value = -t.value;
  sol.lower = -t.upper;
  sol.upper = -t.lower;
  sol.iterations = t.iterations;
  return sol;
}

GameSolution solve_game_fictitious_play(const Eigen::MatrixXd& A,
                                        const FictitiousPlayOptions& options) {
  require_nonempty(A);
  const Eigen::Index m = A.rows(), n = A.cols();
  Eigen::VectorXd row_counts = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd col_counts = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd row_payoff = Eigen::VectorXd::Zero(m);  // A * col_counts
  Eigen::VectorXd col_payoff = Eigen::VectorXd::Zero(n);  // row_counts^T * A

  GameSolution best;
  best.lower = -std::numeric_limits<double>::infinity();
  best.upper = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_row = Eigen::VectorXd::Constant(m, 1.0 / m);
  Eigen::VectorXd best_col = Eigen::VectorXd::Constant(n, 1.0 / n);

  Eigen::Index i = 0, j = 0;
  int next_polish = 256;
  int t = 0;
  while (t < options.max_iterations) {
    row_counts[i] += 1.0;
    col_counts[j] += 1.0;
    col_payoff += A.row(i).transpose();
    row_payoff += A.col(j);
    ++t;

    const double lower = col_payoff.minCoeff(&j) / t;
    const double upper = row_payoff.maxCoeff(&i) / t;
    if (lower > best.lower) {
      best.lower = lower;
      best_row = row_counts / t;
    }
    if (upper < best.upper) {
      best.upper = upper;
      best_col = col_counts / t;
    }
    if (best.upper - best.lower <= options.target_gap) break;
    if (options.polish && t == next_polish) {
      next_polish *= 2;
      GameSolution current = certify(A, best_row, best_col);
      current.iterations = t;
      polish(A, row_counts, col_counts, current);
      if (current.duality_gap() <= options.target_gap) return current;
    }
  }
  GameSolution sol = certify(A, best_row, best_col);
  sol.iterations = t;
  if (options.polish) polish(A, row_counts, col_counts, sol);
  return sol;
}

GameReport solve_game(const Eigen::MatrixXd& payoff) {
  GameReport report;
  report.solution = solve_game_lp(payoff);
  const GameSolution fp = solve_game_fictitious_play(payoff);
  report.fictitious_play_value = fp.value;
  report.fictitious_play_gap = fp.duality_gap();
  report.method_disagreement = std::abs(fp.value - report.solution.value);
  return report;
}

double closed_form_2x2_value(double a, double b, double c, double d) {
  const double maximin = std::max(std::min(a, b), std::min(c, d));
  const double minimax = std::min(std::max(a, c), std::max(b, d));
  if (maximin == minimax) return maximin;
  return (a * d - b * c) / (a + d - b - c);
}

}  // namespace preqlab
