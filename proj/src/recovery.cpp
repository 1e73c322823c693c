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

#include "preqlab/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "preqlab/nnls.hpp"

namespace preqlab {
namespace {

// Row 0 of the moment system is the sum-to-one constraint; weighting it
// heavily makes the unconstrained NNLS solution land on the simplex.
constexpr double kSimplexRowWeight = 1e3;

// Power matrix A(k, i) = grid_i^k for k = 0..order.
Eigen::MatrixXd power_matrix(const Eigen::VectorXd& points, int order) {
  Eigen::MatrixXd A(order + 1, points.size());
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    double power = 1.0;
    for (int k = 0; k <= order; ++k) {
      A(k, i) = power;
      power *= points[i];
    }
  }
  return A;
}

// Simplex-constrained fit of weights on `points`; the m_0 row is weighted up
// so the weights sum to one before normalization.
Eigen::VectorXd simplex_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& m) {
  Eigen::MatrixXd weighted = A;
  Eigen::VectorXd b = m;
  weighted.row(0) *= kSimplexRowWeight;
  b[0] *= kSimplexRowWeight;
  Eigen::VectorXd w = nonnegative_least_squares(weighted, b).x;
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

double max_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& w, const Eigen::VectorXd& m) {
  return (A * w - m).cwiseAbs().maxCoeff();
}

// Real roots in [0,1] of the kernel polynomial of the (s+1)x(s+1) Hankel
// matrix [m_{i+j}]. For moments of an s-atom measure the kernel is unique and
// its roots are the atoms.
std::vector<double> prony_roots(const Eigen::VectorXd& m, int s) {
  Eigen::MatrixXd H(s + 1, s + 1);
  for (int i = 0; i <= s; ++i) {
    for (int j = 0; j <= s; ++j) H(i, j) = m[i + j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullV);
  const Eigen::VectorXd c = svd.matrixV().col(s);
  std::vector<double> roots;
  if (s == 1) {
    if (c[1] != 0.0) roots.push_back(-c[0] / c[1]);
  } else {
    if (c[s] == 0.0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(s, s);
    companion.diagonal(-1).setOnes();
    for (int j = 0; j < s; ++j) companion(j, s - 1) = -c[j] / c[s];
    const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
    for (Eigen::Index j = 0; j < eig.size(); ++j) {
      if (std::abs(eig[j].imag()) <= 1e-6) roots.push_back(eig[j].real());
    }
  }
  std::erase_if(roots, [](double r) { return r < -1e-6 || r > 1 + 1e-6; });
  return roots;
}

// Grid indices for the roots: the nearest grid point of each, or both
// neighbours when `both` is set.
std::vector<Eigen::Index> snap_to_grid(const std::vector<double>& roots, const Eigen::VectorXd& grid,
                                       bool both) {
  std::vector<Eigen::Index> out;
  const double* begin = grid.data();
  const double* end = begin + grid.size();
  for (double r : roots) {
    const auto hi = std::lower_bound(begin, end, r) - begin;
    if (both) {
      if (hi < grid.size()) out.push_back(hi);
      if (hi > 0) out.push_back(hi - 1);
    } else if (hi == grid.size() || (hi > 0 && r - grid[hi - 1] < grid[hi] - r)) {
      out.push_back(hi - 1);
    } else {
      out.push_back(hi);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Reconstruction reconstruct_prior(const MomentVector<double>& m, const Eigen::VectorXd& grid,
                                 ReconstructionOptions options) {
  if (grid.size() == 0) throw InvalidParams("reconstruction grid is empty");
  const int order = m.order();
  const Eigen::VectorXd& moments = m.values();
  const Eigen::MatrixXd A = power_matrix(grid, order);

  Eigen::VectorXd w = simplex_fit(A, moments);
  if (!(w.sum() > 0.0)) throw InfeasibleMoments("reconstruction found no nonnegative fit");
  double error = max_residual(A, w, moments);

  // Many spread-out measures match a few moments to ~1e-9, so the dense fit
  // can smear a finite mixture over neighboring grid points. Prefer the
  // fewest atoms that fit no worse than the dense solution.
  // Both-neighbour supports are nearly collinear, so the nearest-point
  // support is tried first.
  bool improved = false;
  for (int s = 1; 2 * s <= order && !improved; ++s) {
    const auto roots = prony_roots(moments, s);
    if (roots.empty()) continue;
    for (bool both : {false, true}) {
      const auto candidates = snap_to_grid(roots, grid, both);
      Eigen::VectorXd points(static_cast<Eigen::Index>(candidates.size()));
      for (std::size_t c = 0; c < candidates.size(); ++c) points[c] = grid[candidates[c]];
      const Eigen::MatrixXd sub = power_matrix(points, order);
      const Eigen::VectorXd ws = simplex_fit(sub, moments);
      if (!(ws.sum() > 0.0)) continue;
      const double sparse_error = max_residual(sub, ws, moments);
      if (sparse_error <= error + 1e-14) {
        w.setZero();
        for (std::size_t c = 0; c < candidates.size(); ++c) w[candidates[c]] = ws[c];
        error = sparse_error;
        improved = true;
        break;
      }
    }
  }

  const Eigen::VectorXd residual = A * w - moments;
  Reconstruction out{GridPrior<double>(grid, w), residual.cwiseAbs().maxCoeff(), residual.squaredNorm()};
  if (!(out.max_abs_error <= options.feasibility_threshold)) {
    throw InfeasibleMoments("best simplex fit misses the moments by " +
                            std::to_string(out.max_abs_error));
  }
  return out;
}

Reconstruction reconstruct_prior(const MomentVector<double>& m, int grid_size,
                                 ReconstructionOptions options) {
  return reconstruct_prior(m, GridPrior<double>::uniform_grid(grid_size), options);
}

}  // namespace preqlab
