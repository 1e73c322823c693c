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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "preqlab/core.hpp"
#include "preqlab/recovery.hpp"
#include "preqlab/rng.hpp"

using namespace preqlab;

namespace {

ForecastTrace<double> trace_of(std::vector<double> p, const char* bits) {
  return ForecastTrace<double>(std::move(p), Realization::parse(bits));
}

MomentVector<double> moments_of(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return MomentVector<double>(v);
}

// Random rational grid prior with atoms on j/20.
GridPrior<Rational> random_rational_prior(Rng& rng, int max_atoms) {
  std::vector<int> slots(21);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  const int atoms = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_atoms));
  std::vector<std::pair<Rational, Rational>> list;
  int total = 0;
  std::vector<int> w(static_cast<std::size_t>(atoms));
  for (auto& x : w) total += (x = 1 + static_cast<int>(rng() % 7));
  for (int i = 0; i < atoms; ++i) list.emplace_back(Rational(slots[i], 20), Rational(w[i], total));
  return GridPrior<Rational>::from_atoms(list);
}

}  // namespace

TEST_CASE("recover_path_probs examples") {
  const auto a = recover_path_probs(trace_of({0.5, 2.0 / 3}, "11")).probs;
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(0.5));
  CHECK(a[2] == doctest::Approx(1.0 / 3));
  CHECK(a[2] == doctest::Approx(path_probability(BetaPrior(1, 1), Realization::parse("11"))));
  const auto b = recover_path_probs(trace_of({1, 1, 1}, "111")).probs;
  CHECK(b == Eigen::VectorXd::Ones(4));
  const auto c = recover_path_probs(trace_of({0.5}, "0")).probs;
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 0.5);
}

TEST_CASE("recover_moments examples") {
  const auto ones = recover_moments(make_trace(PointMass(1), Realization::parse("11111")), 4);
  for (int k = 0; k <= 4; ++k) CHECK(ones[k] == 1.0);

  // Uniform prior: m_n = 1/(n+1), checked against the Simpson integral of q^n.
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const auto path = sample_realization(BetaPrior(1, 1), 12, rng);
    const auto m = recover_moments(make_trace(BetaPrior(1, 1), path), 5);
    for (int n = 0; n <= 5; ++n) {
      double s = 0.0;
      const int panels = 2000;
      for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
        s += w * std::pow(static_cast<double>(i) / panels, n);
      }
      s /= 3.0 * panels;
      CHECK(m[n] == doctest::Approx(s).epsilon(1e-9));
    }
  }

  const auto half = recover_moments(make_trace(PointMass(0.5), Realization::parse("0110")), 3);
  CHECK(half[1] == 0.5);
  CHECK(half[2] == 0.25);
  CHECK(half[3] == 0.125);
}

TEST_CASE("recover_moments rejects orders beyond the trace") {
  CHECK_THROWS(recover_moments(make_trace(PointMass(0.5), Realization::parse("01")), 3));
}

TEST_CASE("exact rational recovery reproduces the true moments") {
  Rng rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    const auto prior = random_rational_prior(rng, 6);
    const auto path = sample_realization(Prior(prior.cast<double>()), 14, rng);
    const auto m = recover_moments(make_trace(prior, path), 12);
    CHECK(m.values() == prior.moments(12));
  }
}

TEST_CASE("recovery is path independent") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const auto prior = Prior(random_rational_prior(rng, 6).cast<double>());
    const auto first = recover_moments(make_trace(prior, sample_realization(prior, 16, rng)), 12);
    for (int path = 0; path < 9; ++path) {
      const auto other = recover_moments(make_trace(prior, sample_realization(prior, 16, rng)), 12);
      CHECK((other.values() - first.values()).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("hausdorff_check examples") {
  CHECK(hausdorff_check(moments_of({1, 1.0 / 2, 1.0 / 3, 1.0 / 4}), 1e-12));
  CHECK_FALSE(hausdorff_check(moments_of({1, 0.2, 0.5}), 1e-9));
  CHECK(hausdorff_check(moments_of({1, 1, 1}), 0.0));
}

TEST_CASE("hausdorff_check: uniform-prior differences by hand") {
  // Delta^j m_k for m_k = 1/(k+1) equals k! j! / (k+j+1)!, all positive.
  const auto m = moments_of({1, 1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5});
  double d21 = m[1] - 2 * m[2] + m[3];  // (1-q)^2 q: 1/2 - 2/3 + 1/4
  CHECK(d21 == doctest::Approx(1.0 / 12));
  CHECK(hausdorff_check(m, 1e-12));
}

TEST_CASE("hausdorff_check passes on genuine traces and fails the alternating counterexample") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const auto prior = Prior(random_rational_prior(rng, 6).cast<double>());
    const auto m = recover_moments(make_trace(prior, sample_realization(prior, 12, rng)), 12);
    CHECK(hausdorff_check(m, 1e-9));
  }
  std::vector<double> p;
  for (int i = 0; i < 8; ++i) p.push_back(i % 2 ? 0.1 : 0.9);
  const auto m = recover_moments(trace_of(p, "11111111"), 8, RecoveryOptions{1.0});
  CHECK_FALSE(hausdorff_check(m, 1e-9));
}

TEST_CASE("reconstruct_prior examples") {
  Eigen::VectorXd grid(3);
  grid << 0.0, 0.5, 1.0;
  const auto fit = reconstruct_prior(moments_of({1, 0.5, 0.25, 0.125}), grid);
  CHECK(fit.prior.weights()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.prior.weights()[1] == doctest::Approx(1.0));
  CHECK(fit.prior.weights()[2] == doctest::Approx(0.0).epsilon(1e-12));

  const auto m = moments_of({1, 1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5});
  const auto uniform = reconstruct_prior(m, 101);
  for (int k = 0; k <= 4; ++k) CHECK(std::abs(uniform.prior.moment(k) - m[k]) <= 1e-6);

  const auto top = reconstruct_prior(moments_of({1, 1, 1}), 11);
  const auto& pts = top.prior.points();
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    CHECK(top.prior.weights()[i] == doctest::Approx(pts[i] == 1.0 ? 1.0 : 0.0).epsilon(1e-9));
  }
}

TEST_CASE("reconstruct_prior recovers a finite mixture on the grid exactly") {
  // Five equal atoms from ten moments: the dense fit alone smears mass over
  // neighbouring grid cells here.
  const double atoms[] = {0.3, 0.45, 0.6, 0.75, 0.9};
  Eigen::VectorXd m(11);
  for (int k = 0; k <= 10; ++k) {
    m[k] = 0.0;
    for (double q : atoms) m[k] += 0.2 * std::pow(q, k);
  }
  const auto fit = reconstruct_prior(MomentVector<double>(m), 201);
  CHECK(fit.max_abs_error <= 1e-14);
  const auto& pts = fit.prior.points();
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    const bool atom = std::any_of(std::begin(atoms), std::end(atoms),
                                  [&](double q) { return std::abs(pts[i] - q) < 1e-9; });
    CHECK(fit.prior.weights()[i] == doctest::Approx(atom ? 0.2 : 0.0).epsilon(1e-9));
  }
}

TEST_CASE("reconstruct_prior flags infeasible moments") {
  CHECK_THROWS_AS(reconstruct_prior(moments_of({1, 0.2, 0.5}), 101), InfeasibleMoments);
}
