// Copyright 2026 The kaclab Authors
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

#include "kaclab/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace kaclab;

namespace {

double rel_frobenius(const Matrix3d& x, const Matrix3d& y) {
  const double scale = std::max(x.norm(), y.norm());
  return scale == 0.0 ? 0.0 : (x - y).norm() / scale;
}

}  // namespace

TEST_CASE("unit vector along x at gamma 1") {
  const auto k = eval_pair_kernels(Vector3d(1, 0, 0), 1.0);
  CHECK(rel_frobenius(k.a_matrix, Vector3d(0, 1, 1).asDiagonal().toDenseMatrix()) < 1e-15);
  CHECK((k.b_vector - Vector3d(-2, 0, 0)).norm() < 1e-15);
  CHECK(rel_frobenius(k.sigma_matrix, Vector3d(0, 1, 1).asDiagonal().toDenseMatrix()) < 1e-15);
}

TEST_CASE("kernels vanish at the origin") {
  const auto k = eval_pair_kernels(Vector3d::Zero().eval(), 0.5);
  CHECK(k.a_matrix.isZero(0.0));
  CHECK(k.b_vector.isZero(0.0));
  CHECK(k.sigma_matrix.isZero(0.0));
}

TEST_CASE("z = (0,2,0), gamma 0.5 against scalar arithmetic") {
  // |z| = 2: A = 2^(2.5) diag(1,0,1), B = -2 z 2^0.5, sigma = 2^(1.25) diag(1,0,1).
  const double a = std::pow(2.0, 2.5);
  const double s = std::pow(2.0, 1.25);
  const auto k = eval_pair_kernels(Vector3d(0, 2, 0), 0.5);
  CHECK(k.a_matrix(0, 0) == doctest::Approx(a).epsilon(1e-14));
  CHECK(k.a_matrix(2, 2) == doctest::Approx(a).epsilon(1e-14));
  CHECK(std::abs(k.a_matrix(1, 1)) < 1e-14);
  CHECK(k.b_vector(1) == doctest::Approx(-4.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(k.sigma_matrix(0, 0) == doctest::Approx(s).epsilon(1e-14));
  CHECK(k.a_matrix(0, 0) == doctest::Approx(5.656854).epsilon(1e-6));
  CHECK(k.sigma_matrix(2, 2) == doctest::Approx(2.378414).epsilon(1e-6));
}

TEST_CASE("input validation") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(eval_pair_kernels(Vector3d(nan, 0, 0), 0.5), InputError);
  CHECK_THROWS_AS(eval_pair_kernels(Vector3d(1, 0, 0), 1.5), DomainError);
  CHECK_THROWS_AS(eval_pair_kernels(Vector3d(1, 0, 0), -0.1), DomainError);
}

TEST_CASE("projector, square root and parity over random samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> box(-10.0, 10.0), unit(0.0, 1.0);
  double worst_root = 0.0, worst_idem = 0.0, worst_parity = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const Vector3d z(box(rng), box(rng), box(rng));
    const double gamma = unit(rng);
    const auto kv = eval_pair_kernels(z, gamma);
    const auto km = eval_pair_kernels(Vector3d(-z), gamma);
    const Matrix3d pi = projector(z);
    worst_idem = std::max(worst_idem, (pi * pi - pi).norm());
    worst_root = std::max(worst_root, rel_frobenius(kv.sigma_matrix * kv.sigma_matrix.transpose(), kv.a_matrix));
    worst_parity = std::max({worst_parity, rel_frobenius(kv.a_matrix, km.a_matrix),
                             rel_frobenius(kv.sigma_matrix, km.sigma_matrix),
                             (kv.b_vector + km.b_vector).norm() / kv.b_vector.norm()});
    const Eigen::SelfAdjointEigenSolver<Matrix3d> eig(kv.a_matrix);
    REQUIRE(eig.eigenvalues().minCoeff() >= -1e-12 * kv.a_matrix.norm());
    REQUIRE((kv.a_matrix * z).norm() <= 1e-12 * kv.a_matrix.norm() * z.norm());
  }
  CHECK(worst_idem < 1e-12);
  CHECK(worst_root < 1e-12);
  CHECK(worst_parity <= 1e-15);
}

TEST_CASE("pair increments are exactly antisymmetric") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int k = 0; k < 10000; ++k) {
    const Vector3d z(g(rng), g(rng), g(rng));
    const Vector3d xi(g(rng), g(rng), g(rng));
    const auto p = pair_increment<double>(z, xi, 0.7, 0.013, 0.21);
    const auto q = pair_increment<double>(Vector3d(-z), Vector3d(-xi), 0.7, 0.013, 0.21);
    REQUIRE((p.drift + q.drift).isZero(0.0));
    REQUIRE((p.noise + q.noise).isZero(0.0));
  }
}

TEST_CASE("Povzner gap examples") {
  CHECK(povzner_gap(0.0, 0.0, 6.0, 0.3) == 0.0);
  const auto t = povzner_terms(1.0, 0.0, 4.0, 1.0);
  CHECK(t.lhs == doctest::Approx(-1.0));
  CHECK(t.rhs == doctest::Approx(-0.5));
  CHECK(t.gap == doctest::Approx(0.5));
  // |x-y| = 0 kills the left side; right side -1 + 2 + 2 * 4^1.5.
  CHECK(povzner_gap(1.0, 1.0, 4.0, 1.0) == doctest::Approx(17.0));
}

TEST_CASE("Povzner domain and overflow handling") {
  CHECK_THROWS_AS(povzner_gap(-1.0, 1.0, 4.0, 0.5), DomainError);
  CHECK_THROWS_AS(povzner_gap(1.0, 1.0, 3.0, 0.5), DomainError);
  CHECK_THROWS_AS(povzner_gap(1.0, 1.0, 4.0, 0.0), DomainError);
  CHECK_THROWS_AS(povzner_gap(1e200, 1.0, 40.0, 1.0), OverflowError);
  // Homogeneity of degree p + gamma carries through the rescaled branch.
  const double g1 = povzner_gap(2.0, 3.0, 5.0, 0.5);
  const double g2 = povzner_gap(2e3, 3e3, 5.0, 0.5);
  CHECK(g2 == doctest::Approx(g1 * std::pow(1e3, 5.5)).epsilon(1e-12));
}

TEST_CASE("Povzner inequality over random samples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> xs(0.0, 100.0), ps(4.0, 40.0), gs(0.0, 1.0);
  int violations = 0;
  for (int k = 0; k < 200000; ++k) {
    double gamma = gs(rng);
    if (gamma == 0.0) gamma = 1.0;
    const auto t = povzner_terms(xs(rng), xs(rng), ps(rng), gamma);
    if (t.gap < -1e-9 * (1.0 + std::abs(t.rhs))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("kernel modulus ratios") {
  const auto same = kernel_modulus_ratio(Vector3d(1, 2, 3), Vector3d(1, 2, 3), 0.5);
  CHECK(same.ratio_b == 0.0);
  CHECK(same.ratio_sigma == 0.0);
  // |B(x) - B(y)| = |(-2,0,0) - (2,0,0)| = 4 over |x - y| (|x| + |y|) = 2 * 2.
  CHECK(kernel_modulus_ratio(Vector3d(1, 0, 0), Vector3d(-1, 0, 0), 1.0).ratio_b == doctest::Approx(1.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> box(-100.0, 100.0);
  double max_b = 0.0, max_s = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    const Vector3d x(box(rng), box(rng), box(rng));
    const Vector3d y(box(rng), box(rng), box(rng));
    const auto r = kernel_modulus_ratio(x, y, 0.5);
    max_b = std::max(max_b, r.ratio_b);
    max_s = std::max(max_s, r.ratio_sigma);
  }
  MESSAGE("empirical C_B = " << max_b << ", C_sigma = " << max_s);
  CHECK(std::isfinite(max_b));
  CHECK(max_b <= 8.0);
  CHECK(max_s <= 8.0);
}
