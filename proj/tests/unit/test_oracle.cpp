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

#include "kaclab/oracle.hpp"

#include "kaclab/ensemble.hpp"
#include "kaclab/integrator.hpp"
#include "kaclab/kernels.hpp"
#include "kaclab/observables.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>

using namespace kaclab;

namespace {

// Radial law of an isotropic density: an integrator over (r, weight) with total mass 1.
using RadialQuadrature = std::function<double(const std::function<double(double)>&)>;

RadialQuadrature uniform_ball() {
  return [](const std::function<double(double)>& g) {
    return boost::math::quadrature::gauss<double, 30>::integrate([&](double r) { return 3.0 * r * r * g(r); }, 0.0,
                                                                  1.0);
  };
}

RadialQuadrature unit_shell() {
  return [](const std::function<double(double)>& g) { return g(1.0); };
}

// Radius uniform on [0, 2], a third isotropic law unrelated to the other two.
RadialQuadrature uniform_radius() {
  return [](const std::function<double(double)>& g) {
    return boost::math::quadrature::gauss<double, 30>::integrate([&](double r) { return 0.5 * g(r); }, 0.0, 2.0);
  };
}

double radial_moment(const RadialQuadrature& law, int p) {
  return law([p](double r) { return std::pow(r, p); });
}

// d/dt E|v|^4 at gamma = 0 from the one-particle generator
//   E_{v,w}[ A(v-w) : D^2 phi(v) + 2 B(v-w) . D phi(v) ],  phi = |v|^4,
// with v = r e_z and w at polar angle acos(c) (isotropy removes the azimuth).
double m4_rate(const RadialQuadrature& law) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  return law([&](double rv) {
    const Eigen::Vector3d v(0.0, 0.0, rv);
    const Eigen::Matrix3d hess = 4.0 * rv * rv * Eigen::Matrix3d::Identity() + 8.0 * v * v.transpose();
    const Eigen::Vector3d grad = 4.0 * rv * rv * v;
    return law([&](double rw) {
      return 0.5 * Gauss::integrate(
                       [&](double c) {
                         const Eigen::Vector3d w(rw * std::sqrt(1.0 - c * c), 0.0, rw * c);
                         const auto k = eval_pair_kernels(Eigen::Vector3d(v - w), 0.0);
                         return k.a_matrix.cwiseProduct(hess).sum() + 2.0 * k.b_vector.dot(grad);
                       },
                       -1.0, 1.0);
    });
  });
}

}  // namespace

TEST_CASE("Maxwellian m4 relaxation rate and equilibrium re-derived from the kernels") {
  // Model dm4/dt = -k (m4 - c m2^2); two isotropic laws fix (k, c), a third cross-checks.
  const RadialQuadrature ball = uniform_ball(), shell = unit_shell(), spread = uniform_radius();
  const double l1 = m4_rate(ball), l2 = m4_rate(shell);
  const double m2a = radial_moment(ball, 2), m4a = radial_moment(ball, 4);
  const double m2b = radial_moment(shell, 2), m4b = radial_moment(shell, 4);
  // l = -k m4 + k c m2^2, linear in (k, k c).
  Eigen::Matrix2d lhs;
  lhs << -m4a, m2a * m2a, -m4b, m2b * m2b;
  const Eigen::Vector2d sol = lhs.fullPivLu().solve(Eigen::Vector2d(l1, l2));
  const double k = sol(0), c = sol(1) / sol(0);
  CHECK(k == doctest::Approx(8.0).epsilon(1e-10));
  CHECK(c == doctest::Approx(5.0 / 3.0).epsilon(1e-10));

  const double m2c = radial_moment(spread, 2), m4c = radial_moment(spread, 4);
  CHECK(m4_rate(spread) == doctest::Approx(-8.0 * (m4c - 5.0 / 3.0 * m2c * m2c)).epsilon(1e-10));

  // The trajectory's derivative at 0 is the generator value.
  const double h = 1e-6;
  const double slope = (maxwellian_m4_trajectory(m2a, m4a, h) - maxwellian_m4_trajectory(m2a, m4a, 0.0)) / h;
  CHECK(slope == doctest::Approx(l1).epsilon(1e-5));
}

TEST_CASE("Maxwellian m4 trajectory") {
  CHECK(maxwellian_m4_trajectory(0.6, 3.0 / 7.0, 0.0) == 3.0 / 7.0);
  CHECK(maxwellian_m4_trajectory(0.6, 3.0 / 7.0, 50.0) == doctest::Approx(0.6));
  // Temperature 1: m2 = 3, equilibrium m4 = 15.
  CHECK(maxwellian_m4_trajectory(3.0, 9.0, 100.0) == doctest::Approx(15.0));
  CHECK(maxwellian_m4_trajectory(3.0, 15.0, 0.7) == doctest::Approx(15.0));
  CHECK_THROWS_AS(maxwellian_m4_trajectory(3.0, 2.9, 0.1), DomainError);
}

TEST_CASE("equilibrium moments") {
  CHECK(equilibrium_moments(2.5, 2) == doctest::Approx(2.5));
  CHECK(equilibrium_moments(3.0, 4) == doctest::Approx(15.0));
  CHECK(equilibrium_moments(3.0, 6) == doctest::Approx(105.0));
  CHECK(equilibrium_moments(1.2, 4) == doctest::Approx(maxwellian_m4_trajectory(1.2, 1.0, 1e3)));
  CHECK_THROWS_AS(equilibrium_moments(1.0, 3), DomainError);
  CHECK_THROWS_AS(equilibrium_moments(1.0, 0), DomainError);
}

TEST_CASE("short Kac run at gamma = 0 follows the m4 oracle") {
  SimConfig cfg;
  cfg.gamma = 0.0;
  cfg.n_particles = 400;
  cfg.replicas = 8;
  cfg.dt = 0.01;
  cfg.horizon = 0.3;
  cfg.energy_projection = true;
  cfg.log_stride = 10;
  const auto res = simulate(cfg);
  const double m2 = polynomial_moment(res.frames.front(), 2.0).value;
  const double m4_0 = polynomial_moment(res.frames.front(), 4.0).value;
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    const auto est = polynomial_moment(res.frames[k], 4.0);
    const double want = maxwellian_m4_trajectory(m2, m4_0, res.times[k]);
    CHECK(std::abs(est.value - want) <= std::max(0.05 * want, 3.0 * est.stderr));
  }
}

TEST_CASE("replicas at time zero and pooling") {
  SimConfig cfg;
  cfg.n_particles = 16;
  cfg.replicas = 3;
  const auto init = replicas_at(cfg, 0.0);
  REQUIRE(init.size() == 3);
  CHECK(init[1] == sample_initial(cfg.initial, 16, cfg.seed, cfg.gamma, 1).velocities);
  const auto pooled = pool_samples(init);
  CHECK(pooled.cols() == 48);
  CHECK(pooled.middleCols(32, 16) == init[2]);
}

TEST_CASE("self-convergence table") {
  SimConfig cfg;
  cfg.gamma = 0.5;
  cfg.replicas = 4;
  cfg.dt = 0.01;
  SelfConvergenceOptions opts;
  opts.subsample = 128;
  opts.subsample_seeds = 3;
  const auto same = self_convergence_table(cfg, {64, 64}, 0.1, opts);
  REQUIRE(same.size() == 1);
  CHECK(same[0].w2 == 0.0);
  CHECK(same[0].stderr == 0.0);

  const auto rows = self_convergence_table(cfg, {32, 64, 128}, 0.1, opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_small == 32);
  CHECK(rows[1].n_large == 128);
  for (const auto& r : rows) CHECK(r.w2 > 0.0);
  CHECK_THROWS_AS(self_convergence_table(cfg, {64}, 0.1, opts), DomainError);
  CHECK_THROWS_AS(self_convergence_table(cfg, {64, 32}, 0.1, opts), DomainError);

  const auto path = (std::filesystem::temp_directory_path() / "kaclab_selfconv_test.csv").string();
  write_self_convergence_csv(path, rows);
  std::ifstream in(path);
  std::string header, columns;
  std::getline(in, header);
  std::getline(in, columns);
  CHECK(header.rfind("#", 0) == 0);
  CHECK(columns == "N_small,N_large,t,w2,stderr");
  std::filesystem::remove(path);
}
