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

#include "kaclab/observables.hpp"

#include "kaclab/ensemble.hpp"
#include "kaclab/integrator.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace kaclab;

namespace {

ReplicaSamples ball_replicas(int replicas, Eigen::Index n, std::uint64_t seed = 1) {
  InitialSpec spec;
  ReplicaSamples out;
  for (int r = 0; r < replicas; ++r) out.push_back(sample_initial(spec, n, seed, 0.5, std::uint64_t(r)).velocities);
  return out;
}

SimulationResult run(double gamma, Eigen::Index n, int replicas, double horizon, bool projection, double dt = 0.01) {
  SimConfig cfg;
  cfg.gamma = gamma;
  cfg.n_particles = n;
  cfg.replicas = replicas;
  cfg.horizon = horizon;
  cfg.dt = dt;
  cfg.energy_projection = projection;
  cfg.log_stride = 5;
  return simulate(cfg);
}

}  // namespace

TEST_CASE("polynomial moments") {
  const ReplicaSamples zeros{Velocities::Zero(3, 10)};
  CHECK(polynomial_moment(zeros, 4.0).value == 0.0);
  CHECK_THROWS_AS(polynomial_moment(ReplicaSamples{Velocities(3, 0)}, 4.0), DomainError);
  // E|v|^4 over the unit ball = 3/7.
  const auto est = polynomial_moment(ball_replicas(20, 5000), 4.0);
  CHECK(std::abs(est.value - 3.0 / 7.0) <= 3.0 * est.stderr);
  CHECK(est.stderr > 0.0);
}

TEST_CASE("Jensen ordering and relabelling invariance") {
  auto samples = ball_replicas(8, 500);
  double previous = 0.0;
  for (double p : {2.0, 3.0, 4.0, 6.0, 8.0}) {
    const double root = std::pow(polynomial_moment(samples, p).value, 1.0 / p);
    CHECK(root >= previous);
    previous = root;
  }
  ReplicaSamples reversed = samples;
  for (auto& r : reversed) r = r.rowwise().reverse().eval();
  CHECK(polynomial_moment(reversed, 4.0).value == doctest::Approx(polynomial_moment(samples, 4.0).value).epsilon(1e-12));
  CHECK(exponential_moment(reversed, {0.3, 0.5}).value ==
        doctest::Approx(exponential_moment(samples, {0.3, 0.5}).value).epsilon(1e-12));
}

TEST_CASE("second moment is frozen under energy projection") {
  const auto res = run(0.5, 64, 4, 0.3, true);
  const double m2_0 = polynomial_moment(res.frames.front(), 2.0).value;
  for (const auto& frame : res.frames) CHECK(std::abs(polynomial_moment(frame, 2.0).value - m2_0) <= 1e-12 * m2_0);
}

TEST_CASE("exponential moments") {
  const ReplicaSamples zeros{Velocities::Zero(3, 10)};
  CHECK(exponential_moment(zeros, {0.4, 0.5}).value == 1.0);
  const auto ball = ball_replicas(4, 1000);
  for (double xi : {0.1, 1.0, 3.0}) CHECK(exponential_moment(ball, {xi, 0.5}).value <= std::exp(xi));
  CHECK(std::abs(exponential_moment(ball, {1e-8, 0.5}).value - 1.0) <= 1e-6);
  CHECK_THROWS_AS(exponential_moment(ball, {0.0, 0.5}), DomainError);

  Velocities far = Velocities::Zero(3, 200);
  far(0, 0) = 1e4;
  const auto big = exponential_moment(ReplicaSamples{far}, {1.0, 0.0});
  CHECK(big.overflow);
  CHECK(std::isfinite(big.log_value));
  CHECK(big.log_value == doctest::Approx(1e4 * 1e4 - std::log(200.0)).epsilon(1e-12));
  CHECK(big.tail_flag);
  CHECK_FALSE(exponential_moment(ball, {0.1, 0.5}).tail_flag);
}

TEST_CASE("kNN entropy against closed forms") {
  const Eigen::Index n = 100000;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  Eigen::MatrixXd gauss(3, n);
  for (Eigen::Index i = 0; i < n; ++i) gauss.col(i) = Eigen::Vector3d(g(rng), g(rng), g(rng));
  const double h_gauss = 1.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  CHECK(std::abs(knn_entropy(gauss, 4) - h_gauss) < 0.05);

  InitialSpec ball;
  const Eigen::MatrixXd unit = sample_initial(ball, n, 4).velocities;
  const double h_ball = std::log(4.0 * std::numbers::pi / 3.0);
  const double h_unit = knn_entropy(unit, 4);
  CHECK(std::abs(h_unit - h_ball) < 0.05);
  CHECK(std::abs(knn_entropy(Eigen::MatrixXd(2.0 * unit), 4) - h_unit - 3.0 * std::log(2.0)) < 0.05);

  Eigen::MatrixXd dup = unit.leftCols(1000);
  dup.col(1) = dup.col(0);
  CHECK(std::isfinite(knn_entropy(dup, 1)));
  CHECK_THROWS_AS(knn_entropy(unit.leftCols(4), 4), DomainError);
}

TEST_CASE("chaos covariance") {
  CHECK_THROWS_AS(chaos_covariance(ball_replicas(7, 10), ChaosStatistic::kSpeedSquared), DomainError);
  const auto iid = chaos_covariance(ball_replicas(64, 64), ChaosStatistic::kSpeedSquared);
  CHECK(std::abs(iid.value) <= 3.0 * iid.stderr);
  const auto iid_x = chaos_covariance(ball_replicas(64, 64), ChaosStatistic::kComponentX);
  CHECK(std::abs(iid_x.value) <= 3.0 * iid_x.stderr);

  // Mirrored pairs v_{2k+1} = -v_{2k}: Cov(v_1x, v_2x) = -Var(v_x) = -r0^2/5.
  ReplicaSamples mirrored = ball_replicas(256, 2);
  for (auto& r : mirrored) r.col(1) = -r.col(0);
  const auto anti = chaos_covariance(mirrored, ChaosStatistic::kComponentX);
  CHECK(std::abs(anti.value + 0.2) <= 4.0 * anti.stderr);
  CHECK(anti.value < -5.0 * anti.stderr);
}

TEST_CASE("weak hierarchy residual: exact cases") {
  const auto res = run(0.5, 32, 4, 0.2, true);
  const ConstantFunction one;
  for (auto mode : {HierarchyMode::kFiniteN, HierarchyMode::kHierarchyLimit}) {
    for (int m : {1, 2, 5}) {
      const auto r = bbgky_residual(res.frames, res.times, 0.5, one, {m, mode, 8});
      CHECK(r.value == 0.0);
      CHECK(r.stderr == 0.0);
    }
  }
  const KineticEnergy energy;
  const auto full = bbgky_residual(res.frames, res.times, 0.5, energy, {32, HierarchyMode::kFiniteN, 0});
  CHECK(std::abs(full.value) <= 1e-10);
  CHECK_THROWS_AS(bbgky_residual(res.frames, res.times, 0.5, BumpProduct({Vector3d::Zero()}, 0.5),
                                 {2, HierarchyMode::kFiniteN, 8}),
                  DomainError);
}

TEST_CASE("bump test-function derivatives match finite differences") {
  const BumpProduct phi({Vector3d(0.1, -0.2, 0.3), Vector3d(-0.4, 0.0, 0.2)}, 0.7);
  Velocities v(3, 2);
  v << 0.3, -0.1, 0.2, 0.4, -0.5, 0.1;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (int c = 0; c < 3; ++c) {
      Velocities vp = v, vm = v;
      vp(c, i) += h;
      vm(c, i) -= h;
      CHECK(phi.gradient(v, i)(c) == doctest::Approx((phi.value(vp) - phi.value(vm)) / (2 * h)).epsilon(1e-7));
      for (Eigen::Index j = 0; j < 2; ++j) {
        const Vector3d dg = (phi.gradient(vp, j) - phi.gradient(vm, j)) / (2 * h);
        for (int d = 0; d < 3; ++d) CHECK(phi.hessian(v, j, i)(d, c) == doctest::Approx(dg(d)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("weak hierarchy residual is statistically small for a bump") {
  const auto res = run(0.5, 128, 32, 0.2, false, 0.005);
  const BumpProduct phi({Vector3d(0.2, 0, 0)}, 0.5);
  const auto r = bbgky_residual(res.frames, res.times, 0.5, phi, {1, HierarchyMode::kFiniteN, 16});
  MESSAGE("residual " << r.value << " +- " << r.stderr);
  CHECK(std::abs(r.value) <= 4.0 * r.stderr + 0.01);
}

TEST_CASE("moment growth exponent") {
  std::vector<double> ps{4, 6, 8, 10, 12};
  std::vector<double> m;
  for (double p : ps) m.push_back(std::pow(p, 0.6 * p));
  CHECK(moment_growth_exponent(ps, m) == doctest::Approx(0.6).epsilon(1e-12));
  m.clear();
  for (double p : ps) m.push_back(std::pow(1.3 * std::pow(p, 0.75), p));
  CHECK(moment_growth_exponent(ps, m) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(moment_growth_exponent({4, 6, 8}, {1, 2, 3}), DomainError);
  CHECK_THROWS_AS(moment_growth_exponent(ps, {1, 2, 0, 4, 5}), DomainError);
}

TEST_CASE("Mann-Kendall trend test") {
  std::vector<double> up;
  for (int k = 0; k < 20; ++k) up.push_back(k + 0.1 * std::sin(k));
  CHECK(mann_kendall(up).p_increasing < 1e-6);
  std::vector<double> down(up.rbegin(), up.rend());
  CHECK(mann_kendall(down).p_increasing > 0.99);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> flat;
  for (int k = 0; k < 20; ++k) flat.push_back(g(rng));
  CHECK(mann_kendall(flat).p_two_sided > 0.01);
  CHECK(mann_kendall({1, 1, 1, 1}).s == 0.0);
}

TEST_CASE("moment report and CSV layout") {
  SimConfig cfg;
  cfg.n_particles = 32;
  cfg.replicas = 8;
  cfg.horizon = 0.05;
  cfg.exp_moment_xi = {0.1};
  cfg.entropy_neighbors = 4;
  cfg.chaos_statistic = ChaosStatistic::kSpeedSquared;
  const auto res = simulate(cfg);
  const auto rep = moment_report(res.times, res.frames, cfg);
  CHECK(rep.moments.size() == res.times.size());
  CHECK(rep.entropy.size() == res.times.size());
  CHECK(rep.chaos_cov.size() == res.times.size());
  CHECK(rep.exp_moments.front().front().value > 1.0);
}
