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

#include "kaclab/inequality_lab.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace kaclab;

namespace {

// Iterated-integral definitions evaluated by nested fixed-order Gauss-Legendre quadrature:
//   W_k(t) = a k int_0^t e^{-a k (t-s)} W_{k+1}(s) ds,
// terminated by F_{l+1} = 1 or G_l = e^{-a l t}.
double nested_weight(int k, int l, double a, double t, bool is_f) {
  if (is_f && k == l + 1) return 1.0;
  if (!is_f && k == l) return std::exp(-a * l * t);
  if (t == 0.0) return 0.0;
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  return a * k * Gauss::integrate([&](double s) { return std::exp(-a * k * (t - s)) * nested_weight(k + 1, l, a, s, is_f); },
                                  0.0, t);
}

// Transition probabilities of a Yule process with per-individual rate a.
double yule_pmf(int m, int l, double a, double t) {
  return boost::math::binomial_coefficient<double>(unsigned(l - 1), unsigned(m - 1)) * std::exp(-a * m * t) *
         std::pow(1.0 - std::exp(-a * t), l - m);
}

double yule_tail(int m, int l, double a, double t) {
  double below = 0.0;
  for (int k = m; k <= l; ++k) below += yule_pmf(m, k, a, t);
  return 1.0 - below;
}

std::vector<double> probe_times() {
  std::vector<double> ts;
  for (int k = 1; k <= 50; ++k) ts.push_back(0.2 * k);
  return ts;
}

}  // namespace

TEST_CASE("moment ODE closed forms") {
  MomentOdeParams riccati;
  riccati.a = 1.0;
  riccati.alpha = 1.0;
  const auto r = moment_ode_solve(riccati, 10.0, {0.5, 1.0});
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[1] == doctest::Approx(1.0 / 1.1).epsilon(1e-7));
  CHECK(r.values[0] == doctest::Approx(1.0 / 0.6).epsilon(1e-7));
  CHECK(r.times.front() == 0.5);

  MomentOdeParams linear;
  linear.a = 0.0;
  linear.b = 0.7;
  const auto e = moment_ode_solve(linear, 2.0, {0.0, 1.0, 3.0});
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    CHECK(e.values[k] == doctest::Approx(2.0 * std::exp(0.7 * e.times[k])).epsilon(1e-7));
  }

  MomentOdeParams explode;
  explode.a = 0.0;
  explode.b = 1000.0;
  const auto bl = moment_ode_solve(explode, 1.0, {0.5, 1.0});
  CHECK(bl.blew_up);
  CHECK(bl.blowup_time == doctest::Approx(std::log(1e300) / 1000.0).epsilon(0.01));

  CHECK_THROWS_AS(moment_ode_solve(riccati, 0.0, {1.0}), DomainError);
  CHECK_THROWS_AS(moment_ode_solve(riccati, 1.0, {1.0, 0.5}), DomainError);
}

TEST_CASE("moment ODE parameters from moment data") {
  const auto p = moment_ode_params(6.0, 0.5, 1.0);
  CHECK(p.a == 6.0);
  CHECK(p.b == doctest::Approx(12.0));
  CHECK(p.c == doctest::Approx(2.0 * std::pow(6.0, 2.25)));
  CHECK(p.alpha == doctest::Approx(0.125));
  CHECK(p.beta == doctest::Approx(0.375));
  CHECK_THROWS_AS(moment_ode_params(3.4, 0.5, 1.0), DomainError);

  const auto traj = moment_ode_solve(p, 1.0, probe_times());
  CHECK_FALSE(traj.blew_up);
  for (std::size_t k = 0; k < traj.times.size(); ++k) CHECK(traj.values[k] <= moment_ode_bound(p, traj.times[k]));
}

TEST_CASE("moment ODE bound: plug-in and comparison property") {
  MomentOdeParams simple;
  simple.a = 1.0;
  simple.alpha = 1.0;
  CHECK(moment_ode_bound(simple, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(moment_ode_bound(simple, 0.0), DomainError);
  MomentOdeParams tiny_alpha = simple;
  tiny_alpha.alpha = 0.01;
  CHECK(moment_ode_bound(tiny_alpha, 1.0) > moment_ode_bound(tiny_alpha, 2.0));

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MomentOdeParams p;
    if (trial % 2 == 0) {
      p = moment_ode_params(4.5 + 15.0 * u(rng), 0.1 + 0.9 * u(rng), 0.5 + 1.5 * u(rng));
    } else {
      p.a = 0.1 + 9.9 * u(rng);
      p.b = 5.0 * u(rng);
      p.c = 5.0 * u(rng);
      p.alpha = 0.05 + 1.95 * u(rng);
      p.beta = 0.05 + 1.95 * u(rng);
    }
    const double h0 = std::exp(std::log(0.1) + u(rng) * std::log(1e4));
    const auto traj = moment_ode_solve(p, h0, probe_times());
    REQUIRE_FALSE(traj.blew_up);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.values[k] > moment_ode_bound(p, traj.times[k]) * (1.0 + 1e-7)) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("regime split, polynomial bound, series threshold") {
  CHECK(regime_split_time(4.0, 1.0) == doctest::Approx(std::pow(4.0, -0.75)));
  CHECK(regime_split_time(7.0, 0.0) == 1.0);
  CHECK(regime_split_time(8.0, 0.5) < regime_split_time(6.0, 0.5));
  CHECK_THROWS_AS(regime_split_time(3.0, 0.5), DomainError);

  CHECK(polynomial_moment_bound(4.0, 1.0, 1.0) == doctest::Approx(8.0));
  CHECK(polynomial_moment_bound(4.0, 1.0, 0.0) == 0.0);
  CHECK(std::isfinite(log_polynomial_moment_bound(1e6, 1.0, 2.0)));
  // gamma = 0: c^p p^((p-2)/2); the Maxwellian moment (p+1)!!/3^(p/2) (energy 1) grows like p^(p/2) too.
  CHECK(polynomial_moment_bound(6.0, 0.0, 1.0) == doctest::Approx(36.0));

  CHECK(exp_series_threshold(1.0, 1.0) == doctest::Approx(3.0 / (4.0 * std::numbers::e)));
  CHECK(exp_series_threshold(2.0, 0.5) < exp_series_threshold(1.5, 0.5));
  CHECK_THROWS_AS(exp_series_threshold(0.0, 0.5), DomainError);
}

TEST_CASE("exponential series converges below the threshold and diverges above") {
  const double gamma = 0.5, c = 1.2;
  const auto log_m = [&](double p) {
    return p == 0.0 ? 0.0 : p * std::log(c) + (2.0 + gamma) * (p - 2.0) / 4.0 * std::log(p);
  };
  const double xi_star = exp_series_threshold(c, gamma);
  const auto below = exp_series_log_partial_sums(log_m, 0.5 * xi_star, gamma, 200);
  const auto above = exp_series_log_partial_sums(log_m, 2.0 * xi_star, gamma, 200);
  CHECK(std::abs(below[200] - below[100]) < 1e-12);
  CHECK(std::isfinite(below[200]));
  CHECK(above[200] - above[100] > 50.0);
  for (std::size_t k = 1; k < above.size(); ++k) CHECK(above[k] >= above[k - 1]);
}

TEST_CASE("hierarchy weights: spec examples") {
  const auto w11 = hierarchy_weights(1, 1, 1.0, 1.0);
  CHECK(w11.f == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));
  CHECK(w11.g == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(hierarchy_weights(1, 2, 1.0, 1.0).f == doctest::Approx(std::pow(1.0 - std::exp(-1.0), 2)).epsilon(1e-9));
  CHECK(hierarchy_weights(2, 3, 1.5, 0.0).f == 0.0);
  CHECK(hierarchy_weights(3, 3, 1.5, 0.0).g == 1.0);
  CHECK_THROWS_AS(hierarchy_weights(3, 2, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(hierarchy_weights(1, 2, 0.0, 1.0), DomainError);
}

TEST_CASE("hierarchy weights agree with nested quadrature and the Yule closed form") {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double t : {0.3, 1.0}) {
      for (int m = 1; m <= 3; ++m) {
        for (int l = m; l <= 5; ++l) {
          const auto w = hierarchy_weights(m, l, a, t);
          CHECK(w.f == doctest::Approx(nested_weight(m, l, a, t, true)).epsilon(1e-6));
          CHECK(w.g == doctest::Approx(nested_weight(m, l, a, t, false)).epsilon(1e-6));
          CHECK(w.f == doctest::Approx(yule_tail(m, l, a, t)).epsilon(1e-8));
          CHECK(w.g == doctest::Approx(yule_pmf(m, l, a, t)).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("F and G summation bounds") {
  // F1: F_m^{n-1}(T) <= exp(-2n (e^{-aT} - m/n)_+^2), a = T = 1.
  double worst_f1 = -1.0;
  for (int m = 1; m <= 5; ++m) {
    for (int n = m + 1; n <= 40; ++n) {
      const double lhs = hierarchy_weights(m, n - 1, 1.0, 1.0).f;
      const double gap = std::max(0.0, std::exp(-1.0) - double(m) / n);
      worst_f1 = std::max(worst_f1, lhs - std::exp(-2.0 * n * gap * gap));
    }
  }
  CHECK(worst_f1 <= 1e-9);

  for (double a : {0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0}) {
      for (int m = 1; m <= 5; ++m) {
        const auto table = hierarchy_weight_table(m, 60, a, t);
        double sum_f = 0.0, sum_lg = 0.0;
        for (std::size_t k = 0; k < table.size(); ++k) {
          sum_f += table[k].f;
          sum_lg += double(m + int(k)) * table[k].g;
          CHECK(sum_f <= m * (std::exp(a * t) - 1.0) + 1e-9);
          if (a >= 1.0) CHECK(sum_lg <= m * a * std::exp(a * t) + 1e-9);
        }
      }
    }
  }
  // The full sum of l G_m^l is exactly m e^{at}; the G bound with factor a is violated once a < 1.
  const auto table = hierarchy_weight_table(1, 200, 0.5, 1.0);
  double sum_lg = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) sum_lg += double(1 + k) * table[k].g;
  CHECK(sum_lg == doctest::Approx(std::exp(0.5)).epsilon(1e-8));
  CHECK(sum_lg > 0.5 * std::exp(0.5));
}

TEST_CASE("u recursion bound") {
  HierarchyParams p;
  p.m = 2;
  p.n = 10;
  p.T = 0.0;
  p.u0 = 0.3;
  p.a_cutoff = 1.5;
  p.c4 = 2.0;
  CHECK(u_recursion_bound(p) == doctest::Approx(0.3 * 2 * 1.5 + 2.0 / 10));
  p.u0 = 0.0;
  CHECK(u_recursion_bound(p) == doctest::Approx(0.2));
  p.u0 = 0.1;
  p.T = 0.5;
  double prev = 1e300;
  for (int n : {9, 10, 100, 1000}) {
    p.n = n;
    const double b = u_recursion_bound(p);
    CHECK(b < prev);
    prev = b;
  }
  p.n = 4;
  try {
    u_recursion_bound(p);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("n >= 2 m e^(aT)") != std::string::npos);
  }
  p.eta = 1.0;
  p.n = 100;
  CHECK_THROWS_AS(u_recursion_bound(p), DomainError);
}

TEST_CASE("iterated bound is dominated by the closed bound") {
  for (double a : {1.0, 1.5, 2.5}) {
    for (double T : {0.2, 0.5, 1.0}) {
      for (int m : {1, 2, 3}) {
        HierarchyParams p;
        p.a_cutoff = a;
        p.m = m;
        p.T = T;
        p.u0 = 0.05;
        p.n = int(std::ceil(2.0 * m * std::exp(a * T))) + 3;
        const double c3 = 0.25;
        p.c4 = 4.0 * c3;
        CHECK(u_iterated_bound(p, c3) <= u_recursion_bound(p) * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("Gronwall step reproduces the closed-form integral") {
  const int m = 2;
  const double a = 1.0, c1 = 1.0, c2 = 1.0, gamma = 0.5, u0 = 0.4;
  for (double t : {0.0, 0.3, 1.0, 2.0}) {
    const double source = c2 * m * t * std::exp(-c1 * std::pow(a, 4.0 / (gamma * gamma + 2.0 * gamma)));
    // decay a(m-1) = 1, u_{m+1}(s) = s^2.
    const double expected = std::exp(-t) * u0 + source * (1.0 - std::exp(-t)) +
                            a * m * (t * t - 2.0 * t + 2.0 - 2.0 * std::exp(-t));
    const double got = gronwall_step(m, a, c1, c2, gamma, u0, [](double s) { return s * s; }, t);
    CHECK(got == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("stability right-hand side and cut-off") {
  CHECK(stability_rhs(1, 1.0, 0.0, 0.1, 3.0) == 0.0);
  CHECK(stability_rhs(1, 0.0, 0.25, 1e-12, 2.0) == doctest::Approx(2.0 * 0.5).epsilon(1e-10));
  CHECK(stability_rhs(4, 1.0, 0.1, 0.3, 1.0) ==
        doctest::Approx(std::sqrt(2.0) * stability_rhs(2, 1.0, 0.1, 0.3, 1.0)));
  CHECK_THROWS_AS(stability_rhs(1, 1.0, 0.1, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(stability_rhs(1, 1.0, 0.1, 0.0, 1.0), DomainError);
  CHECK(stability_cutoff(0.01, 2.0, 0.5) == doctest::Approx(std::pow(std::log(101.0) / 2.0, 0.3125)));
  CHECK(stability_cutoff(1e-4, 1.0, 0.5) > stability_cutoff(1e-2, 1.0, 0.5));
  CHECK(cutoff_tail(1.0, 1.0, 2.0, 1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
}
