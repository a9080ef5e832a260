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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace kaclab {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kBlowUp = 1e300;

double cutoff_exponent(double gamma) { return 4.0 / (gamma * gamma + 2.0 * gamma); }

}  // namespace

void MomentOdeParams::validate() const {
  if (!(a >= 0.0 && b >= 0.0 && c >= 0.0)) throw DomainError("moment ODE: a, b, c must be >= 0");
  if (!(alpha > 0.0 && beta > 0.0)) throw DomainError("moment ODE: alpha and beta must be > 0");
}

MomentOdeParams moment_ode_params(double p, double gamma, double r0) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("moment_ode_params: gamma must lie in (0, 1]");
  if (!(p > 4.0 - gamma)) throw DomainError("moment_ode_params: p must exceed 4 - gamma");
  if (!(r0 > 0.0)) throw DomainError("moment_ode_params: r0 must be > 0");
  MomentOdeParams out;
  out.a = p;
  out.b = 2.0 * p * std::pow(r0, gamma);
  out.c = 2.0 * r0 * r0 * std::pow(p, 2.0 + gamma / 2.0);
  out.alpha = gamma / (p - 2.0);
  out.beta = (2.0 - gamma) / (p - 2.0);
  out.p = p;
  out.gamma = gamma;
  out.r0 = r0;
  return out;
}

OdeTrajectory moment_ode_solve(const MomentOdeParams& params, double h0, const std::vector<double>& t_grid) {
  params.validate();
  if (!(h0 > 0.0)) throw DomainError("moment_ode_solve: h0 must be > 0");
  if (t_grid.empty()) throw DomainError("moment_ode_solve: empty time grid");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0) || (k > 0 && !(t_grid[k] > t_grid[k - 1]))) {
      throw DomainError("moment_ode_solve: time grid must be non-negative and strictly increasing");
    }
  }
  std::vector<double> grid;
  const bool prepend = t_grid.front() > 0.0;
  if (prepend) grid.push_back(0.0);
  grid.insert(grid.end(), t_grid.begin(), t_grid.end());

  // Integrated in y = log h so that trial stages near blow-up stay representable.
  using State = std::array<double, 1>;
  auto capped_exp = [](double x) { return std::exp(std::min(x, 700.0)); };
  auto rhs = [&](const State& y, State& dydt, double) {
    dydt[0] = -params.a * capped_exp(params.alpha * y[0]) + params.b + params.c * capped_exp(-params.beta * y[0]);
  };
  const double log_cap = std::log(kBlowUp);

  OdeTrajectory out;
  auto record = [&](std::size_t k, double y) {
    if (k >= (prepend ? 1u : 0u)) {
      out.times.push_back(grid[k]);
      out.values.push_back(std::exp(y));
    }
  };
  auto stepper = odeint::make_dense_output(1e-10, 1e-10, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(State{std::log(h0)}, 0.0, 1e-6);
  std::size_t next = 0;
  State probe{};
  while (next < grid.size()) {
    if (grid[next] == 0.0) {
      record(next++, std::log(h0));
      continue;
    }
    const auto [t0, t1] = stepper.do_step(rhs);
    if (stepper.current_state()[0] > log_cap || !std::isfinite(stepper.current_state()[0])) {
      // Locate the crossing on the dense-output interpolant.
      double lo = t0, hi = t1;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, probe);
        (probe[0] > log_cap ? hi : lo) = mid;
      }
      for (; next < grid.size() && grid[next] <= lo; ++next) {
        stepper.calc_state(grid[next], probe);
        record(next, probe[0]);
      }
      out.blew_up = true;
      out.blowup_time = 0.5 * (lo + hi);
      break;
    }
    for (; next < grid.size() && grid[next] <= t1; ++next) {
      stepper.calc_state(grid[next], probe);
      record(next, probe[0]);
    }
  }
  return out;
}

double moment_ode_bound(const MomentOdeParams& params, double t) {
  params.validate();
  if (!(t > 0.0)) throw DomainError("moment_ode_bound: t must be > 0");
  const double a = params.a;
  const double inf = std::numeric_limits<double>::infinity();
  if (a == 0.0) return inf;
  auto power = [](double base, double expo) { return base <= 0.0 ? 0.0 : std::exp(expo * std::log(base)); };
  return power(2.0 / (a * params.alpha * t), 1.0 / params.alpha) + power(4.0 * params.b / a, 1.0 / params.alpha) +
         power(4.0 * params.c / a, 1.0 / (params.alpha + params.beta));
}

double regime_split_time(double p, double gamma) {
  if (!(p >= 4.0)) throw DomainError("regime_split_time: p must be >= 4");
  return std::pow(p, -gamma * (2.0 + gamma) / 4.0);
}

double log_polynomial_moment_bound(double p, double gamma, double c_const) {
  if (!(p >= 4.0)) throw DomainError("polynomial_moment_bound: p must be >= 4");
  if (!(c_const >= 0.0)) throw DomainError("polynomial_moment_bound: c must be >= 0");
  if (c_const == 0.0) return -std::numeric_limits<double>::infinity();
  return p * std::log(c_const) + (2.0 + gamma) * (p - 2.0) / 4.0 * std::log(p);
}

double polynomial_moment_bound(double p, double gamma, double c_const) {
  return std::exp(log_polynomial_moment_bound(p, gamma, c_const));
}

double exp_series_threshold(double c_const, double gamma) {
  if (!(c_const > 0.0)) throw DomainError("exp_series_threshold: c must be > 0");
  return (2.0 + gamma) / (4.0 * std::numbers::e * std::pow(c_const, 4.0 / (2.0 + gamma)));
}

std::vector<double> exp_series_log_partial_sums(const std::function<double(double)>& log_moment, double xi,
                                                double gamma, int n_max) {
  if (!(xi > 0.0)) throw DomainError("exp_series_log_partial_sums: xi must be > 0");
  if (n_max < 0) throw DomainError("exp_series_log_partial_sums: n_max must be >= 0");
  const double beta = 4.0 / (2.0 + gamma);
  std::vector<double> out;
  double acc = -std::numeric_limits<double>::infinity();
  for (int n = 0; n <= n_max; ++n) {
    const double term = n * std::log(xi) + log_moment(beta * n) - std::lgamma(n + 1.0);
    const double hi = std::max(acc, term);
    acc = hi + std::log(std::exp(acc - hi) + std::exp(term - hi));
    out.push_back(acc);
  }
  return out;
}

HierarchyWeights hierarchy_weights(int m, int l, double a, double t) {
  if (m < 1) throw DomainError("hierarchy_weights: m must be >= 1");
  if (l < m) throw DomainError("hierarchy_weights: l must be >= m");
  if (!(a > 0.0)) throw DomainError("hierarchy_weights: a must be > 0");
  if (!(t >= 0.0)) throw DomainError("hierarchy_weights: t must be >= 0");
  const std::size_t len = std::size_t(l - m + 1);
  // state[0..len): F_m..F_l with F_{l+1} = 1; state[len..2len): G_m..G_l with G_{l+1} = 0.
  std::vector<double> x(2 * len, 0.0);
  x[2 * len - 1] = 1.0;
  if (t > 0.0) {
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds, double) {
      for (std::size_t k = 0; k < len; ++k) {
        const double rate = a * double(m + int(k));
        const double f_next = k + 1 < len ? s[k + 1] : 1.0;
        const double g_next = k + 1 < len ? s[len + k + 1] : 0.0;
        ds[k] = rate * (f_next - s[k]);
        ds[len + k] = rate * (g_next - s[len + k]);
      }
    };
    odeint::integrate_adaptive(odeint::make_controlled(1e-15, 1e-10, odeint::runge_kutta_dopri5<std::vector<double>>()),
                               rhs, x, 0.0, t, std::min(1e-3, t));
  }
  return {x[0], x[len]};
}

std::vector<HierarchyWeights> hierarchy_weight_table(int m, int l_max, double a, double t) {
  std::vector<HierarchyWeights> out;
  for (int l = m; l <= l_max; ++l) out.push_back(hierarchy_weights(m, l, a, t));
  return out;
}

void HierarchyParams::validate() const {
  if (!(a_cutoff > 0.0)) throw DomainError("hierarchy: a_cutoff must be > 0");
  if (m < 1 || n < m) throw DomainError("hierarchy: need 1 <= m <= n");
  if (!(T >= 0.0)) throw DomainError("hierarchy: T must be >= 0");
  if (!(u0 >= 0.0)) throw DomainError("hierarchy: u0 must be >= 0");
  if (!(c1 > 0.0 && c2 > 0.0 && c4 > 0.0)) throw DomainError("hierarchy: constants must be > 0");
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("hierarchy: eta must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("hierarchy: gamma must lie in (0, 1]");
}

double cutoff_tail(double a, double c1, double c2, double gamma) {
  return c2 * std::exp(-c1 * std::pow(a, cutoff_exponent(gamma)));
}

double u_recursion_bound(const HierarchyParams& params) {
  params.validate();
  const double a = params.a_cutoff;
  const double need = 2.0 * params.m * std::exp(a * params.T);
  if (double(params.n) < need) {
    throw DomainError("u_recursion_bound: requires n >= 2 m e^(aT) (n=" + std::to_string(params.n) +
                      ", 2 m e^(aT)=" + std::to_string(need) + ")");
  }
  const double e2 = std::exp(2.0 * a * params.T);
  return params.u0 * params.m * a * e2 +
         params.T * e2 * params.m * cutoff_tail(a, params.c1, params.c2, params.gamma) / a +
         params.c4 * std::exp(5.0 * a * params.T) / double(params.n);
}

double u_iterated_bound(const HierarchyParams& params, double c3) {
  params.validate();
  if (params.n - 1 < params.m) throw DomainError("u_iterated_bound: need n - 1 >= m");
  const double a = params.a_cutoff;
  const auto table = hierarchy_weight_table(params.m, params.n - 1, a, params.T);
  double sum_lg = 0.0, sum_f = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    sum_lg += double(params.m + int(k)) * table[k].g;
    sum_f += table[k].f;
  }
  const double e1 = std::exp(a * params.T);
  return e1 * params.u0 * sum_lg + params.T * e1 * cutoff_tail(a, params.c1, params.c2, params.gamma) / a * sum_f +
         c3 * params.n * e1 * table.back().f;
}

double gronwall_step(int m, double a, double c1, double c2, double gamma, double u_m0,
                     const std::function<double(double)>& u_next, double t) {
  if (m < 1) throw DomainError("gronwall_step: m must be >= 1");
  if (!(t >= 0.0)) throw DomainError("gronwall_step: t must be >= 0");
  const double decay = a * double(m - 1);
  const double source = c2 * m * t * std::exp(-c1 * std::pow(a, cutoff_exponent(gamma)));
  const double integral =
      t == 0.0 ? 0.0
               : boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                     [&](double s) { return std::exp(-decay * (t - s)) * (source + a * m * u_next(s)); }, 0.0, t, 15,
                     1e-13);
  return std::exp(-decay * t) * u_m0 + integral;
}

double stability_rhs(int m, double T, double u0, double eta, double c_const) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("stability_rhs: eta must lie in (0, 1)");
  if (m < 1 || !(T >= 0.0) || !(u0 >= 0.0)) throw DomainError("stability_rhs: need m >= 1, T >= 0, u0 >= 0");
  return c_const * std::sqrt(m * (1.0 + T)) * std::pow(std::sqrt(u0), 1.0 - eta);
}

double stability_cutoff(double u0, double c1, double gamma) {
  if (!(u0 > 0.0)) throw DomainError("stability_cutoff: u0 must be > 0");
  if (!(c1 > 0.0)) throw DomainError("stability_cutoff: C1 must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("stability_cutoff: gamma must lie in (0, 1]");
  return std::pow(std::log1p(1.0 / u0) / c1, (gamma * gamma + 2.0 * gamma) / 4.0);
}

}  // namespace kaclab
