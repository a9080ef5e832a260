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

#pragma once

#include "kaclab/common.hpp"

#include <functional>
#include <vector>

namespace kaclab {

/// dh/dt = -a h^(1+alpha) + b h + c h^(1-beta).
struct MomentOdeParams {
  double a = 1.0, b = 0.0, c = 0.0;
  double alpha = 1.0, beta = 1.0;
  double p = 0.0, gamma = 0.0, r0 = 0.0;  ///< provenance when built from moment data

  void validate() const;
};

/// Coefficients of the p-th moment inequality for data supported in the r0-ball.
MomentOdeParams moment_ode_params(double p, double gamma, double r0);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<double> values;
  bool blew_up = false;
  double blowup_time = 0.0;
};

/// Adaptive Dormand-Prince integration of log h (error tolerance 1e-10, below the required 1e-8
/// relative); a crossing of 1e300 is located on the dense output and reported as blow-up.
OdeTrajectory moment_ode_solve(const MomentOdeParams& params, double h0, const std::vector<double>& t_grid);

/// (2/(a alpha t))^(1/alpha) + (4b/a)^(1/alpha) + (4c/a)^(1/(alpha+beta)).
double moment_ode_bound(const MomentOdeParams& params, double t);

/// p^(-gamma(2+gamma)/4).
double regime_split_time(double p, double gamma);

/// c^p p^((2+gamma)(p-2)/4).
double polynomial_moment_bound(double p, double gamma, double c_const);
double log_polynomial_moment_bound(double p, double gamma, double c_const);

/// (2+gamma) / (4 e c^(4/(2+gamma))).
double exp_series_threshold(double c_const, double gamma);

/// Logarithms of the partial sums S_K = sum_{n=0}^{K} xi^n m_{p_n} / n!, p_n = 4n/(2+gamma),
/// for K = 0..n_max. log_moment(p) returns log m_p.
std::vector<double> exp_series_log_partial_sums(const std::function<double(double)>& log_moment, double xi,
                                                double gamma, int n_max);

struct HierarchyWeights {
  double f = 0.0;
  double g = 0.0;
};

/// F_m^l(t) and G_m^l(t) from their linear ladders, relative tolerance 1e-10.
HierarchyWeights hierarchy_weights(int m, int l, double a, double t);

/// All F_m^l(t) and G_m^l(t) for l = m..l_max (index l - m).
std::vector<HierarchyWeights> hierarchy_weight_table(int m, int l_max, double a, double t);

struct HierarchyParams {
  double a_cutoff = 1.0;
  int m = 1;
  int n = 2;
  double T = 0.0;
  double u0 = 0.0;
  double c1 = 1.0, c2 = 1.0, c4 = 1.0;
  double eta = 0.5;
  double gamma = 0.5;

  void validate() const;
};

/// Tail factor C2 / exp(C1 a^(4/(gamma^2+2gamma))) shared by the hierarchy bounds.
double cutoff_tail(double a, double c1, double c2, double gamma);

/// u0 m a e^(2aT) + C2 T e^(2aT) m / (a e^(C1 a^(4/(g^2+2g)))) + C4 e^(5aT) / n, for
/// n >= 2 m e^(aT).
double u_recursion_bound(const HierarchyParams& params);

/// Weighted sums before the summation lemmas are applied:
///   e^(aT) u0 sum l G_m^l + C2 T e^(aT) / (a e^(C1 a^...)) sum F_m^l + C3 n e^(aT) F_m^(n-1).
double u_iterated_bound(const HierarchyParams& params, double c3);

/// One Gronwall level: e^(-a(m-1)t) u_m(0)
///   + int_0^t e^(-a(m-1)(t-s)) (C2 m t / e^(C1 a^...) + a m u_{m+1}(s)) ds,
/// evaluated by adaptive Gauss-Kronrod quadrature.
double gronwall_step(int m, double a, double c1, double c2, double gamma, double u_m0,
                     const std::function<double(double)>& u_next, double t);

/// c sqrt(m(1+T)) (sqrt(u0))^(1-eta).
double stability_rhs(int m, double T, double u0, double eta, double c_const);

/// ((1/C1) log(1 + 1/u0))^((gamma^2+2gamma)/4).
double stability_cutoff(double u0, double c1, double gamma);

}  // namespace kaclab
