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
#include "kaclab/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kaclab {

/// Isotropic moment state of the gamma = 0 dynamics.
struct IsotropicState {
  double m2 = 0.0;  ///< E|v|^2, conserved
  double m4 = 0.0;  ///< E|v|^4
  Vector3d mean = Vector3d::Zero();
};

/// Closed-form E|v|^4 for Maxwellian molecules from isotropic zero-mean data:
///   m4(t) = m4* + (m4(0) - m4*) e^(-8t),  m4* = (5/3) m2^2.
double maxwellian_m4_trajectory(double m2, double m4_0, double t);

/// E|v|^p of the centred isotropic Gaussian with E|v|^2 = energy.
double equilibrium_moments(double energy, int p);

struct SelfConvergenceRow {
  Eigen::Index n_small = 0;
  Eigen::Index n_large = 0;
  double t = 0.0;
  double w2 = 0.0;
  double stderr = 0.0;
};

struct SelfConvergenceOptions {
  Eigen::Index subsample = 2048;
  int subsample_seeds = 4;
  unsigned workers = 0;
};

/// W2 between pooled first-marginal samples at t_probe for consecutive entries of n_list.
std::vector<SelfConvergenceRow> self_convergence_table(const SimConfig& config_base,
                                                       const std::vector<Eigen::Index>& n_list, double t_probe,
                                                       const SelfConvergenceOptions& opts = {});

/// Table rows from already pooled samples (pools[k] drawn at N = n_list[k]).
std::vector<SelfConvergenceRow> self_convergence_rows(const std::vector<Eigen::MatrixXd>& pools,
                                                      const std::vector<Eigen::Index>& n_list, double t_probe,
                                                      std::uint64_t seed, const SelfConvergenceOptions& opts = {});

/// Pool the columns of several velocity matrices.
Eigen::MatrixXd pool_samples(const std::vector<Velocities>& groups);

/// Final states of every replica of cfg advanced to time t (t = 0 returns the initial data).
std::vector<Velocities> replicas_at(const SimConfig& cfg, double t, unsigned workers = 0);

void write_self_convergence_csv(const std::string& path, const std::vector<SelfConvergenceRow>& rows);

}  // namespace kaclab
