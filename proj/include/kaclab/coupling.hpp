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

#include "kaclab/config.hpp"
#include "kaclab/ensemble.hpp"
#include "kaclab/integrator.hpp"
#include "kaclab/transport.hpp"

#include <string>
#include <vector>

namespace kaclab {

/// Largest size for which optimal_pairing enumerates every permutation.
inline constexpr Eigen::Index kBruteForcePairing = 8;

/// Permutation pi minimising sum_i |a_i - b_pi(i)|^2. Exhaustive in lexicographic order
/// (first minimiser wins) up to kBruteForcePairing points, the exact assignment solver up to
/// kExactW2Cap, and sorted projection along the mean displacement beyond that.
std::vector<Eigen::Index> optimal_pairing(const Cloud& a, const Cloud& b);

/// Two Kac systems driven by the same pair noise; b has been relabelled so that b_i is the
/// initial partner of a_i.
struct CoupledPair {
  Ensemble a;
  Ensemble b;
  std::vector<Eigen::Index> pairing;  ///< original b index paired with a_i at t = 0
  SeedLineage shared_seed;
};

CoupledPair make_coupled_pair(const SimConfig& cfg, const InitialSpec& spec_a, const InitialSpec& spec_b,
                              std::uint64_t replica);

/// One synchronous step of both families. A rejected step halves dt for both.
void advance_coupled(CoupledPair& pair, const StepOptions& opts, int max_halvings = 8);

struct CouplingReport {
  std::vector<double> times;
  std::vector<int> m_list;
  std::vector<std::vector<double>> u_mean;    ///< [m index][time]
  std::vector<std::vector<double>> u_stderr;  ///< [m index][time]
  /// Exchangeable estimator of u_1: per-pair squared distance averaged over all N pairs
  /// and all replicas.
  std::vector<double> pair_mean;
  std::vector<double> pair_stderr;
  double u0 = 0.0;
  double u0_stderr = 0.0;
  int replicas = 0;
  double r0 = 0.0;  ///< larger of the two support radii, for the trivial bound
};

CouplingReport coupled_simulate(const SimConfig& cfg, const InitialSpec& spec_a, const InitialSpec& spec_b,
                                const std::vector<int>& m_list, unsigned workers = 0);

/// u_m at a logged time (matched to 1e-9 relative).
double u_statistic(const CouplingReport& report, int m, double t);

void write_coupling_csv(const std::string& path, const CouplingReport& report);

}  // namespace kaclab
