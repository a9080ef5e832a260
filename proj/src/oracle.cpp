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

#include "kaclab/integrator.hpp"
#include "kaclab/transport.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace kaclab {

double maxwellian_m4_trajectory(double m2, double m4_0, double t) {
  if (!(m2 >= 0.0)) throw DomainError("maxwellian_m4_trajectory: m2 must be >= 0");
  if (m4_0 < m2 * m2 / 3.0) throw DomainError("maxwellian_m4_trajectory: m4(0) < m2^2/3 is not physical");
  if (!(t >= 0.0)) throw DomainError("maxwellian_m4_trajectory: t must be >= 0");
  const double m4_eq = 5.0 / 3.0 * m2 * m2;
  return m4_eq + (m4_0 - m4_eq) * std::exp(-8.0 * t);
}

double equilibrium_moments(double energy, int p) {
  if (p < 2 || p % 2 != 0) throw DomainError("equilibrium_moments: p must be an even integer >= 2");
  if (!(energy >= 0.0)) throw DomainError("equilibrium_moments: energy must be >= 0");
  double double_factorial = 1.0;
  for (int k = p + 1; k > 1; k -= 2) double_factorial *= k;
  return std::pow(energy / 3.0, p / 2) * double_factorial;
}

Eigen::MatrixXd pool_samples(const std::vector<Velocities>& groups) {
  Eigen::Index total = 0;
  for (const auto& g : groups) total += g.cols();
  Eigen::MatrixXd out(3, total);
  Eigen::Index c = 0;
  for (const auto& g : groups) {
    out.middleCols(c, g.cols()) = g;
    c += g.cols();
  }
  return out;
}

std::vector<Velocities> replicas_at(const SimConfig& cfg, double t, unsigned workers) {
  std::vector<Velocities> out;
  if (t == 0.0) {
    for (int r = 0; r < cfg.replicas; ++r) {
      out.push_back(sample_initial(cfg.initial, cfg.n_particles, cfg.seed, cfg.gamma, std::uint64_t(r)).velocities);
    }
    return out;
  }
  SimConfig c = cfg;
  c.horizon = t;
  c.log_stride = std::max<int>(1, int(c.total_steps()));
  SimulateOptions opts;
  opts.keep_frames = false;
  opts.workers = workers;
  const auto result = simulate(c, opts);
  for (const auto& e : result.finals) out.push_back(e.velocities);
  return out;
}

std::vector<SelfConvergenceRow> self_convergence_table(const SimConfig& config_base,
                                                       const std::vector<Eigen::Index>& n_list, double t_probe,
                                                       const SelfConvergenceOptions& opts) {
  if (n_list.size() < 2) throw DomainError("self_convergence_table: need at least two N values");
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    if (n_list[k] < n_list[k - 1]) throw DomainError("self_convergence_table: n_list must be non-decreasing");
  }
  if (!(t_probe >= 0.0)) throw DomainError("self_convergence_table: t_probe must be >= 0");
  if (opts.subsample_seeds < 1) throw DomainError("self_convergence_table: need at least one subsample seed");

  std::vector<Eigen::MatrixXd> pools;
  for (auto n : n_list) {
    SimConfig c = config_base;
    c.n_particles = n;
    pools.push_back(pool_samples(replicas_at(c, t_probe, opts.workers)));
  }
  return self_convergence_rows(pools, n_list, t_probe, config_base.seed, opts);
}

std::vector<SelfConvergenceRow> self_convergence_rows(const std::vector<Eigen::MatrixXd>& pools,
                                                      const std::vector<Eigen::Index>& n_list, double t_probe,
                                                      std::uint64_t seed, const SelfConvergenceOptions& opts) {
  if (pools.size() != n_list.size()) throw DomainError("self_convergence_rows: one pool per N value required");
  if (opts.subsample_seeds < 1) throw DomainError("self_convergence_rows: need at least one subsample seed");
  std::vector<SelfConvergenceRow> rows;
  for (std::size_t k = 0; k + 1 < n_list.size(); ++k) {
    const Eigen::Index size = std::min({opts.subsample, pools[k].cols(), pools[k + 1].cols()});
    std::vector<double> w(std::size_t(opts.subsample_seeds));
    for (int s = 0; s < opts.subsample_seeds; ++s) {
      const auto lane = std::uint64_t(s);
      w[std::size_t(s)] = w2_exact(subsample(pools[k], size, seed, lane),
                                   subsample(pools[k + 1], size, seed, lane));
    }
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / double(w.size());
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    const double se = w.size() > 1 ? std::sqrt(var / double(w.size() - 1) / double(w.size())) : 0.0;
    rows.push_back({n_list[k], n_list[k + 1], t_probe, mean, se});
  }
  return rows;
}

void write_self_convergence_csv(const std::string& path, const std::vector<SelfConvergenceRow>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "# kaclab-csv v1 self_convergence\n");
  std::fprintf(f, "N_small,N_large,t,w2,stderr\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%lld,%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(r.n_small),
                 static_cast<long long>(r.n_large), r.t, r.w2, r.stderr);
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path);
}

}  // namespace kaclab
