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

#include "kaclab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

namespace kaclab {

namespace {

std::vector<Eigen::Index> brute_force_pairing(const Cloud& a, const Cloud& b) {
  const Eigen::Index k = a.cols();
  const Eigen::MatrixXd cost = squared_distance_matrix(a, b);
  std::vector<Eigen::Index> perm(k);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::vector<Eigen::Index> best = perm;
  double best_cost = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) best_cost += cost(i, i);
  while (std::next_permutation(perm.begin(), perm.end())) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) c += cost(i, perm[i]);
    if (c < best_cost - 1e-12 * (1.0 + best_cost)) {
      best_cost = c;
      best = perm;
    }
  }
  return best;
}

std::vector<Eigen::Index> projected_pairing(const Cloud& a, const Cloud& b) {
  Eigen::VectorXd axis = b.rowwise().mean() - a.rowwise().mean();
  if (axis.norm() == 0.0) {
    axis = Eigen::VectorXd::Zero(a.rows());
    axis(0) = 1.0;
  }
  const Eigen::VectorXd pa = a.transpose() * axis;
  const Eigen::VectorXd pb = b.transpose() * axis;
  std::vector<Eigen::Index> ia(a.cols()), ib(b.cols());
  std::iota(ia.begin(), ia.end(), Eigen::Index{0});
  std::iota(ib.begin(), ib.end(), Eigen::Index{0});
  std::stable_sort(ia.begin(), ia.end(), [&](auto x, auto y) { return pa(x) < pa(y); });
  std::stable_sort(ib.begin(), ib.end(), [&](auto x, auto y) { return pb(x) < pb(y); });
  std::vector<Eigen::Index> perm(a.cols());
  for (std::size_t r = 0; r < ia.size(); ++r) perm[ia[r]] = ib[r];
  return perm;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size() - 1) / double(xs.size()));
}

}  // namespace

std::vector<Eigen::Index> optimal_pairing(const Cloud& a, const Cloud& b) {
  if (a.cols() != b.cols()) {
    throw DomainError("optimal_pairing: unequal counts (" + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.cols()) + ")");
  }
  if (a.cols() < 1) throw DomainError("optimal_pairing: need at least one point");
  if (a.rows() != b.rows()) throw DomainError("optimal_pairing: dimension mismatch");
  if (a.cols() <= kBruteForcePairing) return brute_force_pairing(a, b);
  if (a.cols() <= kExactW2Cap) return solve_assignment(squared_distance_matrix(a, b)).perm;
  return projected_pairing(a, b);
}

CoupledPair make_coupled_pair(const SimConfig& cfg, const InitialSpec& spec_a, const InitialSpec& spec_b,
                              std::uint64_t replica) {
  CoupledPair pair;
  pair.a = sample_initial(spec_a, cfg.n_particles, cfg.seed, cfg.gamma, replica);
  const Ensemble raw_b = sample_initial(spec_b, cfg.n_particles, cfg.seed, cfg.gamma, replica);
  pair.pairing = optimal_pairing(pair.a.velocities, raw_b.velocities);
  pair.b = raw_b;
  for (Eigen::Index i = 0; i < pair.a.size(); ++i) pair.b.velocities.col(i) = raw_b.velocities.col(pair.pairing[i]);
  pair.shared_seed = pair.a.lineage;
  pair.b.lineage = pair.a.lineage;
  return pair;
}

void advance_coupled(CoupledPair& pair, const StepOptions& opts, int max_halvings) {
  const auto seed = pair.shared_seed.seed;
  const auto replica = pair.shared_seed.replica;
  const auto step_index = std::uint32_t(pair.a.step);
  std::function<void(double, int, std::uint32_t)> sub = [&](double dt, int depth, std::uint32_t index) {
    StepOptions local = opts;
    local.dt = dt;
    const std::uint32_t substream = depth == 0 ? 0u : ((std::uint32_t(depth) << 24) | index);
    const PairNoise noise(seed, replica, step_index, substream);
    try {
      Ensemble na = step(pair.a, local, noise);
      Ensemble nb = step(pair.b, local, noise);
      pair.a = std::move(na);
      pair.b = std::move(nb);
    } catch (const StepRejected&) {
      if (depth >= max_halvings) throw;
      sub(dt / 2, depth + 1, 2 * index);
      sub(dt / 2, depth + 1, 2 * index + 1);
    }
  };
  sub(opts.dt, 0, 0);
  for (Ensemble* e : {&pair.a, &pair.b}) {
    e->step += 1;
    e->time = double(e->step) * opts.dt;
  }
}

CouplingReport coupled_simulate(const SimConfig& cfg, const InitialSpec& spec_a, const InitialSpec& spec_b,
                                const std::vector<int>& m_list, unsigned workers) {
  cfg.validate();
  spec_a.validate();
  spec_b.validate();
  for (int m : m_list) {
    if (m < 1 || m > cfg.n_particles) throw DomainError("coupled_simulate: m_list entries must lie in 1 .. N");
  }
  const auto steps = logged_steps(cfg);
  const std::size_t nt = steps.size();
  const std::size_t nm = m_list.size();
  const std::size_t replicas = std::size_t(cfg.replicas);
  const StepOptions opts = step_options(cfg);
  if (workers == 0) workers = default_workers();

  // per_replica[r][m index][time], pair_per_replica[r][time]
  std::vector<std::vector<std::vector<double>>> per_replica(replicas,
                                                            std::vector<std::vector<double>>(nm, std::vector<double>(nt)));
  std::vector<std::vector<double>> pair_per_replica(replicas, std::vector<double>(nt));

  parallel_for(replicas, workers, [&](std::size_t r) {
    CoupledPair pair = make_coupled_pair(cfg, spec_a, spec_b, r);
    auto record = [&](std::size_t ti) {
      const Eigen::VectorXd d2 = (pair.a.velocities - pair.b.velocities).colwise().squaredNorm().transpose();
      for (std::size_t k = 0; k < nm; ++k) per_replica[r][k][ti] = d2.head(m_list[k]).sum();
      pair_per_replica[r][ti] = d2.mean();
    };
    record(0);
    for (std::size_t ti = 1; ti < nt; ++ti) {
      while (pair.a.step < steps[ti]) advance_coupled(pair, opts);
      record(ti);
    }
  });

  CouplingReport rep;
  rep.m_list = m_list;
  rep.replicas = cfg.replicas;
  rep.r0 = std::max(spec_a.r0 + (spec_a.mixture_weight < 1.0 ? spec_a.offset.norm() : 0.0),
                    spec_b.r0 + (spec_b.mixture_weight < 1.0 ? spec_b.offset.norm() : 0.0));
  for (auto s : steps) rep.times.push_back(double(s) * cfg.dt);
  rep.u_mean.assign(nm, std::vector<double>(nt));
  rep.u_stderr.assign(nm, std::vector<double>(nt));
  rep.pair_mean.resize(nt);
  rep.pair_stderr.resize(nt);
  std::vector<double> column(replicas);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t k = 0; k < nm; ++k) {
      for (std::size_t r = 0; r < replicas; ++r) column[r] = per_replica[r][k][ti];
      rep.u_mean[k][ti] = mean_of(column);
      rep.u_stderr[k][ti] = stderr_of(column);
    }
    for (std::size_t r = 0; r < replicas; ++r) column[r] = pair_per_replica[r][ti];
    rep.pair_mean[ti] = mean_of(column);
    rep.pair_stderr[ti] = stderr_of(column);
  }
  rep.u0 = rep.pair_mean.front();
  rep.u0_stderr = rep.pair_stderr.front();
  return rep;
}

double u_statistic(const CouplingReport& report, int m, double t) {
  const auto mi = std::find(report.m_list.begin(), report.m_list.end(), m);
  if (mi == report.m_list.end()) throw DomainError("u_statistic: m=" + std::to_string(m) + " was not tracked");
  for (std::size_t ti = 0; ti < report.times.size(); ++ti) {
    if (std::abs(report.times[ti] - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
      return report.u_mean[std::size_t(mi - report.m_list.begin())][ti];
    }
  }
  throw DomainError("u_statistic: t=" + std::to_string(t) + " is not a logged time");
}

void write_coupling_csv(const std::string& path, const CouplingReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "# kaclab-csv v1 coupling\n");
  std::fprintf(f, "time,m,u_mean,u_stderr\n");
  for (std::size_t ti = 0; ti < report.times.size(); ++ti) {
    for (std::size_t k = 0; k < report.m_list.size(); ++k) {
      std::fprintf(f, "%.17g,%d,%.17g,%.17g\n", report.times[ti], report.m_list[k], report.u_mean[k][ti],
                   report.u_stderr[k][ti]);
    }
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path);
}

}  // namespace kaclab
