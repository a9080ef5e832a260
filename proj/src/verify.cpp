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

#include "csv_table.hpp"
#include "kaclab/harness.hpp"
#include "kaclab/inequality_lab.hpp"
#include "kaclab/integrator.hpp"
#include "kaclab/kernels.hpp"
#include "kaclab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>

namespace kaclab {

namespace {

using nlohmann::json;

json check(const std::string& name, std::size_t samples, double worst, double threshold, bool pass) {
  return {{"name", name}, {"samples", samples}, {"worst", worst}, {"threshold", threshold}, {"pass", pass}};
}

json finish(const std::string& suite, json checks) {
  bool pass = true;
  for (const auto& c : checks) pass = pass && c.at("pass").get<bool>();
  return {{"suite", suite}, {"pass", pass}, {"checks", std::move(checks)}};
}

json load_run(const fs::path& dir, const std::string& want_kind, const std::string& how_to_make) {
  const auto instruct = [&](const std::string& why) {
    return InputError(why + ": run `" + how_to_make + "` first and pass its run directory with --run");
  };
  if (dir.empty()) throw instruct("this suite needs a '" + want_kind + "' run directory");
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw instruct(dir.string() + " has no manifest.json");
  std::ifstream in(path);
  const json m = json::parse(in);
  if (m.value("status", "") != "complete") throw instruct(dir.string() + " is not a complete run");
  if (m.value("kind", "") != want_kind) {
    throw instruct(dir.string() + " is a '" + m.value("kind", "") + "' run, not '" + want_kind + "'");
  }
  return m;
}

json kernels_suite() {
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  const std::size_t n = 100000;

  double worst_factor = 0.0, worst_idem = 0.0, worst_anti = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double gamma = u(rng);
    const Vector3d z = Vector3d(g(rng), g(rng), g(rng)) * std::exp(4.0 * (u(rng) - 0.5));
    const auto kv = eval_pair_kernels(z, gamma);
    const double scale = std::max(kv.a_matrix.norm(), std::numeric_limits<double>::min());
    worst_factor = std::max(worst_factor, (kv.sigma_matrix * kv.sigma_matrix.transpose() - kv.a_matrix).norm() / scale);
    const Matrix3d pi = projector(z);
    worst_idem = std::max(worst_idem, (pi * pi - pi).norm());
    const Vector3d xi(g(rng), g(rng), g(rng));
    const auto fwd = pair_increment<double>(z, xi, gamma, 0.01, 0.1);
    const auto bwd = pair_increment<double>(Vector3d(-z), Vector3d(-xi), gamma, 0.01, 0.1);
    worst_anti = std::max({worst_anti, (fwd.drift + bwd.drift).cwiseAbs().maxCoeff(),
                           (fwd.noise + bwd.noise).cwiseAbs().maxCoeff()});
  }

  double worst_povzner = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = 100.0 * u(rng), y = 100.0 * u(rng);
    const double p = 4.0 + 36.0 * u(rng);
    const double gamma = 1.0 - u(rng);  // (0, 1]
    const auto t = povzner_terms(x, y, p, gamma);
    const double scale = std::abs(t.lhs) + std::abs(t.rhs);
    if (scale > 0.0) worst_povzner = std::max(worst_povzner, -t.gap / scale);
  }

  const auto zero = eval_pair_kernels(Vector3d::Zero().eval(), 0.5);
  const bool zero_ok = zero.a_matrix.isZero(0.0) && zero.b_vector.isZero(0.0) && zero.sigma_matrix.isZero(0.0);

  json checks = json::array();
  checks.push_back(check("sigma_sigma_t_equals_a", n, worst_factor, 1e-12, worst_factor <= 1e-12));
  checks.push_back(check("projector_idempotent", n, worst_idem, 1e-12, worst_idem <= 1e-12));
  checks.push_back(check("pair_increment_antisymmetric", n, worst_anti, 0.0, worst_anti == 0.0));
  checks.push_back(check("povzner_gap_nonnegative", n, worst_povzner, 1e-9, worst_povzner <= 1e-9));
  checks.push_back(check("kernels_vanish_at_origin", 1, zero_ok ? 0.0 : 1.0, 0.0, zero_ok));
  return finish("kernels", checks);
}

json inequalities_suite() {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  json checks = json::array();

  std::vector<double> probes;
  for (int k = 1; k <= 50; ++k) probes.push_back(0.2 * k);
  double worst_ode = -std::numeric_limits<double>::infinity();
  std::size_t ode_samples = 0;
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
    const double h0 = 0.1 * std::pow(1e4, u(rng));
    const auto traj = moment_ode_solve(p, h0, probes);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      worst_ode = std::max(worst_ode, traj.values[k] / moment_ode_bound(p, traj.times[k]) - 1.0);
      ++ode_samples;
    }
    if (traj.blew_up) worst_ode = std::numeric_limits<double>::infinity();
  }
  checks.push_back(check("ode_solution_below_comparison_bound", ode_samples, worst_ode, 1e-7, worst_ode <= 1e-7));

  double worst_f1 = -1.0;
  std::size_t f1_samples = 0;
  for (int m = 1; m <= 5; ++m) {
    for (int n = m + 1; n <= 40; ++n) {
      const double gap = std::max(0.0, std::exp(-1.0) - double(m) / n);
      worst_f1 = std::max(worst_f1, hierarchy_weights(m, n - 1, 1.0, 1.0).f - std::exp(-2.0 * n * gap * gap));
      ++f1_samples;
    }
  }
  checks.push_back(check("f_tail_bound", f1_samples, worst_f1, 1e-9, worst_f1 <= 1e-9));

  double worst_f2 = -1.0, worst_g1 = -1.0;
  std::size_t sum_samples = 0;
  for (int m = 1; m <= 5; ++m) {
    const auto table = hierarchy_weight_table(m, 60, 1.0, 1.0);
    double sf = 0.0, sg = 0.0;
    for (std::size_t k = 0; k < table.size(); ++k) {
      sf += table[k].f;
      sg += double(m + int(k)) * table[k].g;
      worst_f2 = std::max(worst_f2, sf - m * (std::exp(1.0) - 1.0));
      worst_g1 = std::max(worst_g1, sg - m * std::exp(1.0));
      ++sum_samples;
    }
  }
  checks.push_back(check("f_partial_sums", sum_samples, worst_f2, 1e-9, worst_f2 <= 1e-9));
  checks.push_back(check("g_partial_sums", sum_samples, worst_g1, 1e-9, worst_g1 <= 1e-9));

  // Ladder against the Yule transition law it solves.
  double worst_ladder = 0.0;
  std::size_t ladder_samples = 0;
  for (int m = 1; m <= 3; ++m) {
    for (int l = m; l <= 5; ++l) {
      const double q = 1.0 - std::exp(-1.0);
      double below = 0.0, pmf_l = 0.0;
      for (int k = m; k <= l; ++k) {
        double binom = 1.0;
        for (int j = 1; j <= m - 1; ++j) binom *= double(k - 1 - (m - 1) + j) / j;
        pmf_l = binom * std::exp(-double(m)) * std::pow(q, k - m);
        below += pmf_l;
      }
      const auto w = hierarchy_weights(m, l, 1.0, 1.0);
      worst_ladder = std::max({worst_ladder, std::abs(w.f - (1.0 - below)), std::abs(w.g - pmf_l)});
      ++ladder_samples;
    }
  }
  checks.push_back(check("ladder_matches_closed_form", ladder_samples, worst_ladder, 1e-6, worst_ladder <= 1e-6));

  const double gamma = 0.5, c = 1.2;
  const auto log_m = [&](double p) {
    return p == 0.0 ? 0.0 : p * std::log(c) + (2.0 + gamma) * (p - 2.0) / 4.0 * std::log(p);
  };
  const double xi_star = exp_series_threshold(c, gamma);
  const auto below = exp_series_log_partial_sums(log_m, 0.5 * xi_star, gamma, 200);
  const auto above = exp_series_log_partial_sums(log_m, 2.0 * xi_star, gamma, 200);
  const double settle = std::abs(below[200] - below[100]);
  const double growth = above[200] - above[100];
  checks.push_back(check("series_converges_below_threshold", 201, settle, 1e-9, settle <= 1e-9));
  checks.push_back(check("series_diverges_above_threshold", 201, -growth, -1.0, growth >= 1.0));

  double worst_u = -std::numeric_limits<double>::infinity();
  std::size_t u_samples = 0;
  for (double a : {1.0, 1.5, 2.5}) {
    for (double T : {0.2, 0.5, 1.0}) {
      for (int m : {1, 2, 3}) {
        HierarchyParams hp;
        hp.a_cutoff = a;
        hp.m = m;
        hp.T = T;
        hp.u0 = 0.05;
        hp.n = int(std::ceil(2.0 * m * std::exp(a * T))) + 3;
        hp.c4 = 1.0;
        worst_u = std::max(worst_u, u_iterated_bound(hp, 0.25) / u_recursion_bound(hp) - 1.0);
        ++u_samples;
      }
    }
  }
  checks.push_back(check("iterated_bound_below_closed_bound", u_samples, worst_u, 1e-9, worst_u <= 1e-9));
  return finish("inequalities", checks);
}

json conservation_suite(const fs::path& run_dir) {
  json checks = json::array();
  if (run_dir.empty()) {
    // Fresh 100-step run.
    SimConfig cfg;
    cfg.gamma = 0.5;
    cfg.n_particles = 64;
    cfg.replicas = 4;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    SimulateOptions opts;
    double worst = 0.0;
    std::size_t samples = 0;
    std::vector<Vector3d> p0(4);
    opts.keep_frames = true;
    const auto res = simulate(cfg, opts);
    for (std::size_t t = 0; t < res.frames.size(); ++t) {
      for (std::size_t r = 0; r < res.frames[t].size(); ++r) {
        const Velocities& v = res.frames[t][r];
        const Vector3d p = v.rowwise().sum();
        if (t == 0) p0[r] = p;
        worst = std::max(worst, (p - p0[r]).norm() / v.colwise().norm().sum());
        ++samples;
      }
    }
    checks.push_back(check("momentum_relative_deviation", samples, worst, 1e-12, worst <= 1e-12));
    return finish("conservation", checks);
  }
  const json m = load_run(run_dir, "simulate", "kaclab simulate <config>");
  const SimConfig cfg = parse_config_text(m.at("config_text").get<std::string>());
  double worst_p = 0.0, worst_e = 0.0;
  std::size_t samples = 0;
  for (int r = 0; r < cfg.replicas; ++r) {
    char name[48];
    std::snprintf(name, sizeof name, "conserved_r%03d.csv", r);
    const auto table = detail::read_csv(run_dir / name);
    const auto& first = table.rows.front();
    // sqrt(N E) bounds sum |v_i| from above, so this is a conservative relative deviation.
    const double scale = std::sqrt(double(cfg.n_particles) * first[4]);
    for (const auto& row : table.rows) {
      worst_p = std::max(worst_p, std::hypot(row[1] - first[1], row[2] - first[2], row[3] - first[3]) / scale);
      worst_e = std::max(worst_e, std::abs(row[4] - first[4]) / first[4]);
      ++samples;
    }
  }
  checks.push_back(check("momentum_relative_deviation", samples, worst_p, 1e-12, worst_p <= 1e-12));
  if (cfg.energy_projection) {
    checks.push_back(check("energy_relative_deviation", samples, worst_e, 1e-12, worst_e <= 1e-12));
  }
  return finish("conservation", checks);
}

json oracle_suite(const fs::path& run_dir) {
  const std::string how = "kaclab simulate <config with gamma = 0, moment_p including 2 and 4>";
  const json m = load_run(run_dir, "simulate", how);
  const SimConfig cfg = parse_config_text(m.at("config_text").get<std::string>());
  if (cfg.gamma != 0.0) throw InputError("the oracle suite needs a gamma = 0 run: run `" + how + "` first");
  const auto table = detail::read_csv(run_dir / "moments.csv");
  const std::size_t ti = table.index("time"), pi = table.index("p"), vi = table.index("moment"),
                    si = table.index("stderr");
  std::map<double, std::map<double, std::pair<double, double>>> by_time;
  for (const auto& row : table.rows) by_time[row[ti]][row[pi]] = {row[vi], row[si]};
  const auto& start = by_time.begin()->second;
  if (!start.count(2.0) || !start.count(4.0)) throw InputError("the oracle suite needs moment_p to include 2 and 4");
  const double m2 = start.at(2.0).first, m4_0 = start.at(4.0).first;

  double worst = 0.0;
  bool pass = true;
  for (const auto& [t, row] : by_time) {
    const auto [value, se] = row.at(4.0);
    const double want = maxwellian_m4_trajectory(m2, m4_0, t);
    const double tol = std::max(0.05 * want, 3.0 * se);
    worst = std::max(worst, std::abs(value - want) / tol);
    pass = pass && std::abs(value - want) <= tol;
  }
  json checks = json::array();
  checks.push_back(check("m4_matches_closed_form", by_time.size(), worst, 1.0, pass));
  return finish("oracle", checks);
}

json chaos_suite(const fs::path& run_dir) {
  load_run(run_dir, "chaos", "kaclab chaos <config with n_list>");
  const auto conv = detail::read_csv(run_dir / "self_convergence.csv");
  const std::size_t wi = conv.index("w2"), si = conv.index("stderr");
  double worst = 0.0;
  for (std::size_t k = 1; k < conv.rows.size(); ++k) {
    const double excess = conv.rows[k][wi] - conv.rows[k - 1][wi];
    const double slack = 3.0 * std::hypot(conv.rows[k][si], conv.rows[k - 1][si]);
    worst = std::max(worst, slack > 0.0 ? excess / slack : (excess > 0.0 ? 1e300 : 0.0));
  }

  const auto cov = detail::read_csv(run_dir / "chaos.csv");
  const std::size_t ni = cov.index("N"), ci = cov.index("cov");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = double(cov.rows.size());
  for (const auto& row : cov.rows) {
    const double x = std::log(row[ni]), y = std::log(std::max(std::abs(row[ci]), 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  json checks = json::array();
  checks.push_back(check("self_convergence_non_increasing", conv.rows.size(), worst, 1.0, worst <= 1.0));
  json slope_check = check("covariance_log_log_slope", cov.rows.size(), std::abs(slope + 1.0), 0.3,
                           std::abs(slope + 1.0) <= 0.3);
  slope_check["slope"] = slope;
  checks.push_back(slope_check);
  return finish("chaos", checks);
}

json stability_suite(const fs::path& run_dir) {
  const json m = load_run(run_dir, "couple", "kaclab couple <config with b_ initial keys>");
  const auto table = detail::read_csv(run_dir / "coupling.csv");
  const std::size_t ti = table.index("time"), mi = table.index("m"), ui = table.index("u_mean"),
                    si = table.index("u_stderr");
  const double r0 = m.at("coupling").at("r0").get<double>();
  const double u0 = m.at("coupling").at("u0").get<double>();

  std::map<double, std::map<int, std::pair<double, double>>> by_time;
  for (const auto& row : table.rows) by_time[row[ti]][int(row[mi])] = {row[ui], row[si]};
  double worst_trivial = 0.0, worst_monotone = 0.0, worst_negative = 0.0;
  for (const auto& [t, row] : by_time) {
    double previous = 0.0;
    for (const auto& [mm, est] : row) {
      worst_trivial = std::max(worst_trivial, est.first - (2.0 * mm * r0 * r0 + 3.0 * est.second));
      worst_monotone = std::max(worst_monotone, previous - est.first);
      worst_negative = std::max(worst_negative, -est.first);
      previous = est.first;
    }
  }
  double worst_start = 0.0;
  for (const auto& [mm, est] : by_time.begin()->second) {
    const double tol = 3.0 * est.second + 1e-9 * mm * u0;
    worst_start = std::max(worst_start, tol > 0.0 ? std::abs(est.first - mm * u0) / tol : 0.0);
  }
  json checks = json::array();
  checks.push_back(check("u_nonnegative", table.rows.size(), worst_negative, 0.0, worst_negative <= 0.0));
  checks.push_back(check("u_non_decreasing_in_m", table.rows.size(), worst_monotone, 0.0, worst_monotone <= 0.0));
  checks.push_back(check("u_below_trivial_bound", table.rows.size(), worst_trivial, 0.0, worst_trivial <= 0.0));
  checks.push_back(check("u_initial_matches_m_u0", by_time.begin()->second.size(), worst_start, 1.0,
                         worst_start <= 1.0));
  return finish("stability", checks);
}

}  // namespace

nlohmann::json verify_suite(const std::string& suite, const fs::path& run_dir) {
  if (suite == "kernels") return kernels_suite();
  if (suite == "inequalities") return inequalities_suite();
  if (suite == "conservation") return conservation_suite(run_dir);
  if (suite == "oracle") return oracle_suite(run_dir);
  if (suite == "chaos") return chaos_suite(run_dir);
  if (suite == "stability") return stability_suite(run_dir);
  std::string names;
  for (const auto& n : verify_suites()) names += (names.empty() ? "" : ", ") + n;
  throw InputError("unknown verify suite '" + suite + "' (allowed: " + names + ")");
}

}  // namespace kaclab
