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

#include "kaclab/harness.hpp"

#include "csv_table.hpp"
#include "kaclab/coupling.hpp"
#include "kaclab/integrator.hpp"
#include "kaclab/observables.hpp"
#include "kaclab/oracle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#ifndef KACLAB_VERSION
#define KACLAB_VERSION "unknown"
#endif

namespace kaclab {

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

std::string utc_stamp(const char* format) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, format, &tm);
  return buf;
}

std::string replica_tag(std::uint64_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%03llu", static_cast<unsigned long long>(r));
  return buf;
}

void check_stop(const fs::path& dir) {
  if (stop_requested()) throw Interrupted(dir);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// Stored snapshots of one replica, plus its final state when the stride did not land on it.
void write_replica_snapshots(RunDirectory& run, const TrajectoryLog& log, const Ensemble& final_state) {
  fs::create_directories(run.file("snapshots"));
  auto store = [&](const Ensemble& e) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/%s_s%09llu.kacl", replica_tag(e.replica_id).c_str(),
                  static_cast<unsigned long long>(e.step));
    write_snapshot(run.file(name).string(), e);
    run.manifest()["snapshots"].push_back(
        {{"replica", e.replica_id}, {"step", e.step}, {"time", e.time}, {"file", std::string(name)}});
  };
  for (const auto& s : log.snapshots) store(s);
  if (log.snapshots.empty() || log.snapshots.back().step != final_state.step) store(final_state);
}

void write_conserved(RunDirectory& run, const TrajectoryLog& log) {
  write_conserved_csv(run.file("conserved_" + replica_tag(log.replica) + ".csv").string(), log);
}

void write_diagnostics_csv(const fs::path& path, const MomentReport& rep) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  std::fprintf(f, "# kaclab-csv v1 diagnostics\n");
  std::fprintf(f, "time,entropy,chaos_cov,chaos_stderr\n");
  const double nan = std::nan("");
  for (std::size_t t = 0; t < rep.times.size(); ++t) {
    const double h = rep.entropy.empty() ? nan : rep.entropy[t];
    const double c = rep.chaos_cov.empty() ? nan : rep.chaos_cov[t].value;
    const double s = rep.chaos_cov.empty() ? nan : rep.chaos_cov[t].stderr;
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", rep.times[t], h, c, s);
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path.string());
}

const char* statistic_name(ChaosStatistic s) {
  switch (s) {
    case ChaosStatistic::kComponentX:
      return "component_x";
    case ChaosStatistic::kSpeedSquared:
    case ChaosStatistic::kNone:
      break;
  }
  return "speed_sq";
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string() + " for checksumming");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), std::size_t(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

std::string code_version() { return KACLAB_VERSION; }

void request_stop() noexcept { g_stop.store(true); }
void clear_stop_request() noexcept { g_stop.store(false); }
bool stop_requested() noexcept { return g_stop.load(); }

void install_interrupt_handler() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

RunDirectory::RunDirectory(const SimConfig& cfg, const std::string& kind) {
  cfg.validate();
  const fs::path base(cfg.output_dir);
  fs::create_directories(base);
  const std::string stem = cfg.run_name + "_" + utc_stamp("%Y%m%dT%H%M%SZ");
  dir_ = base / stem;
  for (int suffix = 1; !fs::create_directory(dir_); ++suffix) dir_ = base / (stem + "_" + std::to_string(suffix));

  const std::string text = config_to_text(cfg);
  {
    std::ofstream out(dir_ / "config.txt");
    out << text;
    if (!out) throw IoError("cannot write " + (dir_ / "config.txt").string());
  }
  nlohmann::json seeds = nlohmann::json::array();
  for (int r = 0; r < cfg.replicas; ++r) seeds.push_back({{"replica", r}, {"seed", cfg.seed}, {"noise_lane", r}});
  manifest_ = {{"schema", "kaclab-manifest v1"},
               {"kind", kind},
               {"status", "incomplete"},
               {"code_version", code_version()},
               {"start_time", utc_stamp("%Y-%m-%dT%H:%M:%SZ")},
               {"config", config_to_json(cfg)},
               {"config_text", text},
               {"replica_seeds", seeds},
               {"snapshots", nlohmann::json::array()}};
  write_manifest("incomplete");
}

void RunDirectory::write_manifest(const std::string& status) {
  manifest_["status"] = status;
  if (status == "complete") manifest_["end_time"] = utc_stamp("%Y-%m-%dT%H:%M:%SZ");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir_);
    if (rel == "manifest.json" || rel == "manifest.json.tmp") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  nlohmann::json inventory = nlohmann::json::array();
  for (const auto& rel : files) {
    inventory.push_back({{"path", rel.generic_string()},
                         {"sha256", sha256_file(dir_ / rel)},
                         {"bytes", fs::file_size(dir_ / rel)}});
  }
  manifest_["files"] = inventory;
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << manifest_.dump(2) << '\n';
    if (!out) throw IoError("cannot write manifest in " + dir_.string());
  }
  fs::rename(tmp, dir_ / "manifest.json");
}

fs::path run_simulation(const SimConfig& cfg, unsigned workers) {
  RunDirectory run(cfg, "simulate");
  SimulateOptions opts;
  opts.workers = workers;
  opts.observer = [&](const Ensemble&, std::size_t) { check_stop(run.path()); };
  SimulationResult res;
  try {
    res = simulate(cfg, opts);
  } catch (const Interrupted&) {
    run.write_manifest("incomplete");
    throw;
  }
  for (std::size_t r = 0; r < res.logs.size(); ++r) {
    write_conserved(run, res.logs[r]);
    write_replica_snapshots(run, res.logs[r], res.finals[r]);
  }
  const MomentReport rep = moment_report(res.times, res.frames, cfg);
  write_moment_csv(run.file("moments.csv").string(), rep);
  if (!cfg.exp_moment_xi.empty()) write_exp_moment_csv(run.file("exp_moments.csv").string(), rep);
  if (!rep.entropy.empty() || !rep.chaos_cov.empty()) write_diagnostics_csv(run.file("diagnostics.csv"), rep);
  run.finish();
  return run.path();
}

fs::path run_coupling(const SimConfig& cfg, unsigned workers) {
  RunDirectory run(cfg, "couple");
  check_stop(run.path());
  const CouplingReport rep = coupled_simulate(cfg, cfg.initial, cfg.initial_b, cfg.m_list, workers);
  write_coupling_csv(run.file("coupling.csv").string(), rep);
  std::FILE* f = std::fopen(run.file("coupling_pair.csv").c_str(), "w");
  if (!f) throw IoError("cannot write coupling_pair.csv");
  std::fprintf(f, "# kaclab-csv v1 coupling_pair\n");
  std::fprintf(f, "time,pair_mean,pair_stderr\n");
  for (std::size_t t = 0; t < rep.times.size(); ++t) {
    std::fprintf(f, "%.17g,%.17g,%.17g\n", rep.times[t], rep.pair_mean[t], rep.pair_stderr[t]);
  }
  if (std::fclose(f) != 0) throw IoError("write failed for coupling_pair.csv");
  run.manifest()["coupling"] = {{"u0", rep.u0}, {"u0_stderr", rep.u0_stderr}, {"r0", rep.r0}, {"replicas", rep.replicas}};
  run.finish();
  return run.path();
}

fs::path run_chaos(const SimConfig& cfg, unsigned workers) {
  if (cfg.n_list.size() < 2) throw InputError("n_list: chaos runs need at least two particle counts");
  RunDirectory run(cfg, "chaos");
  const ChaosStatistic stat =
      cfg.chaos_statistic == ChaosStatistic::kNone ? ChaosStatistic::kSpeedSquared : cfg.chaos_statistic;
  std::vector<Eigen::MatrixXd> pools;
  std::vector<Estimate> covs;
  try {
    for (auto n : cfg.n_list) {
      check_stop(run.path());
      SimConfig c = cfg;
      c.n_particles = n;
      const auto finals = replicas_at(c, cfg.t_probe, workers);
      covs.push_back(chaos_covariance(finals, stat));
      pools.push_back(pool_samples(finals));
    }
  } catch (const Interrupted&) {
    run.write_manifest("incomplete");
    throw;
  }
  std::FILE* f = std::fopen(run.file("chaos.csv").c_str(), "w");
  if (!f) throw IoError("cannot write chaos.csv");
  std::fprintf(f, "# kaclab-csv v1 chaos statistic=%s\n", statistic_name(stat));
  std::fprintf(f, "N,t,cov,stderr\n");
  for (std::size_t k = 0; k < covs.size(); ++k) {
    std::fprintf(f, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(cfg.n_list[k]), cfg.t_probe, covs[k].value,
                 covs[k].stderr);
  }
  if (std::fclose(f) != 0) throw IoError("write failed for chaos.csv");
  const auto rows = self_convergence_rows(pools, cfg.n_list, cfg.t_probe, cfg.seed);
  write_self_convergence_csv(run.file("self_convergence.csv").string(), rows);
  run.finish();
  return run.path();
}

fs::path resume_run(const fs::path& snapshot, double additional_horizon, const std::string& override_config,
                    unsigned workers) {
  if (!(additional_horizon > 0.0)) throw InputError("resume: additional horizon must be > 0");
  const fs::path source_dir = snapshot.parent_path().parent_path();
  const fs::path manifest_path = source_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw InputError("resume: no manifest.json found for " + snapshot.string() +
                     "; snapshots must be resumed from inside their run directory");
  }
  const nlohmann::json source = read_json(manifest_path);
  const std::string rel = fs::relative(snapshot, source_dir).generic_string();
  const nlohmann::json* entry = nullptr;
  for (const auto& s : source.at("snapshots")) {
    if (s.at("file").get<std::string>() == rel) entry = &s;
  }
  if (!entry) throw InputError("resume: " + rel + " is not listed in " + manifest_path.string());

  SnapshotHeader header;
  Ensemble state = read_snapshot(snapshot.string(), &header);
  SimConfig cfg = parse_config_text(source.at("config_text").get<std::string>());
  if (!override_config.empty()) {
    const SimConfig o = load_config(override_config);
    auto mismatch = [](const std::string& key, const std::string& was, const std::string& now) {
      throw InputError("resume: physics mismatch for " + key + " (snapshot run " + was + ", config " + now + ")");
    };
    if (o.gamma != header.gamma) mismatch("gamma", std::to_string(header.gamma), std::to_string(o.gamma));
    if (o.n_particles != Eigen::Index(header.n)) {
      mismatch("n_particles", std::to_string(header.n), std::to_string(o.n_particles));
    }
    if (o.dt != cfg.dt) mismatch("dt_time", std::to_string(cfg.dt), std::to_string(o.dt));
    if (o.seed != cfg.seed) mismatch("seed", std::to_string(cfg.seed), std::to_string(o.seed));
    if (o.energy_projection != cfg.energy_projection) mismatch("energy_projection", "changed", "changed");
    if (o.dt_adaptive_cap != cfg.dt_adaptive_cap) {
      mismatch("dt_adaptive_cap_velocity", std::to_string(cfg.dt_adaptive_cap), std::to_string(o.dt_adaptive_cap));
    }
    cfg = o;
  }
  if (cfg.gamma != header.gamma) {
    throw InputError("resume: physics mismatch for gamma (snapshot " + std::to_string(header.gamma) + ", config " +
                     std::to_string(cfg.gamma) + ")");
  }

  const auto replica = entry->at("replica").get<std::uint64_t>();
  state.step = entry->at("step").get<std::uint64_t>();
  state.replica_id = replica;
  state.lineage = {cfg.seed, replica};
  const double ratio = additional_horizon / cfg.dt;
  const auto extra = std::uint64_t(std::abs(ratio - std::round(ratio)) < 1e-9 ? std::llround(ratio) : std::ceil(ratio));
  cfg.horizon = double(state.step + extra) * cfg.dt;
  cfg.replicas = 1;
  cfg.run_name += "_resume";

  RunDirectory run(cfg, "resume");
  run.manifest()["replica_seeds"] = nlohmann::json::array({{{"replica", replica}, {"seed", cfg.seed}, {"noise_lane", replica}}});
  run.manifest()["resumed_from"] = {{"run_dir", fs::absolute(source_dir).string()},
                                    {"snapshot", rel},
                                    {"sha256", sha256_file(snapshot)},
                                    {"step", state.step},
                                    {"time", state.time}};
  TrajectoryLog log;
  try {
    log = run_replica(cfg, state, state.step + extra, [&](const Ensemble&, std::size_t) { check_stop(run.path()); },
                      workers > 0 ? workers : default_workers());
  } catch (const Interrupted&) {
    run.write_manifest("incomplete");
    throw;
  }
  write_conserved(run, log);
  write_replica_snapshots(run, log, state);
  run.finish();
  return run.path();
}

nlohmann::json report_run(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw InputError("report: " + dir.string() + " has no manifest.json");
  const nlohmann::json m = read_json(manifest_path);

  nlohmann::json mismatched = nlohmann::json::array();
  nlohmann::json missing = nlohmann::json::array();
  std::vector<std::string> listed;
  for (const auto& f : m.at("files")) {
    const auto rel = f.at("path").get<std::string>();
    listed.push_back(rel);
    if (!fs::exists(dir / rel)) {
      missing.push_back(rel);
    } else if (sha256_file(dir / rel) != f.at("sha256").get<std::string>()) {
      mismatched.push_back(rel);
    }
  }
  nlohmann::json unlisted = nlohmann::json::array();
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    if (std::find(listed.begin(), listed.end(), rel) == listed.end()) unlisted.push_back(rel);
  }

  nlohmann::json out = {{"run_dir", dir.string()},
                        {"kind", m.value("kind", "")},
                        {"status", m.value("status", "")},
                        {"code_version", m.value("code_version", "")},
                        {"start_time", m.value("start_time", "")},
                        {"end_time", m.value("end_time", "")},
                        {"files", listed.size()},
                        {"checksums_ok", mismatched.empty() && missing.empty() && unlisted.empty()},
                        {"mismatched", mismatched},
                        {"missing", missing},
                        {"unlisted", unlisted}};

  // Conservation summary from every conserved series present.
  nlohmann::json drift = nlohmann::json::array();
  for (const auto& rel : listed) {
    if (rel.rfind("conserved_", 0) != 0) continue;
    const auto table = detail::read_csv(dir / rel);
    if (table.rows.empty()) continue;
    const auto& first = table.rows.front();
    double dp = 0.0, de = 0.0;
    for (const auto& row : table.rows) {
      dp = std::max(dp, std::hypot(row[1] - first[1], row[2] - first[2], row[3] - first[3]));
      de = std::max(de, std::abs(row[4] - first[4]) / std::max(first[4], 1e-300));
    }
    drift.push_back({{"file", rel}, {"max_momentum_change", dp}, {"max_relative_energy_change", de}});
  }
  if (!drift.empty()) out["conservation"] = drift;
  if (m.contains("coupling")) out["coupling"] = m["coupling"];
  if (fs::exists(dir / "moments.csv")) {
    const auto table = detail::read_csv(dir / "moments.csv");
    const std::size_t ti = table.index("time"), pi = table.index("p"), vi = table.index("moment");
    nlohmann::json final_moments = nlohmann::json::object();
    const double t_end = table.rows.back()[ti];
    for (const auto& row : table.rows) {
      if (row[ti] != t_end) continue;
      char key[32];
      std::snprintf(key, sizeof key, "%g", row[pi]);
      final_moments[key] = row[vi];
    }
    out["final_time"] = t_end;
    out["final_moments"] = final_moments;
  }
  return out;
}

}  // namespace kaclab
