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

#include "kaclab/integrator.hpp"

#include "kaclab/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace kaclab {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

void StepOptions::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step: dt must be > 0");
  if (!(dt_adaptive_cap > 0.0)) throw DomainError("step: dt_adaptive_cap must be > 0");
}

unsigned default_workers() {
  if (const char* env = std::getenv("KACLAB_WORKERS")) {
    const long w = std::strtol(env, nullptr, 10);
    if (w > 0) return unsigned(w);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct Accumulators {
  Velocities drift;
  Velocities noise;
};

// Pair-symmetric sweep: each unordered pair is evaluated once and scattered with opposite
// signs. The additions into particle k happen in ascending partner order, exactly as in the
// particle-major sweep below, so both produce the same bits.
void accumulate_serial(const Velocities& v, const PairNoise& noise, double gamma, double drift_scale,
                       double noise_scale, bool zero_noise, Accumulators& acc) {
  const Eigen::Index n = v.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3d vi = v.col(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vector3d z = vi - v.col(j);
      const Vector3d xi = zero_noise ? Vector3d::Zero() : noise(std::uint32_t(i), std::uint32_t(j));
      const auto inc = pair_increment<double>(z, xi, gamma, drift_scale, noise_scale);
      acc.drift.col(i) += inc.drift;
      acc.noise.col(i) += inc.noise;
      acc.drift.col(j) -= inc.drift;
      acc.noise.col(j) -= inc.noise;
    }
  }
}

void accumulate_rows(const Velocities& v, const PairNoise& noise, double gamma, double drift_scale,
                     double noise_scale, bool zero_noise, Eigen::Index begin, Eigen::Index end,
                     Accumulators& acc) {
  const Eigen::Index n = v.cols();
  for (Eigen::Index i = begin; i < end; ++i) {
    const Vector3d vi = v.col(i);
    Vector3d d = Vector3d::Zero();
    Vector3d s = Vector3d::Zero();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vector3d z = vi - v.col(j);
      const Vector3d xi = zero_noise ? Vector3d::Zero() : noise(std::uint32_t(i), std::uint32_t(j));
      const auto inc = pair_increment<double>(z, xi, gamma, drift_scale, noise_scale);
      if (j < i) {
        // Mirror the serial sweep, which subtracts the (j, i) increment.
        d -= -inc.drift;
        s -= -inc.noise;
      } else {
        d += inc.drift;
        s += inc.noise;
      }
    }
    acc.drift.col(i) = d;
    acc.noise.col(i) = s;
  }
}

}  // namespace

Ensemble step(const Ensemble& e, const StepOptions& opts, const PairNoise& noise, unsigned workers) {
  opts.validate();
  const Eigen::Index n = e.size();
  if (n < 2) throw DomainError("step: ensemble needs at least 2 particles");
  if (!e.velocities.allFinite()) throw NumericalFault("non-finite velocity before step", noise.step());

  const double inv_n = 1.0 / double(n);
  const double drift_scale = 2.0 * inv_n * opts.dt;
  const double noise_scale = opts.zero_noise ? 0.0 : std::sqrt(2.0 * inv_n) * std::sqrt(opts.dt);

  Accumulators acc{Velocities::Zero(3, n), Velocities::Zero(3, n)};
  if (workers <= 1) {
    accumulate_serial(e.velocities, noise, e.gamma, drift_scale, noise_scale, opts.zero_noise, acc);
  } else {
    const Eigen::Index chunk = std::max<Eigen::Index>(1, (n + Eigen::Index(workers) * 4 - 1) /
                                                             (Eigen::Index(workers) * 4));
    const std::size_t blocks = std::size_t((n + chunk - 1) / chunk);
    parallel_for(blocks, workers, [&](std::size_t b) {
      const Eigen::Index begin = Eigen::Index(b) * chunk;
      accumulate_rows(e.velocities, noise, e.gamma, drift_scale, noise_scale, opts.zero_noise, begin,
                      std::min(n, begin + chunk), acc);
    });
  }

  const double excursion = acc.drift.colwise().norm().maxCoeff();
  if (excursion > opts.dt_adaptive_cap) throw StepRejected(excursion, opts.dt_adaptive_cap);

  Ensemble out = e;
  out.velocities = e.velocities + (acc.drift + acc.noise);
  out.time = e.time + opts.dt;
  if (!out.velocities.allFinite()) throw NumericalFault("non-finite velocity after step", noise.step());

  if (opts.energy_projection) {
    const auto before = conserved_quantities(e);
    out = project_conservation(out, before.momentum, before.energy);
  }
  return out;
}

void advance(Ensemble& e, const StepOptions& opts, unsigned workers, int max_halvings) {
  const std::uint64_t seed = e.lineage.seed;
  const std::uint64_t replica = e.lineage.replica;
  const auto step_index = std::uint32_t(e.step);

  std::function<void(double, int, std::uint32_t)> sub = [&](double dt, int depth, std::uint32_t index) {
    StepOptions local = opts;
    local.dt = dt;
    const std::uint32_t substream = depth == 0 ? 0u : ((std::uint32_t(depth) << 24) | index);
    try {
      e = step(e, local, PairNoise(seed, replica, step_index, substream), workers);
    } catch (const StepRejected&) {
      if (depth >= max_halvings) throw;
      sub(dt / 2, depth + 1, 2 * index);
      sub(dt / 2, depth + 1, 2 * index + 1);
    }
  };
  sub(opts.dt, 0, 0);
  e.step += 1;
  e.time = double(e.step) * opts.dt;
}

Ensemble project_conservation(const Ensemble& e, const Vector3d& target_p, double target_e) {
  const Eigen::Index n = e.size();
  if (n < 1) throw DomainError("project_conservation: empty ensemble");
  const Vector3d target_mean = target_p / double(n);
  const Vector3d mean = e.velocities.rowwise().mean();
  const Velocities fluct = e.velocities.colwise() - mean;
  const double spread = fluct.squaredNorm();
  const double thermal = target_e - double(n) * target_mean.squaredNorm();
  if (!(spread > 0.0)) {
    throw DomainError("project_conservation: degenerate ensemble (all velocities equal)");
  }
  if (!(thermal > 0.0)) {
    throw DomainError("project_conservation: target energy does not exceed the drift energy N|p/N|^2");
  }
  const double lambda = std::sqrt(thermal / spread);
  Ensemble out = e;
  out.velocities = (lambda * fluct).colwise() + target_mean;
  return out;
}

StepOptions step_options(const SimConfig& cfg) {
  StepOptions o;
  o.dt = cfg.dt;
  o.energy_projection = cfg.energy_projection;
  o.dt_adaptive_cap = cfg.dt_adaptive_cap;
  return o;
}

std::vector<std::uint64_t> logged_steps(const SimConfig& cfg) {
  const std::uint64_t total = cfg.total_steps();
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 0; s < total; s += std::uint64_t(cfg.log_stride)) out.push_back(s);
  out.push_back(total);
  return out;
}

TrajectoryLog run_replica(const SimConfig& cfg, Ensemble& state, std::uint64_t end_step,
                          const FrameObserver& on_log, unsigned step_workers) {
  const StepOptions opts = step_options(cfg);
  TrajectoryLog log;
  log.replica = state.replica_id;
  log.manifest = {{"config", config_to_json(cfg)},
                  {"replica", state.replica_id},
                  {"seed", state.lineage.seed},
                  {"start_step", state.step},
                  {"end_step", end_step}};

  auto record = [&](bool force) {
    const bool on_stride = state.step % std::uint64_t(cfg.log_stride) == 0;
    if (!(force || on_stride)) return;
    if (!log.steps.empty() && log.steps.back() == state.step) return;
    log.times.push_back(state.time);
    log.steps.push_back(state.step);
    log.conserved_series.push_back(conserved_quantities(state));
    if (cfg.snapshot_stride > 0 &&
        (state.step % std::uint64_t(cfg.snapshot_stride) == 0 || state.step == end_step)) {
      log.snapshots.push_back(state);
    }
    if (on_log) on_log(state, log.times.size() - 1);
  };

  record(true);
  while (state.step < end_step) {
    advance(state, opts, step_workers);
    record(state.step == end_step);
  }
  return log;
}

SimulationResult simulate(const SimConfig& cfg, const SimulateOptions& opts) {
  cfg.validate();
  const unsigned workers = opts.workers > 0 ? opts.workers : default_workers();
  const auto steps = logged_steps(cfg);
  const std::size_t replicas = std::size_t(cfg.replicas);

  SimulationResult result;
  result.times.reserve(steps.size());
  for (auto s : steps) result.times.push_back(double(s) * cfg.dt);
  result.logs.resize(replicas);
  result.finals.resize(replicas);
  if (opts.keep_frames) result.frames.assign(steps.size(), std::vector<Velocities>(replicas));

  const unsigned replica_workers = std::min<unsigned>(workers, unsigned(replicas));
  const unsigned step_workers = replicas == 1 ? workers : 1;
  parallel_for(replicas, replica_workers, [&](std::size_t r) {
    Ensemble state = sample_initial(cfg.initial, cfg.n_particles, cfg.seed, cfg.gamma, r);
    result.logs[r] = run_replica(
        cfg, state, cfg.total_steps(),
        [&](const Ensemble& e, std::size_t idx) {
          if (opts.keep_frames) result.frames[idx][r] = e.velocities;
          if (opts.observer) opts.observer(e, idx);
        },
        step_workers);
    result.finals[r] = std::move(state);
  });
  return result;
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool get(std::ifstream& in, T& value) {
  return bool(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace

void write_snapshot(const std::string& path, const Ensemble& e) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open snapshot for writing: " + path);
  out.write("KACL", 4);
  put(out, kSnapshotVersion);
  put(out, std::uint64_t(e.size()));
  put(out, e.gamma);
  put(out, e.time);
  out.write(reinterpret_cast<const char*>(e.velocities.data()),
            std::streamsize(sizeof(double) * 3 * std::size_t(e.size())));
  out.flush();
  if (!out) throw IoError("snapshot write failed (disk full?): " + path);
}

Ensemble read_snapshot(const std::string& path, SnapshotHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "KACL", 4) != 0) {
    throw IoError("corrupted snapshot header (bad magic): " + path);
  }
  SnapshotHeader h;
  if (!get(in, h.version)) throw IoError("corrupted snapshot header (truncated): " + path);
  if (h.version != kSnapshotVersion) {
    throw IoError("snapshot format version " + std::to_string(h.version) + " is not supported (this build reads version " +
                  std::to_string(kSnapshotVersion) + "): " + path);
  }
  if (!get(in, h.n) || !get(in, h.gamma) || !get(in, h.time)) {
    throw IoError("corrupted snapshot header (truncated): " + path);
  }
  if (h.n < 2 || h.n > (std::uint64_t(1) << 32) || !(h.gamma >= 0.0 && h.gamma <= 1.0) ||
      !(h.time >= 0.0) || !std::isfinite(h.time)) {
    throw IoError("corrupted snapshot header (invalid fields): " + path);
  }
  Ensemble e;
  e.gamma = h.gamma;
  e.time = h.time;
  e.velocities.resize(3, Eigen::Index(h.n));
  if (!in.read(reinterpret_cast<char*>(e.velocities.data()),
               std::streamsize(sizeof(double) * 3 * h.n))) {
    throw IoError("corrupted snapshot (truncated payload): " + path);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("corrupted snapshot (trailing bytes): " + path);
  if (!e.velocities.allFinite()) throw IoError("corrupted snapshot (non-finite velocity): " + path);
  if (header) *header = h;
  return e;
}

void write_conserved_csv(const std::string& path, const TrajectoryLog& log) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "# kaclab-csv v1 conserved_series replica=%llu\n", static_cast<unsigned long long>(log.replica));
  std::fprintf(f, "time,px,py,pz,energy\n");
  for (std::size_t k = 0; k < log.times.size(); ++k) {
    const auto& q = log.conserved_series[k];
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", log.times[k], q.momentum.x(), q.momentum.y(),
                 q.momentum.z(), q.energy);
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path);
}

}  // namespace kaclab
