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

// Explicit Euler-Maruyama discretisation of the conservative Kac system
//
//   dV^i = (2/N) sum_{j!=i} B(V^i - V^j) dt + sqrt(2/N) sum_{j!=i} sigma(V^i - V^j) dZ^{i,j},
//
// with Z^{j,i} = -Z^{i,j}. Every pair increment enters particle i and particle j with
// opposite signs, so total momentum is conserved by each step up to summation rounding.

#pragma once

#include "kaclab/config.hpp"
#include "kaclab/ensemble.hpp"
#include "kaclab/philox.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kaclab {

enum class Scheme { kEulerMaruyama };

struct StepOptions {
  double dt = 0.01;
  bool energy_projection = false;
  double dt_adaptive_cap = 1.0;  ///< largest admissible |drift| * dt of any particle
  Scheme scheme = Scheme::kEulerMaruyama;
  bool zero_noise = false;       ///< drop the stochastic term (deterministic drift only)

  void validate() const;
};

/// One explicit step of size opts.dt. Advances e.time by dt; the step counter is left to
/// the caller. Throws StepRejected when the drift excursion exceeds the cap and
/// NumericalFault when the new state is not finite. Results are bit-identical for every
/// worker count.
Ensemble step(const Ensemble& e, const StepOptions& opts, const PairNoise& noise, unsigned workers = 1);

/// One full step of the simulation clock, halving dt on rejection (up to max_halvings
/// times). Sub-steps draw from their own noise substreams. Sets e.step += 1 and
/// e.time = e.step * dt.
void advance(Ensemble& e, const StepOptions& opts, unsigned workers = 1, int max_halvings = 8);

/// Affine map v -> target_p/N + lambda (v - mean(v)) hitting the momentum and energy
/// targets. Throws DomainError for a degenerate ensemble or unreachable energy.
Ensemble project_conservation(const Ensemble& e, const Vector3d& target_p, double target_e);

struct TrajectoryLog {
  std::uint64_t replica = 0;
  std::vector<double> times;
  std::vector<std::uint64_t> steps;
  std::vector<ConservedQuantities> conserved_series;
  std::vector<Ensemble> snapshots;
  nlohmann::json manifest;
};

/// Velocities of every replica at every logged time: frames[time_index][replica].
using Frames = std::vector<std::vector<Velocities>>;

/// Called from the worker that owns the replica, at every logged time.
using FrameObserver = std::function<void(const Ensemble&, std::size_t log_index)>;

StepOptions step_options(const SimConfig& cfg);

struct SimulationResult {
  std::vector<double> times;
  std::vector<TrajectoryLog> logs;
  Frames frames;  ///< empty unless requested
  std::vector<Ensemble> finals;  ///< final state of every replica
};

struct SimulateOptions {
  bool keep_frames = true;
  unsigned workers = 0;  ///< 0: take from KACLAB_WORKERS or the hardware
  FrameObserver observer;
};

/// Log times used by a configuration: step 0, every log_stride steps, and the final step.
std::vector<std::uint64_t> logged_steps(const SimConfig& cfg);

/// Runs one replica from an explicit starting state (used for fresh runs and resumes).
TrajectoryLog run_replica(const SimConfig& cfg, Ensemble& state, std::uint64_t end_step,
                          const FrameObserver& on_log = {}, unsigned step_workers = 1);

/// Runs cfg.replicas independent replicas. Deterministic given the configuration.
SimulationResult simulate(const SimConfig& cfg, const SimulateOptions& opts = {});

/// Worker count from KACLAB_WORKERS, else hardware concurrency.
unsigned default_workers();

/// Runs fn(k) for k in [0, count) over the given number of workers.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

// Snapshot file: "KACL", u32 version, u64 N, f64 gamma, f64 t, then 3N f64, little-endian.
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotHeader {
  std::uint32_t version = kSnapshotVersion;
  std::uint64_t n = 0;
  double gamma = 0.0;
  double time = 0.0;
};

void write_snapshot(const std::string& path, const Ensemble& e);
/// Throws IoError for unreadable or corrupted files and for unsupported versions.
Ensemble read_snapshot(const std::string& path, SnapshotHeader* header = nullptr);

/// CSV with columns time, px, py, pz, energy.
void write_conserved_csv(const std::string& path, const TrajectoryLog& log);

}  // namespace kaclab
