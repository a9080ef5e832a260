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

#include "kaclab/ensemble.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kaclab {

enum class ChaosStatistic { kNone, kSpeedSquared, kComponentX };

/// Everything that determines a simulation run. Physics keys are the only inputs to the
/// dynamics; the worker count is taken from the environment and never changes results.
struct SimConfig {
  double gamma = 0.5;
  Eigen::Index n_particles = 64;
  InitialSpec initial;
  double dt = 0.01;
  double horizon = 1.0;
  int replicas = 1;
  std::uint64_t seed = 1;
  int log_stride = 1;
  int snapshot_stride = 0;  ///< 0 disables stored snapshots
  bool energy_projection = false;
  double dt_adaptive_cap = 1.0;

  // Requested estimators.
  std::vector<double> moment_p{2.0, 4.0, 6.0};
  std::vector<double> exp_moment_xi;
  int entropy_neighbors = 0;  ///< 0 disables the entropy estimate
  ChaosStatistic chaos_statistic = ChaosStatistic::kNone;

  // Coupling runs.
  InitialSpec initial_b;
  std::vector<int> m_list{1};

  // Chaos runs.
  std::vector<Eigen::Index> n_list;
  double t_probe = 0.5;

  std::string output_dir = "runs";
  std::string run_name = "run";

  /// Throws InputError naming the offending key and its allowed domain.
  void validate() const;
  std::uint64_t total_steps() const;
};

/// Flat "key = value" text, '#' comments, units in key names (dt_time, horizon_time, ...).
SimConfig parse_config_text(const std::string& text);
SimConfig load_config(const std::string& path);
/// Canonical key/value echo, written into run manifests and accepted back by the parser.
std::map<std::string, std::string> config_entries(const SimConfig& cfg);
std::string config_to_text(const SimConfig& cfg);
nlohmann::json config_to_json(const SimConfig& cfg);

}  // namespace kaclab
