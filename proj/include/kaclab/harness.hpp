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

// Run persistence and the verification driver: run directories with checksummed manifests,
// resume from snapshots, and JSON verification reports.

#pragma once

#include "kaclab/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace kaclab {

namespace fs = std::filesystem;

/// Thrown when a run is stopped by request; the manifest on disk is left "incomplete".
class Interrupted : public std::runtime_error {
 public:
  explicit Interrupted(const fs::path& dir)
      : std::runtime_error("run interrupted; partial results in " + dir.string()), dir_(dir) {}
  const fs::path& directory() const noexcept { return dir_; }

 private:
  fs::path dir_;
};

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const fs::path& path);

std::string code_version();

/// Cooperative stop flag, polled at every logged time. Safe to set from a signal handler.
void request_stop() noexcept;
void clear_stop_request() noexcept;
bool stop_requested() noexcept;
/// Routes SIGINT and SIGTERM to request_stop().
void install_interrupt_handler();

/// A run directory under construction. The manifest is written "incomplete" on creation and
/// rewritten with a full checksum inventory by finish().
class RunDirectory {
 public:
  RunDirectory(const SimConfig& cfg, const std::string& kind);

  const fs::path& path() const noexcept { return dir_; }
  nlohmann::json& manifest() noexcept { return manifest_; }
  fs::path file(const std::string& relative) const { return dir_ / relative; }

  /// Rewrites the manifest with the current inventory and the given status.
  void write_manifest(const std::string& status);
  void finish() { write_manifest("complete"); }

 private:
  fs::path dir_;
  nlohmann::json manifest_;
};

/// `simulate`: conserved series per replica, moment tables, final snapshots.
fs::path run_simulation(const SimConfig& cfg, unsigned workers = 0);

/// `couple`: synchronously coupled families started from cfg.initial and cfg.initial_b.
fs::path run_coupling(const SimConfig& cfg, unsigned workers = 0);

/// `chaos`: two-particle covariance and self-convergence over cfg.n_list at cfg.t_probe.
fs::path run_chaos(const SimConfig& cfg, unsigned workers = 0);

/// Continue the replica stored in a snapshot for additional_horizon more time units. The
/// configuration comes from the snapshot's run manifest unless override_config is given, in
/// which case its physics must match the snapshot.
fs::path resume_run(const fs::path& snapshot, double additional_horizon, const std::string& override_config = {},
                    unsigned workers = 0);

/// Summary of a run directory, including a fresh checksum comparison against its manifest.
nlohmann::json report_run(const fs::path& dir);

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"kernels", "inequalities", "conservation", "oracle", "chaos", "stability"};
  return names;
}

/// Runs one verification bundle and returns {"suite", "pass", "checks": [...]}. Suites that
/// analyse stored output (oracle, chaos, stability) need run_dir and throw InputError naming
/// the run to execute first when it is missing or of the wrong kind.
nlohmann::json verify_suite(const std::string& suite, const fs::path& run_dir = {});

}  // namespace kaclab
