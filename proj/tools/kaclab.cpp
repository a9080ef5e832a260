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

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace kaclab;
  CLI::App app{"kaclab: Kac-particle simulator for the Landau equation with hard potentials"};
  app.require_subcommand(1);

  std::string config_path, suite, run_dir, snapshot, override_config;
  double extra_horizon = 0.0;

  auto* simulate = app.add_subcommand("simulate", "run the particle system and write a run directory");
  simulate->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  auto* couple = app.add_subcommand("couple", "run two synchronously coupled families");
  couple->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  auto* chaos = app.add_subcommand("chaos", "covariance and self-convergence over n_list");
  chaos->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "run a verification suite and print a JSON report");
  verify->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(verify_suites()));
  verify->add_option("--run", run_dir, "run directory analysed by the oracle, chaos and stability suites");

  auto* report = app.add_subcommand("report", "summarise a run directory and check its checksums");
  report->add_option("run-dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* resume = app.add_subcommand("resume", "continue a stored snapshot");
  resume->add_option("snapshot", snapshot, "snapshot file inside a run directory")->required()->check(CLI::ExistingFile);
  resume->add_option("additional_horizon", extra_horizon, "extra simulated time")->required();
  resume->add_option("--config", override_config, "replacement configuration (physics must match)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  install_interrupt_handler();

  try {
    if (simulate->parsed()) {
      std::cout << run_simulation(load_config(config_path)).string() << '\n';
    } else if (couple->parsed()) {
      std::cout << run_coupling(load_config(config_path)).string() << '\n';
    } else if (chaos->parsed()) {
      std::cout << run_chaos(load_config(config_path)).string() << '\n';
    } else if (resume->parsed()) {
      std::cout << resume_run(snapshot, extra_horizon, override_config).string() << '\n';
    } else if (report->parsed()) {
      const auto summary = report_run(run_dir);
      std::cout << summary.dump(2) << '\n';
      return summary.at("checksums_ok").get<bool>() ? 0 : 1;
    } else if (verify->parsed()) {
      const auto result = verify_suite(suite, run_dir);
      std::cout << result.dump(2) << '\n';
      return result.at("pass").get<bool>() ? 0 : 1;
    }
  } catch (const Interrupted& e) {
    std::cerr << "kaclab: " << e.what() << '\n';
    return 130;
  } catch (const std::exception& e) {
    std::cerr << "kaclab: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
