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

#include "kaclab/common.hpp"

#include <cstdint>
#include <string>

namespace kaclab {

/// Deterministic origin of an ensemble's randomness.
struct SeedLineage {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// N particle velocities of one replica of the conservative Kac system plus its clock.
struct Ensemble {
  Velocities velocities;
  double gamma = 0.0;
  double time = 0.0;
  std::uint64_t step = 0;  ///< completed full steps
  std::uint64_t replica_id = 0;
  SeedLineage lineage;

  Eigen::Index size() const noexcept { return velocities.cols(); }
};

enum class InitialKind { kUniformBall, kTwoBallMixture, kPointCloudFile };

/// Compactly supported initial law.
struct InitialSpec {
  InitialKind kind = InitialKind::kUniformBall;
  double r0 = 1.0;                        ///< support radius of each ball
  Vector3d offset = Vector3d::Zero();     ///< centre of the second mixture ball
  double mixture_weight = 1.0;            ///< probability of the ball centred at the origin
  std::string point_cloud_path;

  void validate() const;
};

struct ConservedQuantities {
  Vector3d momentum = Vector3d::Zero();
  double energy = 0.0;
};

/// i.i.d. draws from the initial law; a pure function of (spec, n, seed, replica).
/// A point cloud with exactly n rows is used verbatim, otherwise it is resampled with
/// replacement.
Ensemble sample_initial(const InitialSpec& spec, Eigen::Index n, std::uint64_t seed,
                        double gamma = 0.0, std::uint64_t replica = 0);

/// Total momentum sum_i v^i and total energy sum_i |v^i|^2.
ConservedQuantities conserved_quantities(const Ensemble& e);
ConservedQuantities conserved_quantities(const Velocities& v);

/// Plain text point cloud, one "vx vy vz" per line; '#' starts a comment.
Velocities read_point_cloud(const std::string& path);
void write_point_cloud(const std::string& path, const Velocities& v);

}  // namespace kaclab
