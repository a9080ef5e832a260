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
#include <vector>

namespace kaclab {

/// Uniformly weighted point cloud; one point per column (dimension 3m).
using Cloud = Eigen::MatrixXd;

inline constexpr Eigen::Index kExactW2Cap = 4096;

struct Assignment {
  std::vector<Eigen::Index> perm;  ///< row i is matched to column perm[i]
  double cost = 0.0;
};

/// Exact minimum-cost perfect matching for a square dense cost matrix (shortest augmenting
/// paths with dual potentials).
Assignment solve_assignment(const Eigen::MatrixXd& cost);

/// Squared-Euclidean cost matrix between the columns of a and b.
Eigen::MatrixXd squared_distance_matrix(const Cloud& a, const Cloud& b);

/// Exact empirical W2 for equal-size clouds with at most kExactW2Cap points.
double w2_exact(const Cloud& a, const Cloud& b);

struct SlicedW2 {
  double distance = 0.0;
  double stderr = 0.0;  ///< Monte Carlo error over the random directions
};

/// Sliced W2: square root of the mean over random unit directions of the squared 1-D W2
/// between the projected samples. Deterministic given seed.
SlicedW2 w2_sliced(const Cloud& a, const Cloud& b, int n_projections, std::uint64_t seed);

/// Uniform subsample of size k without replacement, deterministic given (seed, lane).
Cloud subsample(const Cloud& pool, Eigen::Index k, std::uint64_t seed, std::uint64_t lane = 0);

}  // namespace kaclab
