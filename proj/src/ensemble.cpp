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

#include "kaclab/ensemble.hpp"

#include "kaclab/philox.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <vector>

namespace kaclab {

void InitialSpec::validate() const {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw DomainError("initial spec: r0 must be > 0");
  if (!(mixture_weight >= 0.0 && mixture_weight <= 1.0)) {
    throw DomainError("initial spec: mixture_weight must lie in [0, 1]");
  }
  if (!offset.allFinite()) throw InputError("initial spec: offset is not finite");
  if (kind == InitialKind::kPointCloudFile && point_cloud_path.empty()) {
    throw InputError("initial spec: point_cloud_file requires a path");
  }
}

namespace {

// Radius by inverse CDF (r0 u^{1/3}) times a uniform direction.
Vector3d ball_point(double r0, double u_radius, double u_cos, double u_phi) {
  const double r = r0 * std::cbrt(u_radius);
  const double c = 2.0 * u_cos - 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double phi = 2.0 * std::numbers::pi * u_phi;
  return {r * s * std::cos(phi), r * s * std::sin(phi), r * c};
}

}  // namespace

Ensemble sample_initial(const InitialSpec& spec, Eigen::Index n, std::uint64_t seed, double gamma,
                        std::uint64_t replica) {
  spec.validate();
  if (n < 2) throw DomainError("sample_initial: need at least 2 particles");

  Ensemble e;
  e.gamma = gamma;
  e.replica_id = replica;
  e.lineage = {seed, replica};
  e.velocities.resize(3, n);

  if (spec.kind == InitialKind::kPointCloudFile) {
    const Velocities cloud = read_point_cloud(spec.point_cloud_path);
    if (cloud.cols() == n) {
      e.velocities = cloud;
    } else {
      PhiloxStream stream(seed, StreamDomain::kInitial, replica);
      for (Eigen::Index i = 0; i < n; ++i) {
        e.velocities.col(i) = cloud.col(Eigen::Index(stream.below(std::uint64_t(cloud.cols()))));
      }
    }
    return e;
  }

  const PhiloxKey key = derive_key(seed, StreamDomain::kInitial, replica);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bits = philox4x32({std::uint32_t(i), std::uint32_t(std::uint64_t(i) >> 32), 0u, 0u}, key);
    Vector3d v = ball_point(spec.r0, to_unit_open(bits[0]), to_unit_open(bits[1]), to_unit_open(bits[2]));
    if (spec.kind == InitialKind::kTwoBallMixture && !(to_unit_open(bits[3]) < spec.mixture_weight)) {
      v += spec.offset;
    }
    e.velocities.col(i) = v;
  }
  return e;
}

ConservedQuantities conserved_quantities(const Velocities& v) {
  ConservedQuantities q;
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    q.momentum += v.col(i);
    q.energy += v.col(i).squaredNorm();
  }
  return q;
}

ConservedQuantities conserved_quantities(const Ensemble& e) { return conserved_quantities(e.velocities); }

Velocities read_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read point cloud file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double x = 0, y = 0, z = 0;
    if (!(fields >> x)) continue;  // blank line
    if (!(fields >> y >> z)) {
      throw IoError("point cloud file '" + path + "': line " + std::to_string(line_no) +
                    " does not hold three numbers");
    }
    std::string extra;
    if (fields >> extra) {
      throw IoError("point cloud file '" + path + "': trailing data on line " + std::to_string(line_no));
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw IoError("point cloud file '" + path + "': non-finite value on line " + std::to_string(line_no));
    }
    values.insert(values.end(), {x, y, z});
  }
  if (values.empty()) throw IoError("point cloud file '" + path + "' holds no velocities");
  return Eigen::Map<const Velocities>(values.data(), 3, Eigen::Index(values.size() / 3));
}

void write_point_cloud(const std::string& path, const Velocities& v) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write point cloud file '" + path + "'");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    out << v(0, i) << ' ' << v(1, i) << ' ' << v(2, i) << '\n';
  }
  if (!out) throw IoError("write failed for point cloud file '" + path + "'");
}

}  // namespace kaclab
