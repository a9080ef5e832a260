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

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function of a 64-bit
// key and a 128-bit counter, so any stream position can be regenerated independently of
// evaluation order or worker count.

#pragma once

#include "kaclab/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

namespace kaclab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent key families derived from one user seed.
enum class StreamDomain : std::uint64_t {
  kPairNoise = 1,
  kInitial = 2,
  kSubsample = 3,
  kProjection = 4,
};

inline PhiloxKey derive_key(std::uint64_t seed, StreamDomain domain, std::uint64_t lane) {
  const std::uint64_t k =
      splitmix64(splitmix64(seed ^ (0xA0761D6478BD642Full * std::uint64_t(domain))) + lane);
  return {std::uint32_t(k), std::uint32_t(k >> 32)};
}

/// Uniform on the open interval (0, 1).
inline double to_unit_open(std::uint32_t u) { return (double(u) + 0.5) * 0x1.0p-32; }

/// Four standard normals from one Philox block (two Box-Muller pairs).
inline std::array<double, 4> normals_from_block(const PhiloxCounter& bits) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double r0 = std::sqrt(-2.0 * std::log(to_unit_open(bits[0])));
  const double t0 = kTwoPi * to_unit_open(bits[1]);
  const double r1 = std::sqrt(-2.0 * std::log(to_unit_open(bits[2])));
  const double t1 = kTwoPi * to_unit_open(bits[3]);
  return {r0 * std::cos(t0), r0 * std::sin(t0), r1 * std::cos(t1), r1 * std::sin(t1)};
}

/// Antisymmetric pairwise Gaussian increments for one replica at one (sub)step.
///
/// The pair (i, j) draws a single standard normal 3-vector keyed by (min, max); particle i
/// sees it with sign +1 when i < j and -1 otherwise, so Z^{j,i} = -Z^{i,j} exactly.
class PairNoise {
 public:
  PairNoise(std::uint64_t seed, std::uint64_t replica, std::uint32_t step, std::uint32_t substream = 0)
      : key_(derive_key(seed, StreamDomain::kPairNoise, replica)), step_(step), substream_(substream) {}

  /// Key particles by external labels: particle k draws as if it were labels[k].
  PairNoise relabeled(std::vector<std::uint32_t> labels) const {
    PairNoise out = *this;
    out.labels_ = std::make_shared<const std::vector<std::uint32_t>>(std::move(labels));
    return out;
  }

  /// Standard normal 3-vector for the ordered pair (i, j), i != j.
  Vector3d operator()(std::uint32_t i, std::uint32_t j) const {
    if (labels_) {
      i = (*labels_)[i];
      j = (*labels_)[j];
    }
    const bool flip = i > j;
    const std::uint32_t lo = flip ? j : i;
    const std::uint32_t hi = flip ? i : j;
    const auto g = normals_from_block(philox4x32({lo, hi, step_, substream_}, key_));
    Vector3d out(g[0], g[1], g[2]);
    return flip ? Vector3d(-out) : out;
  }

  std::uint32_t step() const noexcept { return step_; }
  std::uint32_t substream() const noexcept { return substream_; }

 private:
  PhiloxKey key_;
  std::uint32_t step_;
  std::uint32_t substream_;
  std::shared_ptr<const std::vector<std::uint32_t>> labels_;
};

/// Stateful convenience stream over one key, for sampling tasks outside the pair noise.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, StreamDomain domain, std::uint64_t lane)
      : key_(derive_key(seed, domain, lane)) {}

  double uniform() {
    if (used_ == 4) refill();
    return to_unit_open(block_[used_++]);
  }

  double normal() {
    if (spare_ready_) {
      spare_ready_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    spare_ready_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uint64_t(uniform() * double(n)) % n; }

 private:
  void refill() {
    block_ = philox4x32({std::uint32_t(counter_), std::uint32_t(counter_ >> 32), 0u, 0u}, key_);
    ++counter_;
    used_ = 0;
  }

  PhiloxKey key_;
  std::uint64_t counter_ = 0;
  PhiloxCounter block_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool spare_ready_ = false;
};

}  // namespace kaclab
