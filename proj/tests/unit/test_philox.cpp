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

#include "kaclab/philox.hpp"

#include <doctest.h>

#include <cmath>

using namespace kaclab;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("pair noise is antisymmetric and keyed by step") {
  const PairNoise noise(42, 3, 17);
  for (std::uint32_t i = 0; i < 20; ++i) {
    for (std::uint32_t j = 0; j < 20; ++j) {
      if (i == j) continue;
      REQUIRE((noise(i, j) + noise(j, i)).isZero(0.0));
    }
  }
  CHECK((noise(0, 1) - PairNoise(42, 3, 18)(0, 1)).norm() > 0.0);
  CHECK((noise(0, 1) - PairNoise(42, 4, 17)(0, 1)).norm() > 0.0);
  CHECK((noise(0, 1) - PairNoise(42, 3, 17, 1)(0, 1)).norm() > 0.0);
}

TEST_CASE("relabelled noise follows the labels") {
  const PairNoise noise(9, 0, 2);
  const auto swapped = noise.relabeled({2, 1, 0});
  CHECK((swapped(0, 1) - noise(2, 1)).isZero(0.0));
  CHECK((swapped(1, 0) + swapped(0, 1)).isZero(0.0));
}

TEST_CASE("pair noise components are standard normal") {
  const PairNoise noise(1, 0, 0);
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  std::size_t count = 0;
  for (std::uint32_t i = 0; i < 300; ++i) {
    for (std::uint32_t j = i + 1; j < 300; ++j) {
      const Vector3d x = noise(i, j);
      for (int c = 0; c < 3; ++c) {
        s += x(c);
        s2 += x(c) * x(c);
        s4 += std::pow(x(c), 4);
        ++count;
      }
    }
  }
  const double n = double(count);
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("streams are deterministic and separated by domain") {
  PhiloxStream a(5, StreamDomain::kSubsample, 0), b(5, StreamDomain::kSubsample, 0), c(5, StreamDomain::kProjection, 0);
  for (int k = 0; k < 10; ++k) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.uniform() != c.uniform());
  for (int k = 0; k < 1000; ++k) CHECK(a.below(7) < 7u);
}
