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

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kaclab {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vector3d = Vector3<double>;
using Matrix3d = Matrix3<double>;

/// Column-major block of velocities, one particle per column.
using Velocities = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for malformed, non-finite or otherwise unusable input data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An intermediate quantity left the representable range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// NaN or infinity appeared in the particle state during time stepping.
class NumericalFault : public std::runtime_error {
 public:
  NumericalFault(const std::string& what, std::uint64_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

/// The explicit step would move some particle further than the configured cap.
class StepRejected : public std::runtime_error {
 public:
  StepRejected(double excursion, double cap)
      : std::runtime_error("step rejected: drift excursion " + std::to_string(excursion) +
                           " exceeds cap " + std::to_string(cap) + "; reduce dt"),
        excursion_(excursion) {}
  double excursion() const noexcept { return excursion_; }

 private:
  double excursion_;
};

}  // namespace kaclab
