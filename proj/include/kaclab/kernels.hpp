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

// Landau pair kernels for hard potentials and the pointwise inequalities they satisfy.
//
//   Pi(z)    = Id - z z^T / |z|^2
//   A(z)     = |z|^(gamma+2) Pi(z)
//   B(z)     = -2 z |z|^gamma
//   sigma(z) = |z|^(1+gamma/2) Pi(z),   sigma sigma^T = A
//
// All kernels are continuous at the origin and evaluate to zero there.

#pragma once

#include "kaclab/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace kaclab {

template <typename Scalar>
struct PairKernelValue {
  Matrix3<Scalar> a_matrix = Matrix3<Scalar>::Zero();
  Vector3<Scalar> b_vector = Vector3<Scalar>::Zero();
  Matrix3<Scalar> sigma_matrix = Matrix3<Scalar>::Zero();
};

namespace detail {

template <typename Scalar>
void check_gamma(Scalar gamma) {
  if (!(gamma >= Scalar(0) && gamma <= Scalar(1))) {
    throw DomainError("gamma must lie in [0, 1], got " + std::to_string(double(gamma)));
  }
}

/// |z|^(e) from the squared norm; exact 1 for e == 0.
template <typename Scalar>
inline Scalar norm_power(Scalar r2, Scalar e) {
  if (e == Scalar(0)) return Scalar(1);
  if (r2 == Scalar(0)) return Scalar(0);
  return std::exp(Scalar(0.5) * e * std::log(r2));
}

template <typename Scalar>
inline Scalar pow0(Scalar x, Scalar e) {
  // 0^0 := 1, matching |z|^0 in the kernels.
  if (e == Scalar(0)) return Scalar(1);
  return std::pow(x, e);
}

}  // namespace detail

/// Orthogonal projector onto the plane normal to z; zero matrix at z = 0.
template <typename Derived>
Matrix3<typename Derived::Scalar> projector(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar r2 = z.squaredNorm();
  if (r2 == Scalar(0)) return Matrix3<Scalar>::Zero();
  return Matrix3<Scalar>::Identity() - (z * z.transpose()) / r2;
}

template <typename Derived>
PairKernelValue<typename Derived::Scalar> eval_pair_kernels(const Eigen::MatrixBase<Derived>& z,
                                                            typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3)
  detail::check_gamma(gamma);
  if (!z.allFinite()) throw InputError("eval_pair_kernels: relative velocity is not finite");

  PairKernelValue<Scalar> out;
  const Scalar r2 = z.squaredNorm();
  if (r2 == Scalar(0)) return out;

  const Scalar half_pow = detail::norm_power(r2, gamma / Scalar(2));  // |z|^(gamma/2)
  const Scalar g = half_pow * half_pow;                               // |z|^gamma
  const Matrix3<Scalar> pi = projector(z);
  out.a_matrix = (r2 * g) * pi;
  out.b_vector = Scalar(-2) * g * z;
  out.sigma_matrix = (std::sqrt(r2) * half_pow) * pi;
  return out;
}

template <typename Scalar>
struct PairIncrement {
  Vector3<Scalar> drift;
  Vector3<Scalar> noise;
};

/// Pair contribution to particle i of one explicit step, split into
///   drift = drift_scale * B(z)   and   noise = noise_scale * sigma(z) xi,
/// with z = v_i - v_j. Flipping the signs of both z and xi flips the sign of both parts
/// bit for bit, which is what makes the discrete momentum balance exact pair by pair.
template <typename Scalar>
inline PairIncrement<Scalar> pair_increment(const Vector3<Scalar>& z, const Vector3<Scalar>& xi,
                                            Scalar gamma, Scalar drift_scale, Scalar noise_scale) {
  const Scalar r2 = z.dot(z);
  if (r2 == Scalar(0)) return {Vector3<Scalar>::Zero(), Vector3<Scalar>::Zero()};
  const Scalar half_pow = detail::norm_power(r2, gamma / Scalar(2));
  const Scalar g = half_pow * half_pow;
  const Scalar along = z.dot(xi) / r2;
  const Vector3<Scalar> projected = xi - z * along;
  const Scalar sigma_scale = noise_scale * (std::sqrt(r2) * half_pow);
  return {(drift_scale * (Scalar(-2) * g)) * z, sigma_scale * projected};
}

template <typename Scalar>
struct PovznerTerms {
  Scalar lhs;  ///< (-x^p - y^p + p/2 x^(p-2) y^2 + p/2 y^(p-2) x^2) |x-y|^gamma
  Scalar rhs;  ///< -x^(p+g)/2 - y^(p+g)/2 + x^p y^g + y^p x^g + p^(1+g/2)(x^(p-2+g) y^2 + y^(p-2+g) x^2)
  Scalar gap;  ///< rhs - lhs; the sharpened Povzner inequality asserts gap >= 0
};

/// Both sides of the sharpened Povzner inequality. Both sides are homogeneous of degree
/// p + gamma in (x, y); above 1e3 the arguments are normalised by max(x, y) and the common
/// factor restored in log space. OverflowError is thrown if the restored values are not
/// representable.
template <typename Scalar>
PovznerTerms<Scalar> povzner_terms(Scalar x, Scalar y, Scalar p, Scalar gamma) {
  if (!(x >= Scalar(0)) || !(y >= Scalar(0)) || !std::isfinite(x) || !std::isfinite(y)) {
    throw DomainError("povzner: x and y must be finite and non-negative");
  }
  if (!(p >= Scalar(4)) || !std::isfinite(p)) throw DomainError("povzner: p must be >= 4");
  if (!(gamma > Scalar(0) && gamma <= Scalar(1))) throw DomainError("povzner: gamma must lie in (0, 1]");

  const Scalar scale = std::max(x, y);
  const bool rescale = scale > Scalar(1e3);
  const Scalar xs = rescale ? x / scale : x;
  const Scalar ys = rescale ? y / scale : y;

  using std::pow;
  const Scalar half_p = p / Scalar(2);
  const Scalar lhs = (-pow(xs, p) - pow(ys, p) + half_p * pow(xs, p - 2) * ys * ys +
                      half_p * pow(ys, p - 2) * xs * xs) *
                     pow(std::abs(xs - ys), gamma);
  const Scalar rhs = Scalar(-0.5) * pow(xs, p + gamma) - Scalar(0.5) * pow(ys, p + gamma) +
                     pow(xs, p) * pow(ys, gamma) + pow(ys, p) * pow(xs, gamma) +
                     pow(p, Scalar(1) + gamma / Scalar(2)) *
                         (pow(xs, p - 2 + gamma) * ys * ys + pow(ys, p - 2 + gamma) * xs * xs);

  PovznerTerms<Scalar> out{lhs, rhs, rhs - lhs};
  if (rescale) {
    const Scalar log_factor = (p + gamma) * std::log(scale);
    const Scalar biggest = std::max({std::abs(lhs), std::abs(rhs), std::abs(out.gap)});
    if (biggest > Scalar(0) &&
        log_factor + std::log(biggest) >= std::log(std::numeric_limits<Scalar>::max())) {
      throw OverflowError("povzner: terms overflow for x=" + std::to_string(double(x)) +
                          ", y=" + std::to_string(double(y)) + ", p=" + std::to_string(double(p)));
    }
    const Scalar factor = std::exp(log_factor);
    out.lhs *= factor;
    out.rhs *= factor;
    out.gap *= factor;
  }
  if (!std::isfinite(out.lhs) || !std::isfinite(out.rhs)) {
    throw OverflowError("povzner: non-finite terms for p=" + std::to_string(double(p)));
  }
  return out;
}

template <typename Scalar>
Scalar povzner_gap(Scalar x, Scalar y, Scalar p, Scalar gamma) {
  return povzner_terms(x, y, p, gamma).gap;
}

template <typename Scalar>
struct ModulusRatio {
  Scalar ratio_b = 0;
  Scalar ratio_sigma = 0;
};

/// Local Lipschitz moduli of B and sigma:
///   |B(x)-B(y)|       / (|x-y| (|x|^g + |y|^g)),
///   ||s(x)-s(y)||_F   / (|x-y| (|x|^(g/2) + |y|^(g/2))).
/// Both are (0, 0) when x == y.
template <typename DerivedX, typename DerivedY>
ModulusRatio<typename DerivedX::Scalar> kernel_modulus_ratio(const Eigen::MatrixBase<DerivedX>& x,
                                                             const Eigen::MatrixBase<DerivedY>& y,
                                                             typename DerivedX::Scalar gamma) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_gamma(gamma);
  const Scalar dist = (x - y).norm();
  if (dist == Scalar(0)) return {};
  const auto kx = eval_pair_kernels(x, gamma);
  const auto ky = eval_pair_kernels(y, gamma);
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  const Scalar denom_b = dist * (detail::pow0(nx, gamma) + detail::pow0(ny, gamma));
  const Scalar denom_s = dist * (detail::pow0(nx, gamma / 2) + detail::pow0(ny, gamma / 2));
  return {(kx.b_vector - ky.b_vector).norm() / denom_b,
          (kx.sigma_matrix - ky.sigma_matrix).norm() / denom_s};
}

}  // namespace kaclab
