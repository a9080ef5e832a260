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
#include "kaclab/config.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace kaclab {

struct Estimate {
  double value = 0.0;
  double stderr = 0.0;
};

/// Samples of one logged time grouped by replica (one 3 x N matrix per replica).
using ReplicaSamples = std::vector<Velocities>;

/// Mean over groups and its standard error; with a single group the samples inside it are
/// treated as independent.
Estimate group_mean(const std::vector<std::vector<double>>& per_group);

/// Delete-one-group jackknife of a scalar functional of group summaries.
Estimate jackknife(std::size_t groups, const std::function<double(std::ptrdiff_t skip)>& estimator);

/// E|v|^p of the one-particle marginal, pooled over all particles (exchangeability) with
/// replica-level standard error.
Estimate polynomial_moment(const ReplicaSamples& samples, double p);

struct ExpMomentSpec {
  double xi = 0.1;
  double gamma = 0.5;
  double beta_exponent() const { return 4.0 / (2.0 + gamma); }
};

struct ExpMomentEstimate {
  double value = 1.0;      ///< +inf when not representable
  double stderr = 0.0;
  double log_value = 0.0;  ///< always finite
  bool tail_flag = false;  ///< top 1% of samples carry more than half of the sum
  bool overflow = false;   ///< value only available through log_value
};

/// E exp(xi |v|^(4/(2+gamma))).
ExpMomentEstimate exponential_moment(const ReplicaSamples& samples, const ExpMomentSpec& spec);

/// Kozachenko-Leonenko differential entropy in nats; samples are the columns.
double knn_entropy(const Eigen::MatrixXd& samples, int neighbor_k = 4);

/// Across-replica Cov(phi(V^1), phi(V^2)) from the all-pairs U-statistic of each replica.
Estimate chaos_covariance(const ReplicaSamples& samples, ChaosStatistic statistic);

/// Smooth test function on (R^3)^m with exact first and second derivatives.
class TestFunction {
 public:
  virtual ~TestFunction() = default;
  virtual Eigen::Index arity() const = 0;  ///< m, or 0 for "any"
  virtual double value(const Velocities& v) const = 0;
  virtual Vector3d gradient(const Velocities& v, Eigen::Index i) const = 0;
  virtual Matrix3d hessian(const Velocities& v, Eigen::Index i, Eigen::Index j) const = 0;
};

/// prod_k exp(-|v_k - c_k|^2 / w^2).
class BumpProduct final : public TestFunction {
 public:
  BumpProduct(std::vector<Vector3d> centers, double width);
  Eigen::Index arity() const override { return Eigen::Index(centers_.size()); }
  double value(const Velocities& v) const override;
  Vector3d gradient(const Velocities& v, Eigen::Index i) const override;
  Matrix3d hessian(const Velocities& v, Eigen::Index i, Eigen::Index j) const override;

 private:
  std::vector<Vector3d> centers_;
  double width_;
};

/// sum_k |v_k|^2.
class KineticEnergy final : public TestFunction {
 public:
  Eigen::Index arity() const override { return 0; }
  double value(const Velocities& v) const override { return v.squaredNorm(); }
  Vector3d gradient(const Velocities& v, Eigen::Index i) const override { return 2.0 * v.col(i); }
  Matrix3d hessian(const Velocities&, Eigen::Index i, Eigen::Index j) const override {
    return i == j ? Matrix3d(2.0 * Matrix3d::Identity()) : Matrix3d(Matrix3d::Zero());
  }
};

class ConstantFunction final : public TestFunction {
 public:
  explicit ConstantFunction(double c = 1.0) : c_(c) {}
  Eigen::Index arity() const override { return 0; }
  double value(const Velocities&) const override { return c_; }
  Vector3d gradient(const Velocities&, Eigen::Index) const override { return Vector3d::Zero(); }
  Matrix3d hessian(const Velocities&, Eigen::Index, Eigen::Index) const override { return Matrix3d::Zero(); }

 private:
  double c_;
};

enum class HierarchyMode { kFiniteN, kHierarchyLimit };

struct BbgkyOptions {
  int m = 1;
  HierarchyMode mode = HierarchyMode::kFiniteN;
  /// Outside partners per m-tuple for the (N-m)/N term; 0 uses every outside particle.
  int max_partners = 16;
};

/// Monte Carlo residual LHS - RHS of the weak hierarchy over the logged window:
///   <phi>(T) - <phi>(0) - int_0^T [ pair terms + factor * partner terms ] dt,
/// with trapezoid time integration over the given frames. frames is [time][replica].
Estimate bbgky_residual(const std::vector<std::vector<Velocities>>& frames, const std::vector<double>& times,
                        double gamma, const TestFunction& phi, const BbgkyOptions& opts);

/// Least-squares slope of log(m_p^(1/p)) against log p.
double moment_growth_exponent(const std::vector<double>& p_values, const std::vector<double>& moments);

struct MannKendall {
  double s = 0.0;
  double z = 0.0;
  double p_increasing = 1.0;  ///< one-sided p-value for an upward trend
  double p_two_sided = 1.0;
};

MannKendall mann_kendall(const std::vector<double>& series);

/// Time-indexed moment estimates of a simulation.
struct MomentReport {
  std::vector<double> times;
  std::vector<double> p_values;
  std::vector<std::vector<Estimate>> moments;  ///< [time][p]
  std::vector<double> xi_values;
  std::vector<std::vector<ExpMomentEstimate>> exp_moments;  ///< [time][xi]
  std::vector<double> entropy;                              ///< empty unless requested
  std::vector<Estimate> chaos_cov;                          ///< empty unless requested
  std::vector<ConservedQuantities> conserved;               ///< replica 0
};

MomentReport moment_report(const std::vector<double>& times, const std::vector<ReplicaSamples>& frames,
                           const SimConfig& cfg);

void write_moment_csv(const std::string& path, const MomentReport& report);
void write_exp_moment_csv(const std::string& path, const MomentReport& report);

}  // namespace kaclab
