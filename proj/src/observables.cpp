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

#include "kaclab/observables.hpp"

#include "kaclab/ensemble.hpp"
#include "kaclab/kernels.hpp"
#include "kaclab/philox.hpp"
#include "kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <numeric>

namespace kaclab {

namespace {

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double sample_stderr(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size() - 1) / double(xs.size()));
}

std::size_t total_samples(const ReplicaSamples& samples) {
  std::size_t n = 0;
  for (const auto& r : samples) n += std::size_t(r.cols());
  return n;
}

std::vector<std::vector<double>> per_particle(const ReplicaSamples& samples,
                                              const std::function<double(const Vector3d&)>& f) {
  std::vector<std::vector<double>> out(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    out[r].resize(std::size_t(samples[r].cols()));
    for (Eigen::Index i = 0; i < samples[r].cols(); ++i) out[r][std::size_t(i)] = f(samples[r].col(i));
  }
  return out;
}

double digamma_integer(std::size_t n) {
  double h = 0.0;
  for (std::size_t j = 1; j < n; ++j) h += 1.0 / double(j);
  return h - 0.57721566490153286061;
}

}  // namespace

Estimate group_mean(const std::vector<std::vector<double>>& per_group) {
  if (per_group.empty()) throw DomainError("group_mean: no groups");
  if (per_group.size() == 1) {
    if (per_group[0].empty()) throw DomainError("group_mean: empty group");
    return {mean_of(per_group[0]), sample_stderr(per_group[0])};
  }
  std::vector<double> means;
  means.reserve(per_group.size());
  for (const auto& g : per_group) {
    if (g.empty()) throw DomainError("group_mean: empty group");
    means.push_back(mean_of(g));
  }
  return {mean_of(means), sample_stderr(means)};
}

Estimate jackknife(std::size_t groups, const std::function<double(std::ptrdiff_t skip)>& estimator) {
  if (groups < 2) throw DomainError("jackknife: need at least 2 groups");
  const double full = estimator(-1);
  std::vector<double> loo(groups);
  for (std::size_t g = 0; g < groups; ++g) loo[g] = estimator(std::ptrdiff_t(g));
  const double m = mean_of(loo);
  double s = 0.0;
  for (double x : loo) s += (x - m) * (x - m);
  return {full, std::sqrt(s * double(groups - 1) / double(groups))};
}

Estimate polynomial_moment(const ReplicaSamples& samples, double p) {
  if (total_samples(samples) < 2) throw DomainError("polynomial_moment: need at least 2 samples");
  if (!(p >= 0.0)) throw DomainError("polynomial_moment: p must be >= 0");
  return group_mean(per_particle(samples, [p](const Vector3d& v) {
    return detail::norm_power(v.squaredNorm(), p);
  }));
}

ExpMomentEstimate exponential_moment(const ReplicaSamples& samples, const ExpMomentSpec& spec) {
  if (!(spec.xi > 0.0)) throw DomainError("exponential_moment: xi must be > 0");
  detail::check_gamma(spec.gamma);
  if (total_samples(samples) < 1) throw DomainError("exponential_moment: no samples");
  const double beta = spec.beta_exponent();
  const auto exponents = per_particle(samples, [&](const Vector3d& v) {
    return spec.xi * detail::norm_power(v.squaredNorm(), beta);
  });

  std::vector<double> flat;
  for (const auto& g : exponents) flat.insert(flat.end(), g.begin(), g.end());
  const double top = *std::max_element(flat.begin(), flat.end());
  double scaled_sum = 0.0;
  for (double x : flat) scaled_sum += std::exp(x - top);

  ExpMomentEstimate out;
  out.log_value = top + std::log(scaled_sum / double(flat.size()));

  // Tail dominance: share of the sum carried by the largest 1% of the terms.
  std::vector<double> sorted = flat;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n_top = std::max<std::size_t>(1, std::size_t(std::ceil(0.01 * double(sorted.size()))));
  double top_sum = 0.0;
  for (std::size_t k = 0; k < n_top; ++k) top_sum += std::exp(sorted[k] - top);
  out.tail_flag = top_sum > 0.5 * scaled_sum;

  if (top > 700.0) {
    out.overflow = true;
    out.value = std::numeric_limits<double>::infinity();
    out.stderr = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<std::vector<double>> values = exponents;
  for (auto& g : values) {
    for (double& x : g) x = std::exp(x);
  }
  const Estimate e = group_mean(values);
  out.value = e.value;
  out.stderr = e.stderr;
  return out;
}

double knn_entropy(const Eigen::MatrixXd& samples, int neighbor_k) {
  const Eigen::Index n = samples.cols();
  if (samples.rows() != 3) throw DomainError("knn_entropy: samples must be 3-dimensional");
  if (neighbor_k < 1 || n <= neighbor_k) throw DomainError("knn_entropy: need n > neighbor_k >= 1");
  if (!samples.allFinite()) throw InputError("knn_entropy: non-finite sample");

  auto log_distance_sum = [&](const Eigen::MatrixXd& pts, bool& degenerate) {
    const detail::KdTree tree(pts);
    double acc = 0.0;
    degenerate = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eps = tree.kth_distance(i, neighbor_k);
      if (eps <= 0.0) {
        degenerate = true;
        return 0.0;
      }
      acc += std::log(eps);
    }
    return acc;
  };

  bool degenerate = false;
  double log_sum = log_distance_sum(samples, degenerate);
  if (degenerate) {
    std::cerr << "warning: knn_entropy: duplicate points, jittering by 1e-12\n";
    Eigen::MatrixXd jittered = samples;
    PhiloxStream rng(0, StreamDomain::kSubsample, 0x6a6974746572ull);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) jittered(c, i) += 1e-12 * rng.normal();
    }
    log_sum = log_distance_sum(jittered, degenerate);
    if (degenerate) throw DomainError("knn_entropy: more than neighbor_k coincident points");
  }
  const double log_unit_ball = std::log(4.0 * std::numbers::pi / 3.0);
  return digamma_integer(std::size_t(n)) - digamma_integer(std::size_t(neighbor_k)) + log_unit_ball +
         3.0 * log_sum / double(n);
}

Estimate chaos_covariance(const ReplicaSamples& samples, ChaosStatistic statistic) {
  if (samples.size() < 8) throw DomainError("chaos_covariance: need at least 8 replicas");
  if (statistic == ChaosStatistic::kNone) throw DomainError("chaos_covariance: no statistic selected");
  const std::size_t r_count = samples.size();
  std::vector<double> pair_mean(r_count), single_mean(r_count);
  for (std::size_t r = 0; r < r_count; ++r) {
    const Eigen::Index n = samples[r].cols();
    if (n < 2) throw DomainError("chaos_covariance: replicas need at least 2 particles");
    Eigen::ArrayXd phi = statistic == ChaosStatistic::kSpeedSquared
                             ? Eigen::ArrayXd(samples[r].colwise().squaredNorm().transpose())
                             : Eigen::ArrayXd(samples[r].row(0).transpose());
    const double s = phi.sum();
    const double q = phi.square().sum();
    pair_mean[r] = (s * s - q) / (double(n) * double(n - 1));
    single_mean[r] = s / double(n);
  }
  // E[phi(V1) phi(V2)] - E[phi]^2, with E[phi]^2 taken from distinct replicas so that the
  // estimator is unbiased.
  return jackknife(r_count, [&](std::ptrdiff_t skip) {
    double sp = 0.0, sm = 0.0, sm2 = 0.0;
    double count = 0.0;
    for (std::size_t r = 0; r < r_count; ++r) {
      if (std::ptrdiff_t(r) == skip) continue;
      sp += pair_mean[r];
      sm += single_mean[r];
      sm2 += single_mean[r] * single_mean[r];
      count += 1.0;
    }
    return sp / count - (sm * sm - sm2) / (count * (count - 1.0));
  });
}

BumpProduct::BumpProduct(std::vector<Vector3d> centers, double width) : centers_(std::move(centers)), width_(width) {
  if (centers_.empty()) throw DomainError("BumpProduct: need at least one centre");
  if (!(width_ > 0.0)) throw DomainError("BumpProduct: width must be > 0");
}

double BumpProduct::value(const Velocities& v) const {
  double s = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) s += (v.col(Eigen::Index(k)) - centers_[k]).squaredNorm();
  return std::exp(-s / (width_ * width_));
}

Vector3d BumpProduct::gradient(const Velocities& v, Eigen::Index i) const {
  const double w2 = width_ * width_;
  return (-2.0 / w2) * (v.col(i) - centers_[std::size_t(i)]) * value(v);
}

Matrix3d BumpProduct::hessian(const Velocities& v, Eigen::Index i, Eigen::Index j) const {
  const double w2 = width_ * width_;
  const Vector3d gi = (-2.0 / w2) * (v.col(i) - centers_[std::size_t(i)]);
  const Vector3d gj = (-2.0 / w2) * (v.col(j) - centers_[std::size_t(j)]);
  Matrix3d h = gi * gj.transpose();
  if (i == j) h -= (2.0 / w2) * Matrix3d::Identity();
  return h * value(v);
}

Estimate bbgky_residual(const std::vector<std::vector<Velocities>>& frames, const std::vector<double>& times,
                        double gamma, const TestFunction& phi, const BbgkyOptions& opts) {
  if (frames.size() != times.size() || frames.size() < 2) {
    throw DomainError("bbgky_residual: need at least two logged frames matching the time grid");
  }
  const std::size_t replicas = frames.front().size();
  if (replicas < 1) throw DomainError("bbgky_residual: no replicas");
  const Eigen::Index n = frames.front().front().cols();
  const Eigen::Index m = opts.m;
  if (m < 1 || m > n) throw DomainError("bbgky_residual: m must lie in 1 .. N");
  if (phi.arity() != 0 && phi.arity() != m) throw DomainError("bbgky_residual: test function arity differs from m");
  const bool finite_n = opts.mode == HierarchyMode::kFiniteN;
  const double partner_factor = finite_n ? double(n - m) / double(n) : 1.0;
  const Eigen::Index outside = n - m;
  const Eigen::Index partners =
      (opts.max_partners <= 0 || outside <= opts.max_partners) ? outside : Eigen::Index(opts.max_partners);
  const Eigen::Index tuples = n / m;

  auto checked = [&](double x, const Velocities& at) {
    if (!std::isfinite(x)) {
      throw NumericalFault("bbgky_residual: test function not finite at tuple starting (" +
                               std::to_string(at(0, 0)) + ", " + std::to_string(at(1, 0)) + ", " +
                               std::to_string(at(2, 0)) + ")",
                           0);
    }
    return x;
  };

  // Per replica and frame: mean of phi over tuples, and the mean generator integrand.
  auto frame_terms = [&](const Velocities& v) {
    double phi_sum = 0.0, gen_sum = 0.0;
    for (Eigen::Index g = 0; g < tuples; ++g) {
      const Velocities block = v.middleCols(g * m, m);
      phi_sum += checked(phi.value(block), block);
      double gen = 0.0;
      if (finite_n) {
        for (Eigen::Index i = 0; i < m; ++i) {
          for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const auto k = eval_pair_kernels(Vector3d(block.col(i) - block.col(j)), gamma);
            gen += ((k.a_matrix.cwiseProduct(phi.hessian(block, i, i) - phi.hessian(block, i, j))).sum() +
                    k.b_vector.dot(phi.gradient(block, i) - phi.gradient(block, j))) /
                   double(n);
          }
        }
      }
      if (partners > 0 && partner_factor != 0.0) {
        double outside_sum = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          const Matrix3d hii = phi.hessian(block, i, i);
          const Vector3d gi = phi.gradient(block, i);
          double acc = 0.0;
          for (Eigen::Index s = 0; s < partners; ++s) {
            const Eigen::Index p = (g * m + m + s) % n;
            const auto k = eval_pair_kernels(Vector3d(block.col(i) - v.col(p)), gamma);
            acc += k.a_matrix.cwiseProduct(hii).sum() + 2.0 * k.b_vector.dot(gi);
          }
          outside_sum += acc / double(partners);
        }
        gen += partner_factor * outside_sum;
      }
      gen_sum += checked(gen, block);
    }
    return std::pair{phi_sum / double(tuples), gen_sum / double(tuples)};
  };

  std::vector<double> residuals(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    std::vector<double> phis(times.size()), gens(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
      if (frames[t].size() != replicas || frames[t][r].cols() != n) {
        throw DomainError("bbgky_residual: ragged frame data");
      }
      std::tie(phis[t], gens[t]) = frame_terms(frames[t][r]);
    }
    double integral = 0.0;
    for (std::size_t t = 1; t < times.size(); ++t) integral += 0.5 * (times[t] - times[t - 1]) * (gens[t] + gens[t - 1]);
    residuals[r] = phis.back() - phis.front() - integral;
  }
  return {mean_of(residuals), sample_stderr(residuals)};
}

double moment_growth_exponent(const std::vector<double>& p_values, const std::vector<double>& moments) {
  if (p_values.size() != moments.size()) throw DomainError("moment_growth_exponent: size mismatch");
  if (p_values.size() < 4) throw DomainError("moment_growth_exponent: need at least 4 points");
  const std::size_t n = p_values.size();
  Eigen::VectorXd x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(moments[k] > 0.0)) throw DomainError("moment_growth_exponent: moments must be positive");
    if (!(p_values[k] > 0.0)) throw DomainError("moment_growth_exponent: p must be positive");
    x(k) = std::log(p_values[k]);
    y(k) = std::log(moments[k]) / p_values[k];
  }
  const double xm = x.mean();
  const double ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  if (!(sxx > 0.0)) throw DomainError("moment_growth_exponent: p values must not all coincide");
  return ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
}

MannKendall mann_kendall(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 3) throw DomainError("mann_kendall: need at least 3 points");
  MannKendall out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = series[j] - series[i];
      out.s += double((d > 0) - (d < 0));
    }
  }
  // Tie-corrected variance.
  std::vector<double> sorted = series;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = double(j - i);
    tie_term += t * (t - 1) * (2 * t + 5);
    i = j;
  }
  const double dn = double(n);
  const double var = (dn * (dn - 1) * (2 * dn + 5) - tie_term) / 18.0;
  if (var > 0.0) {
    if (out.s > 0) out.z = (out.s - 1) / std::sqrt(var);
    else if (out.s < 0) out.z = (out.s + 1) / std::sqrt(var);
  }
  out.p_increasing = 0.5 * std::erfc(out.z / std::numbers::sqrt2);
  out.p_two_sided = std::erfc(std::abs(out.z) / std::numbers::sqrt2);
  return out;
}

MomentReport moment_report(const std::vector<double>& times, const std::vector<ReplicaSamples>& frames,
                           const SimConfig& cfg) {
  if (times.size() != frames.size()) throw DomainError("moment_report: times and frames differ in length");
  MomentReport rep;
  rep.times = times;
  rep.p_values = cfg.moment_p;
  rep.xi_values = cfg.exp_moment_xi;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& samples = frames[t];
    std::vector<Estimate> row;
    for (double p : cfg.moment_p) row.push_back(polynomial_moment(samples, p));
    rep.moments.push_back(std::move(row));
    std::vector<ExpMomentEstimate> erow;
    for (double xi : cfg.exp_moment_xi) erow.push_back(exponential_moment(samples, {xi, cfg.gamma}));
    rep.exp_moments.push_back(std::move(erow));
    if (cfg.entropy_neighbors > 0) {
      Eigen::MatrixXd pooled(3, Eigen::Index(total_samples(samples)));
      Eigen::Index c = 0;
      for (const auto& r : samples) {
        pooled.middleCols(c, r.cols()) = r;
        c += r.cols();
      }
      rep.entropy.push_back(knn_entropy(pooled, cfg.entropy_neighbors));
    }
    if (cfg.chaos_statistic != ChaosStatistic::kNone && samples.size() >= 8) {
      rep.chaos_cov.push_back(chaos_covariance(samples, cfg.chaos_statistic));
    }
    rep.conserved.push_back(conserved_quantities(samples.front()));
  }
  return rep;
}

void write_moment_csv(const std::string& path, const MomentReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "# kaclab-csv v1 moments\n");
  std::fprintf(f, "time,p,moment,stderr\n");
  for (std::size_t t = 0; t < report.times.size(); ++t) {
    for (std::size_t k = 0; k < report.p_values.size(); ++k) {
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", report.times[t], report.p_values[k], report.moments[t][k].value,
                   report.moments[t][k].stderr);
    }
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path);
}

void write_exp_moment_csv(const std::string& path, const MomentReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "# kaclab-csv v1 exp_moments\n");
  std::fprintf(f, "time,xi,estimate,stderr,tail_flag,log_estimate\n");
  for (std::size_t t = 0; t < report.times.size(); ++t) {
    for (std::size_t k = 0; k < report.xi_values.size(); ++k) {
      const auto& e = report.exp_moments[t][k];
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", report.times[t], report.xi_values[k], e.value, e.stderr,
                   int(e.tail_flag), e.log_value);
    }
  }
  if (std::fclose(f) != 0) throw IoError("write failed for " + path);
}

}  // namespace kaclab
