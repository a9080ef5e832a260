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

#include "kaclab/transport.hpp"

#include "kaclab/philox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kaclab {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw DomainError("solve_assignment: cost matrix must be square");
  if (!cost.allFinite()) throw InputError("solve_assignment: non-finite cost");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Row-by-row augmentation along shortest alternating paths in the reduced costs.
  std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
  std::vector<Eigen::Index> col_for_row(n, -1), row_for_col(n, -1), path(n);
  std::vector<char> row_seen(n), col_seen(n);
  std::vector<Eigen::Index> remaining(n);

  for (Eigen::Index cur = 0; cur < n; ++cur) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(row_seen.begin(), row_seen.end(), 0);
    std::fill(col_seen.begin(), col_seen.end(), 0);
    std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});
    Eigen::Index n_remaining = n;
    double min_val = 0.0;
    Eigen::Index i = cur;
    Eigen::Index sink = -1;
    while (sink == -1) {
      row_seen[i] = 1;
      Eigen::Index best_slot = -1;
      double lowest = kInf;
      for (Eigen::Index s = 0; s < n_remaining; ++s) {
        const Eigen::Index j = remaining[s];
        const double r = min_val + cost(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = i;
          shortest[j] = r;
        }
        // Prefer a free column on ties so the path ends as early as possible.
        if (shortest[j] < lowest || (shortest[j] == lowest && row_for_col[j] == -1)) {
          lowest = shortest[j];
          best_slot = s;
        }
      }
      min_val = lowest;
      const Eigen::Index j = remaining[best_slot];
      col_seen[j] = 1;
      remaining[best_slot] = remaining[--n_remaining];
      if (row_for_col[j] == -1) {
        sink = j;
      } else {
        i = row_for_col[j];
      }
    }

    u[cur] += min_val;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (row_seen[r] && r != cur) u[r] += min_val - shortest[col_for_row[r]];
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      if (col_seen[c]) v[c] -= min_val - shortest[c];
    }

    for (Eigen::Index j = sink;;) {
      const Eigen::Index r = path[j];
      row_for_col[j] = r;
      std::swap(col_for_row[r], j);
      if (r == cur) break;
    }
  }

  Assignment out;
  out.perm.assign(col_for_row.begin(), col_for_row.end());
  for (Eigen::Index r = 0; r < n; ++r) out.cost += cost(r, out.perm[r]);
  return out;
}

Eigen::MatrixXd squared_distance_matrix(const Cloud& a, const Cloud& b) {
  if (a.rows() != b.rows()) throw DomainError("squared_distance_matrix: dimension mismatch");
  Eigen::MatrixXd c(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) c(i, j) = (a.col(i) - b.col(j)).squaredNorm();
  }
  return c;
}

namespace {

void check_clouds(const Cloud& a, const Cloud& b, const char* who) {
  if (a.cols() < 1 || b.cols() < 1) throw DomainError(std::string(who) + ": empty cloud");
  if (a.cols() != b.cols()) {
    throw DomainError(std::string(who) + ": unequal point counts (" + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.cols()) + "); resample to a common size first");
  }
  if (a.rows() != b.rows()) throw DomainError(std::string(who) + ": dimension mismatch");
  if (!a.allFinite() || !b.allFinite()) throw InputError(std::string(who) + ": non-finite point");
}

}  // namespace

double w2_exact(const Cloud& a, const Cloud& b) {
  check_clouds(a, b, "w2_exact");
  if (a.cols() > kExactW2Cap) {
    throw DomainError("w2_exact: " + std::to_string(a.cols()) + " points exceed the exact-solver cap of " +
                      std::to_string(kExactW2Cap) + "; use w2_sliced or subsample");
  }
  const auto match = solve_assignment(squared_distance_matrix(a, b));
  return std::sqrt(std::max(0.0, match.cost / double(a.cols())));
}

SlicedW2 w2_sliced(const Cloud& a, const Cloud& b, int n_projections, std::uint64_t seed) {
  check_clouds(a, b, "w2_sliced");
  if (n_projections < 1) throw DomainError("w2_sliced: n_projections must be >= 1");
  const Eigen::Index d = a.rows();
  const Eigen::Index k = a.cols();
  PhiloxStream rng(seed, StreamDomain::kProjection, 0);
  std::vector<double> per(n_projections);
  std::vector<double> pa(k), pb(k);
  Eigen::VectorXd theta(d);
  for (int s = 0; s < n_projections; ++s) {
    do {
      for (Eigen::Index c = 0; c < d; ++c) theta(c) = rng.normal();
    } while (theta.norm() == 0.0);
    theta.normalize();
    for (Eigen::Index i = 0; i < k; ++i) {
      pa[i] = theta.dot(a.col(i));
      pb[i] = theta.dot(b.col(i));
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) acc += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    per[s] = acc / double(k);
  }
  const double mean = std::accumulate(per.begin(), per.end(), 0.0) / n_projections;
  double var = 0.0;
  for (double x : per) var += (x - mean) * (x - mean);
  var = n_projections > 1 ? var / (n_projections - 1) : 0.0;
  SlicedW2 out;
  out.distance = std::sqrt(mean);
  // Delta method for the square root of a mean.
  const double se_mean = std::sqrt(var / n_projections);
  out.stderr = mean > 0.0 ? se_mean / (2.0 * out.distance) : std::sqrt(se_mean);
  return out;
}

Cloud subsample(const Cloud& pool, Eigen::Index k, std::uint64_t seed, std::uint64_t lane) {
  const Eigen::Index n = pool.cols();
  if (k < 1 || k > n) throw DomainError("subsample: size must lie in 1 .. pool size");
  if (k == n) return pool;
  // Partial Fisher-Yates over an index vector.
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  PhiloxStream rng(seed, StreamDomain::kSubsample, lane);
  Cloud out(pool.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + Eigen::Index(rng.below(std::uint64_t(n - i)));
    std::swap(idx[i], idx[j]);
    out.col(i) = pool.col(idx[i]);
  }
  return out;
}

}  // namespace kaclab
