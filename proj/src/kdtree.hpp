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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace kaclab::detail {

/// Static kd-tree over the columns of a 3 x n matrix for k-nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& points) : pts_(points), index_(std::size_t(points.cols())) {
    std::iota(index_.begin(), index_.end(), Eigen::Index{0});
    if (!index_.empty()) build(0, Eigen::Index(index_.size()));
  }

  /// Distance from point `self` to its k-th nearest other point.
  double kth_distance(Eigen::Index self, int k) const {
    std::priority_queue<double> heap;  // largest squared distance on top
    search(0, self, std::size_t(k), heap);
    return std::sqrt(heap.top());
  }

 private:
  static constexpr Eigen::Index kLeaf = 12;

  struct Node {
    Eigen::Index begin = 0, end = 0;
    int axis = -1;  ///< -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end) {
    const int id = int(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf) return id;
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (Eigen::Index k = begin; k < end; ++k) {
      lo = lo.cwiseMin(pts_.col(index_[k]));
      hi = hi.cwiseMax(pts_.col(index_[k]));
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) { return pts_(axis, a) < pts_(axis, b); });
    const double split = pts_(axis, index_[mid]);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(int id, Eigen::Index self, std::size_t k, std::priority_queue<double>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Eigen::Index s = node.begin; s < node.end; ++s) {
        const Eigen::Index j = index_[s];
        if (j == self) continue;
        const double d2 = (pts_.col(j) - pts_.col(self)).squaredNorm();
        if (heap.size() < k) {
          heap.push(d2);
        } else if (d2 < heap.top()) {
          heap.pop();
          heap.push(d2);
        }
      }
      return;
    }
    const double delta = pts_(node.axis, self) - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, self, k, heap);
    if (heap.size() < k || delta * delta < heap.top()) search(far, self, k, heap);
  }

  const Eigen::MatrixXd& pts_;
  std::vector<Eigen::Index> index_;
  std::vector<Node> nodes_;
};

}  // namespace kaclab::detail
