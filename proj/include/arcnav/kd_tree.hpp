#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace arcnav {

/// Static 3-d tree over a point set with exact k-nearest-neighbor search.
/// Built once (median splits), queried from any number of threads.
class KdTree3 {
 public:
  struct Neighbor {
    int index{-1};
    double distance{0.0};
  };

  KdTree3() = default;

  explicit KdTree3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    axis_.assign(points_.size(), 0);
    if (!order_.empty()) build(0, static_cast<int>(order_.size()), 0);
  }

  std::size_t size() const { return points_.size(); }
  const Eigen::Vector3d& point(int index) const { return points_[index]; }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

  /// The k nearest points by Euclidean distance, sorted ascending. Returns
  /// fewer when the cloud is smaller than k.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const {
    std::vector<Neighbor> heap;  // max-heap on distance
    if (k <= 0 || order_.empty()) return heap;
    heap.reserve(k);
    search(0, static_cast<int>(order_.size()), query, k, heap);
    std::sort_heap(heap.begin(), heap.end(), heap_cmp);
    return heap;
  }

 private:
  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;       // implicit balanced tree over points_
  std::vector<std::uint8_t> axis_;  // split axis per subtree root slot

  static bool heap_cmp(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance;
  }

  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int mid = lo + (hi - lo) / 2;
    // Split on the axis of largest spread for better-balanced boxes.
    Eigen::Vector3d mn = points_[order_[lo]], mx = points_[order_[lo]];
    for (int i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    int ax = 0;
    (mx - mn).maxCoeff(&ax);
    axis_[mid] = static_cast<std::uint8_t>(ax);
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) { return points_[a][ax] < points_[b][ax]; });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void search(int lo, int hi, const Eigen::Vector3d& q, int k,
              std::vector<Neighbor>& heap) const {
    if (hi <= lo) return;
    const int mid = lo + (hi - lo) / 2;
    const int idx = order_[mid];
    const double d = (points_[idx] - q).norm();
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back({idx, d});
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    } else if (d < heap.front().distance) {
      std::pop_heap(heap.begin(), heap.end(), heap_cmp);
      heap.back() = {idx, d};
      std::push_heap(heap.begin(), heap.end(), heap_cmp);
    }
    if (hi - lo == 1) return;
    const int ax = axis_[mid];
    const double delta = q[ax] - points_[idx][ax];
    const bool left_first = delta < 0.0;
    const int l_lo = lo, l_hi = mid, r_lo = mid + 1, r_hi = hi;
    if (left_first) {
      search(l_lo, l_hi, q, k, heap);
      if (static_cast<int>(heap.size()) < k || std::abs(delta) < heap.front().distance)
        search(r_lo, r_hi, q, k, heap);
    } else {
      search(r_lo, r_hi, q, k, heap);
      if (static_cast<int>(heap.size()) < k || std::abs(delta) < heap.front().distance)
        search(l_lo, l_hi, q, k, heap);
    }
  }
};

}  // namespace arcnav
