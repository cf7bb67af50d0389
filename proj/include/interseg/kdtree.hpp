#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace interseg {

/// Static k-d tree over points in R^Dim. Built once, queried read-only, so a
/// const tree is safe to share across threads.
template <std::size_t Dim>
class KdTree {
 public:
  using Point = std::array<double, Dim>;

  KdTree() = default;

  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!order_.empty()) build(0, order_.size(), 0);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& point(std::uint32_t i) const { return points_[i]; }

  /// Calls fn(index, squared_distance) for every point within `radius`.
  template <typename Fn>
  void radius_search(const Point& q, double radius, Fn&& fn) const {
    if (order_.empty()) return;
    const double r2 = radius * radius;
    struct Frame {
      std::size_t lo, hi;
      int axis;
    };
    Frame stack[96];
    int top = 0;
    stack[top++] = {0, order_.size(), 0};
    while (top > 0) {
      const Frame f = stack[--top];
      if (f.hi - f.lo <= kLeaf) {
        for (std::size_t k = f.lo; k < f.hi; ++k) {
          const double d2 = dist2(points_[order_[k]], q);
          if (d2 <= r2) fn(order_[k], d2);
        }
        continue;
      }
      const std::size_t mid = (f.lo + f.hi) / 2;
      const Point& p = points_[order_[mid]];
      const double d2 = dist2(p, q);
      if (d2 <= r2) fn(order_[mid], d2);
      const double diff = q[f.axis] - p[f.axis];
      const int next = (f.axis + 1) % static_cast<int>(Dim);
      if (diff <= radius) stack[top++] = {f.lo, mid, next};
      if (diff >= -radius) stack[top++] = {mid + 1, f.hi, next};
    }
  }

  /// Index of the nearest point (smallest index among exact ties), or -1.
  std::int64_t nearest(const Point& q) const {
    if (order_.empty()) return -1;
    std::int64_t best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, order_.size(), 0, q, best, best_d2);
    return best;
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  static double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) {
      const double v = a[d] - b[d];
      s += v * v;
    }
    return s;
  }

  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= kLeaf) return;
    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const int next = (axis + 1) % static_cast<int>(Dim);
    build(lo, mid, next);
    build(mid + 1, hi, next);
  }

  void consider(std::uint32_t idx, const Point& q, std::int64_t& best,
                double& best_d2) const {
    const double d2 = dist2(points_[idx], q);
    if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
      best_d2 = d2;
      best = idx;
    }
  }

  void nearest_rec(std::size_t lo, std::size_t hi, int axis, const Point& q,
                   std::int64_t& best, double& best_d2) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t k = lo; k < hi; ++k) consider(order_[k], q, best, best_d2);
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    const Point& p = points_[order_[mid]];
    consider(order_[mid], q, best, best_d2);
    const double diff = q[axis] - p[axis];
    const int next = (axis + 1) % static_cast<int>(Dim);
    const bool left_first = diff <= 0;
    if (left_first) {
      nearest_rec(lo, mid, next, q, best, best_d2);
      if (diff * diff <= best_d2) nearest_rec(mid + 1, hi, next, q, best, best_d2);
    } else {
      nearest_rec(mid + 1, hi, next, q, best, best_d2);
      if (diff * diff <= best_d2) nearest_rec(lo, mid, next, q, best, best_d2);
    }
  }

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
};

}  // namespace interseg
