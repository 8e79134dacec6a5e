#include "radmap/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace radmap {

namespace {

double box_dist2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double v = q[a];
    if (v < lo[a]) {
      const double d = lo[a] - v;
      d2 += d * d;
    } else if (v > hi[a]) {
      const double d = v - hi[a];
      d2 += d * d;
    }
  }
  return d2;
}

}  // namespace

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() < kBruteForceBelow) return;
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int KdTree3::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (int i = begin; i < end; ++i) {
    const Vec3& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
    node.lo = node.lo.cwiseMin(p);
    node.hi = node.hi.cwiseMax(p);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  const Vec3 extent = node.hi - node.lo;
  int axis = 0;
  if (extent[1] > extent[axis]) axis = 1;
  if (extent[2] > extent[axis]) axis = 2;
  if (extent[axis] <= 0.0) return id;  // all points coincide

  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_[static_cast<std::size_t>(a)][axis];
                     const double pb = points_[static_cast<std::size_t>(b)][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::pair<int, double> KdTree3::nearest(const Vec3& query) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (root_ < 0) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double d2 = (points_[i] - query).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(i);
      }
    }
    return {best, best_d2};
  }
  nearest_rec(root_, query, best, best_d2);
  return {best, best_d2};
}

void KdTree3::nearest_rec(int node_id, const Vec3& q, int& best, double& best_d2) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (box_dist2(q, node.lo, node.hi) > best_d2) return;
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[static_cast<std::size_t>(i)];
      const double d2 = (points_[static_cast<std::size_t>(idx)] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  // Descend into the closer child first; visit the other unless provably
  // farther than the current best (strictly, to preserve the index tie rule).
  const int near = q[node.axis] < node.split ? node.left : node.right;
  const int far = near == node.left ? node.right : node.left;
  nearest_rec(near, q, best, best_d2);
  nearest_rec(far, q, best, best_d2);
}

std::vector<int> KdTree3::radius_search(const Vec3& query, double radius) const {
  std::vector<int> out;
  const double r2 = radius * radius;
  if (root_ < 0) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if ((points_[i] - query).squaredNorm() <= r2) out.push_back(static_cast<int>(i));
    }
    return out;
  }
  radius_rec(root_, query, r2, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree3::radius_rec(int node_id, const Vec3& q, double r2, std::vector<int>& out) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (box_dist2(q, node.lo, node.hi) > r2) return;
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[static_cast<std::size_t>(i)];
      if ((points_[static_cast<std::size_t>(idx)] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  radius_rec(node.left, q, r2, out);
  radius_rec(node.right, q, r2, out);
}

std::vector<int> KdTree3::knn(const Vec3& query, int k) const {
  std::vector<std::pair<double, int>> heap;  // max-heap on (d2, -index)
  auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;  // larger index is "worse"
  };
  auto push = [&](double d2, int idx) {
    if (static_cast<int>(heap.size()) < k) {
      heap.emplace_back(d2, idx);
      std::push_heap(heap.begin(), heap.end(), cmp);
    } else if (cmp({d2, idx}, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), cmp);
      heap.back() = {d2, idx};
      std::push_heap(heap.begin(), heap.end(), cmp);
    }
  };
  if (root_ < 0) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      push((points_[i] - query).squaredNorm(), static_cast<int>(i));
    }
  } else {
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const int node_id = stack.back();
      stack.pop_back();
      const Node& node = nodes_[static_cast<std::size_t>(node_id)];
      if (static_cast<int>(heap.size()) == k &&
          box_dist2(query, node.lo, node.hi) > heap.front().first) {
        continue;
      }
      if (node.axis < 0) {
        for (int i = node.begin; i < node.end; ++i) {
          const int idx = order_[static_cast<std::size_t>(i)];
          push((points_[static_cast<std::size_t>(idx)] - query).squaredNorm(), idx);
        }
        continue;
      }
      const int near = query[node.axis] < node.split ? node.left : node.right;
      const int far = near == node.left ? node.right : node.left;
      stack.push_back(far);
      stack.push_back(near);  // near child popped first
    }
  }
  std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& [d2, idx] : heap) out.push_back(idx);
  return out;
}

}  // namespace radmap
