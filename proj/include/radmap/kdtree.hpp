#pragma once

#include <utility>
#include <vector>

#include "radmap/types.hpp"

namespace radmap {

/// Static 3D kd-tree over a point set. Queries are exact; ties are broken
/// by the lowest point index so results are deterministic. Sets smaller
/// than 64 points fall back to a linear scan.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

  /// Index of the nearest point and its squared distance. Empty tree: {-1, inf}.
  std::pair<int, double> nearest(const Vec3& query) const;

  /// Indices with distance <= radius, ascending index order.
  std::vector<int> radius_search(const Vec3& query, double radius) const;

  /// k nearest indices ordered by (distance, index). Returns fewer when
  /// the set is smaller than k.
  std::vector<int> knn(const Vec3& query, int k) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf payload range into order_
    int end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
  };

  int build(int begin, int end);
  void nearest_rec(int node, const Vec3& q, int& best, double& best_d2) const;
  void radius_rec(int node, const Vec3& q, double r2, std::vector<int>& out) const;
  void knn_rec(int node, const Vec3& q, int k,
               std::vector<std::pair<double, int>>& heap) const;

  static constexpr int kLeafSize = 16;
  static constexpr std::size_t kBruteForceBelow = 64;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace radmap
