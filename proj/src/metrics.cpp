#include "radmap/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"
#include "radmap/se3.hpp"

namespace radmap {

namespace {

Se3Pose relative(const Se3Pose& from, const Se3Pose& to) {
  return compose(from.inverse(), to);
}

double deg(double rad) { return rad * 180.0 / M_PI; }

/// Interpolates gt at time t (linear translation, slerp rotation).
Se3Pose interpolate_pose(const Trajectory& gt, double t) {
  const auto& poses = gt.poses;
  if (t <= poses.front().timestamp) return poses.front().pose;
  if (t >= poses.back().timestamp) return poses.back().pose;
  std::size_t hi = 1;
  while (poses[hi].timestamp < t) ++hi;
  const auto& a = poses[hi - 1];
  const auto& b = poses[hi];
  const double u = (t - a.timestamp) / (b.timestamp - a.timestamp);
  Se3Pose out;
  out.translation = (1.0 - u) * a.pose.translation + u * b.pose.translation;
  const Quat qa(a.pose.rotation);
  const Quat qb(b.pose.rotation);
  out.rotation = qa.slerp(u, qb).toRotationMatrix();
  return out;
}

double mean_nn_distance(const std::vector<Vec3>& from, const KdTree3& to_tree) {
  double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i) {
    acc += std::sqrt(to_tree.nearest(from[static_cast<std::size_t>(i)]).second);
  }
  return acc / static_cast<double>(from.size());
}

double fraction_within(const std::vector<Vec3>& from, const KdTree3& to_tree, double thr) {
  const double thr2 = thr * thr;
  std::ptrdiff_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i) {
    if (to_tree.nearest(from[static_cast<std::size_t>(i)]).second < thr2) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(from.size());
}

void check_nonempty(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw Error("point metrics: empty point set");
}

}  // namespace

std::vector<std::pair<Se3Pose, Se3Pose>> associate(const Trajectory& est, const Trajectory& gt,
                                                   const AssociationOptions& options) {
  if (est.empty() || gt.empty()) throw TooShort("associate: empty trajectory");
  std::vector<std::pair<Se3Pose, Se3Pose>> out;
  out.reserve(est.size());
  for (const TimedPose& ep : est.poses) {
    if (options.interpolate) {
      out.emplace_back(ep.pose, interpolate_pose(gt, ep.timestamp));
      continue;
    }
    double best_dt = options.max_skew;
    const TimedPose* best = nullptr;
    for (const TimedPose& gp : gt.poses) {
      const double dt = std::abs(gp.timestamp - ep.timestamp);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &gp;
      }
    }
    if (best != nullptr) out.emplace_back(ep.pose, best->pose);
  }
  return out;
}

std::pair<double, double> rpe_kitti(const Trajectory& est, const Trajectory& gt,
                                    const AssociationOptions& options) {
  const auto pairs = associate(est, gt, options);
  if (pairs.size() < 2) throw TooShort("rpe_kitti: fewer than 2 associated poses");

  // Cumulative gt arc length.
  std::vector<double> arc(pairs.size(), 0.0);
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    arc[i] = arc[i - 1] + (pairs[i].second.translation - pairs[i - 1].second.translation).norm();
  }
  if (arc.back() < 20.0) throw TooShort("rpe_kitti: ground-truth path under 20 m");

  double t_sum = 0.0, r_sum = 0.0;
  int lengths_used = 0;
  for (int length = 20; length <= 160; length += 20) {
    double t_sq = 0.0, r_sq = 0.0;
    int count = 0;
    for (std::size_t start = 0; start < pairs.size(); ++start) {
      // First index at least `length` meters further along the gt path.
      std::size_t end = start;
      while (end < pairs.size() && arc[end] - arc[start] < static_cast<double>(length)) ++end;
      if (end >= pairs.size()) break;
      const Se3Pose est_rel = relative(pairs[start].first, pairs[end].first);
      const Se3Pose gt_rel = relative(pairs[start].second, pairs[end].second);
      const Se3Pose err = compose(gt_rel.inverse(), est_rel);
      t_sq += err.translation.squaredNorm();
      const double r = deg(rotation_angle(err.rotation));
      r_sq += r * r;
      ++count;
    }
    if (count == 0) continue;
    t_sum += std::sqrt(t_sq / count) / static_cast<double>(length);
    r_sum += std::sqrt(r_sq / count) / static_cast<double>(length);
    ++lengths_used;
  }
  if (lengths_used == 0) throw TooShort("rpe_kitti: no usable segment length");
  return {t_sum / lengths_used, r_sum / lengths_used};
}

std::pair<double, double> rpe_framewise(const Trajectory& est, const Trajectory& gt,
                                        const AssociationOptions& options) {
  const auto pairs = associate(est, gt, options);
  if (pairs.size() < 2) throw TooShort("rpe_framewise: fewer than 2 associated poses");
  double t_sq = 0.0, r_sq = 0.0;
  const std::size_t n = pairs.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const Se3Pose est_rel = relative(pairs[i].first, pairs[i + 1].first);
    const Se3Pose gt_rel = relative(pairs[i].second, pairs[i + 1].second);
    const Se3Pose err = compose(gt_rel.inverse(), est_rel);
    t_sq += err.translation.squaredNorm();
    const double r = deg(rotation_angle(err.rotation));
    r_sq += r * r;
  }
  return {std::sqrt(t_sq / static_cast<double>(n)), std::sqrt(r_sq / static_cast<double>(n))};
}

Se3Pose umeyama_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
  if (source.size() != target.size() || source.size() < 2) {
    throw Error("umeyama_rigid: need matched sets of at least 2 points");
  }
  Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= static_cast<double>(source.size());
  mu_t /= static_cast<double>(source.size());

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cross += (source[i] - mu_s) * (target[i] - mu_t).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Se3Pose out;
  out.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  out.translation = mu_t - out.rotation * mu_s;
  return out;
}

double ate(const Trajectory& est, const Trajectory& gt, bool align,
           const AssociationOptions& options) {
  const auto pairs = associate(est, gt, options);
  if (pairs.size() < 2) throw TooShort("ate: fewer than 2 associated poses");

  std::vector<Vec3> est_pts, gt_pts;
  est_pts.reserve(pairs.size());
  gt_pts.reserve(pairs.size());
  for (const auto& [e, g] : pairs) {
    est_pts.push_back(e.translation);
    gt_pts.push_back(g.translation);
  }
  Se3Pose alignment;  // identity by default
  if (align) alignment = umeyama_rigid(est_pts, gt_pts);

  double sq = 0.0;
  for (std::size_t i = 0; i < est_pts.size(); ++i) {
    sq += (alignment.apply(est_pts[i]) - gt_pts[i]).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(est_pts.size()));
}

double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  check_nonempty(a, b);
  const KdTree3 ta(a), tb(b);
  return 0.5 * (mean_nn_distance(a, tb) + mean_nn_distance(b, ta));
}

double mhd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  check_nonempty(a, b);
  const KdTree3 ta(a), tb(b);
  return std::max(mean_nn_distance(a, tb), mean_nn_distance(b, ta));
}

double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double threshold) {
  check_nonempty(a, b);
  const KdTree3 ta(a), tb(b);
  const double precision = fraction_within(a, tb, threshold);
  const double recall = fraction_within(b, ta, threshold);
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace radmap
