#include "radmap/odometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"
#include "radmap/se3.hpp"

namespace radmap {

namespace {

std::vector<Vec3> positions_of(const RadarFrame& frame) {
  std::vector<Vec3> out(frame.points.size());
  for (std::size_t i = 0; i < frame.points.size(); ++i) out[i] = frame.points[i].position;
  return out;
}

std::vector<double> pair_weights(const Correspondences& corr) {
  std::vector<double> w(corr.pairs.size(), 1.0);
  if (corr.d_max > 0.0) {
    for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
      w[i] = (corr.d_max - corr.pairs[i].dist) / corr.d_max;
    }
  }
  return w;
}

/// Drops pairs with distance above ratio * median; keeps at least 3.
Correspondences reject_outliers(const Correspondences& corr, double ratio) {
  if (ratio <= 0.0 || corr.pairs.size() < 4) return corr;
  std::vector<double> dists;
  dists.reserve(corr.pairs.size());
  for (const auto& p : corr.pairs) dists.push_back(p.dist);
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                   dists.end());
  const double median = dists[dists.size() / 2];
  const double cutoff = ratio * median;

  Correspondences out;
  out.pairs.reserve(corr.pairs.size());
  for (const auto& p : corr.pairs) {
    if (p.dist <= cutoff) {
      out.pairs.push_back(p);
      out.d_max = std::max(out.d_max, p.dist);
    }
  }
  if (out.pairs.size() < 3) return corr;
  return out;
}

}  // namespace

Correspondences nearest_correspondences(const RadarFrame& src_tf, const RadarFrame& tgt) {
  if (src_tf.points.empty() || tgt.points.empty()) {
    throw EmptyFrame("nearest_correspondences: empty frame");
  }
  const KdTree3 tree(positions_of(tgt));
  Correspondences corr;
  corr.pairs.resize(src_tf.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(src_tf.points.size()); ++i) {
    const auto [idx, d2] = tree.nearest(src_tf.points[static_cast<std::size_t>(i)].position);
    corr.pairs[static_cast<std::size_t>(i)] = {static_cast<int>(i), idx, std::sqrt(d2)};
  }
  for (const auto& p : corr.pairs) corr.d_max = std::max(corr.d_max, p.dist);
  return corr;
}

Se3Pose weighted_kabsch(const Correspondences& corr, const RadarFrame& src_tf,
                        const RadarFrame& tgt) {
  if (corr.pairs.size() < 3) {
    throw DegenerateGeometry("weighted_kabsch: fewer than 3 pairs");
  }
  const std::vector<double> w = pair_weights(corr);
  double w_sum = 0.0;
  for (double v : w) w_sum += v;
  if (!(w_sum > 0.0)) throw DegenerateGeometry("weighted_kabsch: zero total weight");

  Vec3 src_centroid = Vec3::Zero();
  Vec3 tgt_centroid = Vec3::Zero();
  for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
    src_centroid += w[i] * src_tf.points[static_cast<std::size_t>(corr.pairs[i].src)].position;
    tgt_centroid += w[i] * tgt.points[static_cast<std::size_t>(corr.pairs[i].tgt)].position;
  }
  src_centroid /= w_sum;
  tgt_centroid /= w_sum;

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
    const Vec3 a = src_tf.points[static_cast<std::size_t>(corr.pairs[i].src)].position - src_centroid;
    const Vec3 b = tgt.points[static_cast<std::size_t>(corr.pairs[i].tgt)].position - tgt_centroid;
    cross += w[i] * a * b.transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 1e-15) || sv(1) < 1e-12 * sv(0)) {
    throw DegenerateGeometry("weighted_kabsch: rank-deficient cross-covariance");
  }
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  Se3Pose delta;
  delta.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  delta.translation = tgt_centroid - delta.rotation * src_centroid;
  return delta;
}

double kabsch_objective(const Correspondences& corr, const RadarFrame& src_tf,
                        const RadarFrame& tgt, const Se3Pose& increment) {
  const std::vector<double> w = pair_weights(corr);
  double obj = 0.0;
  for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
    const Vec3& a = src_tf.points[static_cast<std::size_t>(corr.pairs[i].src)].position;
    const Vec3& b = tgt.points[static_cast<std::size_t>(corr.pairs[i].tgt)].position;
    obj += w[i] * (increment.apply(a) - b).squaredNorm();
  }
  return obj;
}

RefineResult refine_pose(const RadarFrame& src, const RadarFrame& tgt, const Se3Pose& t_init,
                         const RefineConfig& config) {
  RefineResult result;
  result.pose = t_init;
  if (src.points.empty() || tgt.points.empty()) return result;

  Se3Pose current = t_init;
  try {
    for (int it = 0; it < config.max_iters; ++it) {
      const RadarFrame src_tf = transform_frame(src, current);
      Correspondences corr = nearest_correspondences(src_tf, tgt);
      corr = reject_outliers(corr, config.reject_ratio);
      const Se3Pose delta = weighted_kabsch(corr, src_tf, tgt);
      result.objectives.emplace_back(kabsch_objective(corr, src_tf, tgt, Se3Pose::identity()),
                                     kabsch_objective(corr, src_tf, tgt, delta));
      current = compose(delta, current);
      result.iterations = it + 1;
      if (delta.translation.norm() < config.tol_trans &&
          rotation_angle(delta.rotation) < config.tol_rot) {
        break;
      }
    }
  } catch (const DegenerateGeometry&) {
    result.pose = t_init;
    result.refined = false;
    result.objectives.clear();
    return result;
  }
  result.pose = current;
  result.refined = true;
  return result;
}

PoseEstimate select_pose(const RadarFrame& src, const RadarFrame& tgt, const Se3Pose& t_a,
                         const Se3Pose& t_b, double bandwidth) {
  const GaussianMixture gmm_tgt = gmm_from_frame(tgt, bandwidth);
  const double div_a = cs_divergence(gmm_from_frame(transform_frame(src, t_a), bandwidth), gmm_tgt);
  const double div_b = cs_divergence(gmm_from_frame(transform_frame(src, t_b), bandwidth), gmm_tgt);

  PoseEstimate est;
  if (div_b < div_a) {
    est.pose = t_b;
    est.refined = true;
    est.objective = div_b;
  } else {
    est.pose = t_a;
    est.refined = false;
    est.objective = div_a;
  }
  return est;
}

Se3Pose predict_initial(const std::vector<Se3Pose>& history) {
  if (history.empty()) return Se3Pose::identity();
  if (history.size() == 1) return history.back();

  const Se3Pose& prev = history[history.size() - 2];
  const Se3Pose& last = history[history.size() - 1];
  // Extrapolate the last step's Euler/translation acceleration once more.
  const Vec3 e0 = to_euler(prev.rotation).vec();
  const Vec3 e1 = to_euler(last.rotation).vec();
  const Vec3 e2 = e1 + (e1 - e0);
  Se3Pose out;
  out.rotation = from_euler(e2.x(), e2.y(), e2.z());
  out.translation = last.translation + (last.translation - prev.translation);
  return out;
}

OdometryResult run_odometry(const std::vector<RadarFrame>& frames, const OdometryConfig& config) {
  if (frames.size() < 2) throw Error("run_odometry: need at least 2 frames");

  OdometryResult result;
  Se3Pose world;  // pose of the current frame in the world frame
  result.trajectory.poses.push_back({frames.front().timestamp, world});

  std::vector<Se3Pose> history;       // last 2 relative poses for the prior
  std::vector<Se3Pose> motion_window; // last 3 relative poses for diagnostics
  bool have_prev = false;
  PreprocessedFrame prev;

  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const RadarFrame& tgt_raw = frames[k];
    const RadarFrame& src_raw = frames[k + 1];

    FrameDiag diag;
    diag.frame = static_cast<int>(k + 1);

    if (!have_prev) {
      try {
        prev = preprocess_frame(tgt_raw, config.preprocess);
        have_prev = true;
      } catch (const Error&) {
        have_prev = false;
      }
    }

    PreprocessedFrame cur;
    bool cur_ok = false;
    try {
      cur = preprocess_frame(src_raw, config.preprocess);
      cur_ok = true;
    } catch (const Error&) {
      cur_ok = false;
    }

    const Se3Pose init = predict_initial(history);
    Se3Pose rel = init;

    if (cur_ok && have_prev) {
      const RefineResult refined = refine_pose(cur.frame, prev.frame, init, config.refine);
      const PoseEstimate est =
          select_pose(cur.frame, prev.frame, init, refined.pose, config.gmm_bandwidth);
      rel = est.pose;
      diag.refined = est.refined;
      diag.cs_div = est.objective;

      const RadarFrame src_aligned = transform_frame(cur.frame, rel);
      diag.cwd = cluster_weighted_distance(src_aligned, prev.frame, cur.clusters, prev.clusters,
                                           config.cwd);
      diag.occ = column_occupancy_score(
          polar_occupancy(src_aligned, config.occ_rings, config.occ_sectors, config.occ_rmax),
          polar_occupancy(prev.frame, config.occ_rings, config.occ_sectors, config.occ_rmax));
    } else {
      diag.failed = true;  // fell back to the motion prior
    }

    history.push_back(rel);
    if (history.size() > 2) history.erase(history.begin());
    motion_window.push_back(rel);
    if (motion_window.size() > 3) motion_window.erase(motion_window.begin());
    if (motion_window.size() == 3) {
      try {
        diag.motion = motion_smoothness(motion_window[0], motion_window[1], motion_window[2],
                                        config.eps_r, config.eps_t, 1.0);
      } catch (const GimbalLock&) {
        diag.motion = 0.0;
      }
    }

    world = compose(world, rel);
    result.trajectory.poses.push_back({src_raw.timestamp, world});
    result.diags.push_back(diag);

    if (cur_ok) {
      prev = std::move(cur);
      have_prev = true;
    } else {
      have_prev = false;
    }
  }
  return result;
}

}  // namespace radmap
