#include "radmap/growth.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"

namespace radmap {

namespace {

std::vector<Vec3> centers_of(const GaussianMap& map) {
  std::vector<Vec3> out(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = map.gaussians[i].mu;
  return out;
}

Plane plane_from_three(const Vec3& a, const Vec3& b, const Vec3& c) {
  Plane p;
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (len < 1e-12) {
    p.normal = Vec3::Zero();  // degenerate sample
    return p;
  }
  p.normal = n / len;
  p.d = -p.normal.dot(a);
  return p;
}

/// Least-squares plane through the listed points (centroid + smallest
/// principal axis), oriented with n.z > 0.
Plane ls_plane(const std::vector<Vec3>& points, const std::vector<int>& subset) {
  Vec3 centroid = Vec3::Zero();
  for (int i : subset) centroid += points[static_cast<std::size_t>(i)];
  centroid /= static_cast<double>(subset.size());
  Mat3 scatter = Mat3::Zero();
  for (int i : subset) {
    const Vec3 d = points[static_cast<std::size_t>(i)] - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  Plane p;
  p.normal = eig.eigenvectors().col(0);  // smallest eigenvalue
  if (p.normal.z() < 0.0) p.normal = -p.normal;
  p.d = -p.normal.dot(centroid);
  return p;
}

}  // namespace

GrowthResult densify_clone_split(const GaussianMap& map, const std::vector<double>& grad_mean,
                                 double grad_threshold, double scale_threshold, Rng& rng) {
  if (grad_mean.size() != map.size()) {
    throw DimensionMismatch("densify_clone_split: gradient vector size mismatch");
  }
  GrowthResult out;
  out.map.gaussians.reserve(map.size() + map.size() / 4);
  const double split_shrink = std::log(1.6);

  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    const bool selected = grad_mean[i] >= grad_threshold;
    if (!selected) {
      out.map.gaussians.push_back(g);
      out.parent.push_back(static_cast<int>(i));
      continue;
    }
    if (g.scale().maxCoeff() < scale_threshold) {
      // Clone in place.
      out.map.gaussians.push_back(g);
      out.parent.push_back(static_cast<int>(i));
      out.map.gaussians.push_back(g);
      out.parent.push_back(static_cast<int>(i));
      continue;
    }
    // Binary split: children sampled from the parent's own distribution.
    const Mat3 rot = g.rotation.normalized().toRotationMatrix();
    const Vec3 scale = g.scale();
    for (int child = 0; child < 2; ++child) {
      Gaussian c = g;
      const Vec3 z(rng.normal(), rng.normal(), rng.normal());
      c.mu = g.mu + rot * scale.cwiseProduct(z);
      c.log_scale = g.log_scale - Vec3::Constant(split_shrink);
      out.map.gaussians.push_back(c);
      out.parent.push_back(-1);
    }
  }
  return out;
}

GrowthResult geometry_aware_resplit(const GaussianMap& map, double big_scale_threshold, int m,
                                    double alpha, Rng& rng) {
  if (m < 1) throw Error("geometry_aware_resplit: m must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("geometry_aware_resplit: alpha must be in (0,1)");

  GrowthResult out;
  if (map.size() < 2) {
    out.map = map;
    out.parent.resize(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out.parent[i] = static_cast<int>(i);
    return out;
  }

  const KdTree3 tree(centers_of(map));
  const double log_alpha = std::log(alpha);

  std::vector<std::size_t> oversized;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    if (!g.sky && g.scale().maxCoeff() > big_scale_threshold) {
      oversized.push_back(i);
    } else {
      out.map.gaussians.push_back(g);
      out.parent.push_back(static_cast<int>(i));
    }
  }

  for (std::size_t i : oversized) {
    const Gaussian& g = map.gaussians[i];
    // Spatial scale from the nearest other gaussian center.
    const auto knn = tree.knn(g.mu, 2);
    double s_hat = 0.0;
    for (int j : knn) {
      if (j != static_cast<int>(i)) {
        s_hat = (map.gaussians[static_cast<std::size_t>(j)].mu - g.mu).norm();
        break;
      }
    }
    const Mat3 rot = g.rotation.normalized().toRotationMatrix();
    for (int child = 0; child < m; ++child) {
      Gaussian c = g;
      const Vec3 sigma(rng.normal(0.0, s_hat), rng.normal(0.0, s_hat), rng.normal(0.0, s_hat));
      c.mu = g.mu + rot * sigma;
      c.log_scale = g.log_scale + Vec3::Constant(log_alpha);
      out.map.gaussians.push_back(c);
      out.parent.push_back(-1);
    }
  }
  return out;
}

GrowthResult interpolate_gaussians(const GaussianMap& map, double opacity_threshold, int k,
                                   double d_max, double min_gap) {
  if (k < 1) throw Error("interpolate_gaussians: k must be >= 1");
  GrowthResult out;
  out.map = map;
  out.parent.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out.parent[i] = static_cast<int>(i);

  std::vector<int> anchors;
  std::vector<Vec3> anchor_pts;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    if (!g.sky && g.opacity() > opacity_threshold) {
      anchors.push_back(static_cast<int>(i));
      anchor_pts.push_back(g.mu);
    }
  }
  if (anchors.size() < 2) return out;

  std::vector<Vec3> all_centers(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) all_centers[i] = map.gaussians[i].mu;
  const KdTree3 gap_tree(all_centers);
  const KdTree3 tree(anchor_pts);
  for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
    const Gaussian& anchor = map.gaussians[static_cast<std::size_t>(anchors[ai])];
    // The anchor is a member of the queried set, so the k-NN set contains it
    // at distance zero; survivors are the members within d_max.
    const auto knn = tree.knn(anchor.mu, k);
    std::vector<int> survivors;  // indices into `anchors`
    for (int j : knn) {
      if ((anchor_pts[static_cast<std::size_t>(j)] - anchor.mu).norm() <= d_max) {
        survivors.push_back(j);
      }
    }
    if (survivors.size() < 2) continue;  // anchor alone does not interpolate

    Gaussian fresh;
    Vec3 centroid = Vec3::Zero();
    Vec3 mean_scale = Vec3::Zero();
    double weight_sum = 0.0;
    Vec3 color = Vec3::Zero();
    bool snapped = false;
    for (int j : survivors) {
      const Gaussian& s = map.gaussians[static_cast<std::size_t>(anchors[static_cast<std::size_t>(j)])];
      centroid += s.mu;
      mean_scale += s.scale();
      if (j == static_cast<int>(ai)) continue;  // no inverse distance to itself
      const double dist = (s.mu - anchor.mu).norm();
      if (dist < 1e-12) {
        color = s.color;  // coincident neighbor dominates the weighting
        snapped = true;
      } else if (!snapped) {
        const double w = 1.0 / dist;
        color += w * s.color;
        weight_sum += w;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(survivors.size());
    fresh.mu = centroid * inv_n;
    fresh.log_scale = (mean_scale * inv_n).array().max(1e-12).log();
    if (!snapped) color = weight_sum > 0.0 ? Vec3(color / weight_sum) : anchor.color;
    fresh.color = color;
    fresh.opacity_logit = anchor.opacity_logit;
    fresh.rotation = anchor.rotation;
    fresh.sky = false;
    out.map.gaussians.push_back(fresh);
    out.parent.push_back(-1);
  }
  return out;
}

Plane fit_ground_plane(const std::vector<Vec3>& points, Rng& rng, const GroundFitConfig& config) {
  if (points.size() < 3) throw NoGroundFound("fit_ground_plane: fewer than 3 points");
  const double cos_max = std::cos(config.max_angle_deg * M_PI / 180.0);

  std::vector<int> active(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) active[i] = static_cast<int>(i);

  for (int round = 0; round < config.max_rounds; ++round) {
    if (active.size() < 3) break;
    Plane best;
    std::vector<int> best_inliers;
    for (int it = 0; it < config.ransac_iters; ++it) {
      const int ia = active[rng.uniform_index(active.size())];
      const int ib = active[rng.uniform_index(active.size())];
      const int ic = active[rng.uniform_index(active.size())];
      if (ia == ib || ib == ic || ia == ic) continue;
      Plane cand = plane_from_three(points[static_cast<std::size_t>(ia)],
                                    points[static_cast<std::size_t>(ib)],
                                    points[static_cast<std::size_t>(ic)]);
      if (cand.normal.isZero()) continue;
      std::vector<int> inliers;
      for (int idx : active) {
        if (cand.distance(points[static_cast<std::size_t>(idx)]) <= config.inlier_dist) {
          inliers.push_back(idx);
        }
      }
      if (inliers.size() > best_inliers.size()) {
        best = cand;
        best_inliers = std::move(inliers);
      }
    }
    if (best_inliers.size() < 3) break;

    Vec3 n = best.normal;
    if (n.z() < 0.0) n = -n;
    if (n.z() >= cos_max) {
      // Near-vertical normal: accept and refine.
      Plane refined = ls_plane(points, best_inliers);
      refined.inliers.clear();
      for (int idx : active) {
        if (refined.distance(points[static_cast<std::size_t>(idx)]) <= config.inlier_dist) {
          refined.inliers.push_back(idx);
        }
      }
      if (refined.inliers.size() >= 3) return refined;
      refined.inliers = best_inliers;
      return refined;
    }
    // Tilted plane (wall/facade): drop its inliers and refit.
    std::vector<int> remaining;
    remaining.reserve(active.size());
    std::vector<char> is_inlier(points.size(), 0);
    for (int idx : best_inliers) is_inlier[static_cast<std::size_t>(idx)] = 1;
    for (int idx : active) {
      if (!is_inlier[static_cast<std::size_t>(idx)]) remaining.push_back(idx);
    }
    active = std::move(remaining);
  }
  throw NoGroundFound("fit_ground_plane: no near-vertical plane found");
}

Se3Pose align_planes(const Plane& a, const Plane& b) {
  const Vec3 na = a.normal.normalized();
  const Vec3 nb = b.normal.normalized();
  const Vec3 v = na.cross(nb);
  const double c = na.dot(nb);
  Se3Pose out;
  if (v.norm() < 1e-9) {
    if (c > 0.0) {
      out.rotation = Mat3::Identity();
    } else {
      // Opposite normals: rotate 180 degrees about any axis orthogonal to nb.
      Vec3 axis = nb.cross(Vec3::UnitX());
      if (axis.norm() < 1e-6) axis = nb.cross(Vec3::UnitY());
      axis.normalize();
      out.rotation = Eigen::AngleAxisd(M_PI, axis).toRotationMatrix();
    }
  } else {
    Mat3 vx;
    vx << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    out.rotation = Mat3::Identity() + vx + vx * vx * ((1.0 - c) / v.squaredNorm());
  }
  out.translation = (a.d - b.d) * nb;
  return out;
}

GroundCompletionResult ground_completion(const GaussianMap& map, const Camera& cam,
                                         const ViewPriors& priors,
                                         const GroundCompletionConfig& config, Rng& rng) {
  GroundCompletionResult out;
  out.map = map;
  out.parent.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out.parent[i] = static_cast<int>(i);

  // (a) Virtual points from the depth prior, sky pixels excluded.
  const Se3Pose cam_to_world = cam.world_to_camera.inverse();
  std::vector<Vec3> virtual_pts;
  std::vector<Vec3> virtual_colors;
  for (int py = 0; py < cam.height; py += config.stride) {
    for (int px = 0; px < cam.width; px += config.stride) {
      if (priors.sky2d.at(px, py) != 0) continue;
      const double z = priors.depth_prior.at(px, py);
      if (z <= 0.0) continue;
      virtual_pts.push_back(cam_to_world.apply(cam.unproject(px + 0.5, py + 0.5, z)));
      virtual_colors.push_back(Vec3(priors.image.at(px, py, 0), priors.image.at(px, py, 1),
                                    priors.image.at(px, py, 2)));
    }
  }

  std::vector<Vec3> in_view_centers;
  for (const Gaussian& g : map.gaussians) {
    const Vec3 pc = cam.to_camera(g.mu);
    if (pc.z() <= 0.01) continue;
    if (!cam.in_image(cam.project_camera(pc))) continue;
    in_view_centers.push_back(g.mu);
  }

  // (b) Ground planes for both point sets; failures degrade to a no-op.
  Plane q_a, q_b;
  try {
    q_a = fit_ground_plane(virtual_pts, rng, config.fit);
    q_b = fit_ground_plane(in_view_centers, rng, config.fit);
  } catch (const NoGroundFound&) {
    return out;
  }

  std::vector<Vec3> ground_pts;
  std::vector<Vec3> ground_colors;
  for (std::size_t i = 0; i < virtual_pts.size(); ++i) {
    if (q_a.distance(virtual_pts[i]) <= config.fit.inlier_dist) {
      ground_pts.push_back(virtual_pts[i]);
      ground_colors.push_back(virtual_colors[i]);
    }
  }
  if (ground_pts.empty()) return out;

  // (c) Map the virtual ground onto the map's ground plane and append.
  const Se3Pose a_to_b = align_planes(q_a, q_b);
  for (Vec3& p : ground_pts) p = a_to_b.apply(p);

  const GaussianMap fresh = init_from_points(ground_pts, ground_colors);
  for (const Gaussian& g : fresh.gaussians) {
    out.map.gaussians.push_back(g);
    out.parent.push_back(-1);
    ++out.added;
  }
  return out;
}

}  // namespace radmap
