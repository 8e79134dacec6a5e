#include "radmap/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"

namespace radmap {

Mat3 covariance(const Gaussian& g) {
  const Mat3 r = g.rotation.normalized().toRotationMatrix();
  const Mat3 rs = r * g.scale().asDiagonal();
  return rs * rs.transpose();
}

ProjectedGaussian project(const Gaussian& g, const Camera& cam) {
  ProjectedGaussian out;
  const Vec3 p = cam.to_camera(g.mu);
  if (p.z() <= 0.01) return out;  // behind or grazing the near plane

  out.depth = p.z();
  out.mu2d = cam.project_camera(p);

  const double z_inv = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * z_inv, 0.0, -cam.fx * p.x() * z_inv * z_inv,
      0.0, cam.fy * z_inv, -cam.fy * p.y() * z_inv * z_inv;

  const Mat3& w = cam.world_to_camera.rotation;
  const Mat3 cam_cov = w * covariance(g) * w.transpose();
  out.cov2d = jac * cam_cov * jac.transpose() + 0.3 * Mat2::Identity();
  out.culled = false;
  return out;
}

GaussianMap init_from_points(const std::vector<Vec3>& points, const std::vector<Vec3>& colors) {
  if (points.empty()) throw Error("init_from_points: no points");
  if (colors.size() != points.size()) {
    throw DimensionMismatch("init_from_points: color count != point count");
  }

  std::vector<double> scales(points.size(), 1.0);
  if (points.size() >= 4) {
    const KdTree3 tree(points);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
      const auto knn = tree.knn(points[static_cast<std::size_t>(i)], 4);  // self + 3 neighbors
      double mean = 0.0;
      int count = 0;
      for (int j : knn) {
        if (j == static_cast<int>(i)) continue;
        mean += (points[static_cast<std::size_t>(j)] - points[static_cast<std::size_t>(i)]).norm();
        ++count;
      }
      mean /= static_cast<double>(count);
      scales[static_cast<std::size_t>(i)] = std::clamp(mean, 0.02, 5.0);
    }
  }

  GaussianMap map;
  map.gaussians.resize(points.size());
  const double init_logit = logit(0.1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Gaussian& g = map.gaussians[i];
    g.mu = points[i];
    g.opacity_logit = init_logit;
    g.log_scale = Vec3::Constant(std::log(scales[i]));
    g.rotation = Quat::Identity();
    g.color = colors[i].cwiseMax(0.0).cwiseMin(1.0);
    g.sky = false;
  }
  return map;
}

ExportedPoints export_points(const GaussianMap& map, double opacity_threshold) {
  ExportedPoints out;
  for (const Gaussian& g : map.gaussians) {
    if (g.sky || g.opacity() <= opacity_threshold) continue;
    out.points.push_back(g.mu);
    out.colors.push_back(g.color);
  }
  return out;
}

}  // namespace radmap
