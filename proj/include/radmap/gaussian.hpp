#pragma once

#include <cstdint>
#include <vector>

#include "radmap/types.hpp"

namespace radmap {

/// Anisotropic 3D splat. Opacity is stored pre-sigmoid, scales pre-exp;
/// color is plain RGB (spherical harmonics degree 0).
struct Gaussian {
  Vec3 mu = Vec3::Zero();
  double opacity_logit = 0.0;
  Vec3 log_scale = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 color = Vec3::Zero();
  bool sky = false;

  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
  Vec3 scale() const { return log_scale.array().exp(); }
};

struct GaussianMap {
  std::vector<Gaussian> gaussians;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }

  std::vector<std::uint8_t> sky_mask() const {
    std::vector<std::uint8_t> mask(gaussians.size());
    for (std::size_t i = 0; i < gaussians.size(); ++i) mask[i] = gaussians[i].sky ? 1 : 0;
    return mask;
  }
};

/// Sigma = R S S^T R^T; eigenvalues are the squared scales.
Mat3 covariance(const Gaussian& g);

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct ProjectedGaussian {
  bool culled = true;
  Vec2 mu2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Zero();  // includes the +0.3 px^2 floor
  double depth = 0.0;
};

/// EWA-style affine projection; culled when the camera-frame depth
/// is at or below 0.01 m.
ProjectedGaussian project(const Gaussian& g, const Camera& cam);

/// New map from points: isotropic scale from the mean distance to the
/// 3 nearest neighbors (clamped to [0.02, 5] m, 1 m when fewer than
/// 4 points), opacity 0.1, identity rotation.
GaussianMap init_from_points(const std::vector<Vec3>& points, const std::vector<Vec3>& colors);

struct ExportedPoints {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
};

/// Centers of non-sky gaussians above the opacity threshold.
ExportedPoints export_points(const GaussianMap& map, double opacity_threshold = 0.1);

}  // namespace radmap
