#pragma once

#include <vector>

#include "radmap/image.hpp"
#include "radmap/types.hpp"

namespace radmap {

struct OdomReport {
  double t_rel = 0.0;     // m/m, KITTI protocol
  double r_rel = 0.0;     // deg/m
  double rpe_trans = 0.0; // m, framewise
  double rpe_rot = 0.0;   // deg, framewise
  double ate = 0.0;       // m
};

struct MapReport {
  double chamfer_l1 = 0.0;
  double mhd = 0.0;
  double fscore = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct AssociationOptions {
  double max_skew = 0.05;  // seconds
  bool interpolate = false;
};

/// Time-associated pose pairs (est, gt); nearest timestamp within max_skew,
/// or linear/slerp interpolation of gt onto est timestamps when enabled.
std::vector<std::pair<Se3Pose, Se3Pose>> associate(const Trajectory& est, const Trajectory& gt,
                                                   const AssociationOptions& options = {});

/// KITTI relative pose error over segment lengths 20..160 m step 20.
/// Throws TooShort when the ground-truth path is under 20 m.
std::pair<double, double> rpe_kitti(const Trajectory& est, const Trajectory& gt,
                                    const AssociationOptions& options = {});

/// Framewise relative pose error (RMSE of per-consecutive-pair deltas).
std::pair<double, double> rpe_framewise(const Trajectory& est, const Trajectory& gt,
                                        const AssociationOptions& options = {});

/// RMSE of position residuals; optional closed-form rigid alignment first.
double ate(const Trajectory& est, const Trajectory& gt, bool align,
           const AssociationOptions& options = {});

double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double mhd(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double threshold = 0.3);

/// Rigid (no scale) closed-form alignment of source onto target point lists.
Se3Pose umeyama_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

}  // namespace radmap
