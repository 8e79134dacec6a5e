#pragma once

#include <vector>

#include "radmap/preprocess.hpp"
#include "radmap/supervision.hpp"
#include "radmap/types.hpp"

namespace radmap {

/// Exact nearest-neighbor pairs from source into target.
struct Correspondences {
  struct Pair {
    int src = 0;
    int tgt = 0;
    double dist = 0.0;
  };
  std::vector<Pair> pairs;
  double d_max = 0.0;
};

struct PoseEstimate {
  Se3Pose pose;
  bool refined = false;   // teacher accepted
  double objective = 0.0; // CS divergence achieved
};

Correspondences nearest_correspondences(const RadarFrame& src_tf, const RadarFrame& tgt);

/// Distance-weighted Kabsch increment, weights w_i = (d_max - d_i)/d_max
/// (uniform when d_max = 0). Throws DegenerateGeometry on rank-deficient
/// weighted point sets.
Se3Pose weighted_kabsch(const Correspondences& pairs, const RadarFrame& src_tf,
                        const RadarFrame& tgt);

/// Weighted objective sum w_i |R p_i + t - q_i|^2 for a candidate increment.
double kabsch_objective(const Correspondences& pairs, const RadarFrame& src_tf,
                        const RadarFrame& tgt, const Se3Pose& increment);

struct RefineConfig {
  int max_iters = 30;
  double tol_trans = 1e-4;  // meters
  double tol_rot = 1e-4;    // radians
  double reject_ratio = 3.0;  // drop pairs beyond ratio * median distance; 0 disables
};

struct RefineResult {
  Se3Pose pose;
  bool refined = false;
  int iterations = 0;
  /// Per-iteration (objective at identity increment, objective after solve).
  std::vector<std::pair<double, double>> objectives;
};

/// ICP-style iteration of the distance-weighted Kabsch step starting from
/// t_init; returns t_init unchanged with refined = false when the geometry
/// degenerates.
RefineResult refine_pose(const RadarFrame& src, const RadarFrame& tgt, const Se3Pose& t_init,
                         const RefineConfig& config);

/// Keeps candidate b only when it achieves strictly lower CS divergence
/// against the target than a; ties keep a.
PoseEstimate select_pose(const RadarFrame& src, const RadarFrame& tgt, const Se3Pose& t_a,
                         const Se3Pose& t_b, double bandwidth);

/// Constant-acceleration motion prior from up to two previous relative poses
/// (ordered oldest first).
Se3Pose predict_initial(const std::vector<Se3Pose>& history);

struct OdometryConfig {
  PreprocessConfig preprocess;
  RefineConfig refine;
  double gmm_bandwidth = 0.5;
  CwdParams cwd;
  int occ_rings = 32;
  int occ_sectors = 72;
  double occ_rmax = 80.0;
  double eps_r = 0.01;
  double eps_t = 0.05;
};

struct FrameDiag {
  int frame = 0;
  bool refined = false;
  bool failed = false;   // preprocessing/refinement fell back to the prior
  double cs_div = 0.0;
  double cwd = 0.0;
  double occ = 0.0;
  double motion = 0.0;
};

struct OdometryResult {
  Trajectory trajectory;          // world poses, anchored at identity
  std::vector<FrameDiag> diags;   // one entry per consecutive pair
};

/// Full teacher pipeline over a frame sequence: preprocess, motion prior,
/// ICP refinement, divergence-gated selection, pose chaining.
OdometryResult run_odometry(const std::vector<RadarFrame>& frames, const OdometryConfig& config);

}  // namespace radmap
