#pragma once

#include "radmap/gaussian.hpp"
#include "radmap/render.hpp"
#include "radmap/rng.hpp"

namespace radmap {

/// Result of a map-rewriting operation. `parent[i]` is the index of the
/// gaussian in the input map that output gaussian i was carried or cloned
/// from, or -1 for freshly sampled ones (optimizer state is reset there).
struct GrowthResult {
  GaussianMap map;
  std::vector<int> parent;
};

/// Standard clone/split driven by accumulated screen-space gradients:
/// small over-threshold gaussians are cloned in place, large ones are split
/// into two children sampled from their own distribution with scales
/// divided by 1.6.
GrowthResult densify_clone_split(const GaussianMap& map, const std::vector<double>& grad_mean,
                                 double grad_threshold, double scale_threshold, Rng& rng);

/// Resplits gaussians still larger than the threshold into m children with
/// offsets drawn from N(0, s_hat^2 I), s_hat = distance to the nearest other
/// gaussian center; child scales decay by `alpha`, parents are removed.
/// Sky gaussians are left untouched.
GrowthResult geometry_aware_resplit(const GaussianMap& map, double big_scale_threshold, int m,
                                    double alpha, Rng& rng);

/// Adds one interpolated gaussian per high-opacity anchor whose d_max-filtered
/// k-NN set (within the high-opacity subset) keeps at least 2 survivors:
/// center at the survivor centroid, inverse-distance-weighted color, mean
/// survivor scale, anchor opacity. Sky gaussians are excluded. A positive
/// min_gap only fills actual voids: centroids closer than min_gap to an
/// existing center are dropped, which keeps repeated rounds convergent.
GrowthResult interpolate_gaussians(const GaussianMap& map, double opacity_threshold, int k,
                                   double d_max, double min_gap = 0.0);

/// Plane n.p + d = 0 with |n| = 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::vector<int> inliers;

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) + d); }
};

struct GroundFitConfig {
  int ransac_iters = 500;
  double inlier_dist = 0.15;   // meters
  double max_angle_deg = 15.0; // from +z
  int max_rounds = 5;          // normal-based refits
};

/// Iterative RANSAC with normal-based filtering; throws NoGroundFound when
/// no round produces a near-vertical plane. The returned normal has n.z > 0
/// and the plane is least-squares refined over the final inliers.
Plane fit_ground_plane(const std::vector<Vec3>& points, Rng& rng,
                       const GroundFitConfig& config = {});

/// Rigid transform mapping plane a onto plane b (Rodrigues rotation of the
/// normals plus offset along n_b).
Se3Pose align_planes(const Plane& a, const Plane& b);

struct GroundCompletionConfig {
  int stride = 4;  // pixel stride for virtual point generation
  GroundFitConfig fit;
};

struct GroundCompletionResult {
  GaussianMap map;
  std::vector<int> parent;
  int added = 0;
};

/// Depth-assisted ground completion: unprojects prior depths into virtual
/// points, fits ground planes to them and to the in-view map, and appends
/// gaussians from the plane-aligned virtual ground points. Degrades to a
/// no-op when either plane fit fails.
GroundCompletionResult ground_completion(const GaussianMap& map, const Camera& cam,
                                         const ViewPriors& priors,
                                         const GroundCompletionConfig& config, Rng& rng);

}  // namespace radmap
