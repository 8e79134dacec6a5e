#pragma once

#include "radmap/gaussian.hpp"
#include "radmap/odometry.hpp"
#include "radmap/preprocess.hpp"
#include "radmap/render.hpp"
#include "radmap/rng.hpp"
#include "radmap/supervision.hpp"

// Serial reference implementations of the accelerated kernels. They trade
// speed for directness (quadratic scans, per-pixel full sorts) and back both
// the test suite and the benchmark comparison.
namespace radmap::ref {

std::vector<int> local_density_quadratic(const RadarFrame& frame, double radius);

ClusterAssignment dbscan_quadratic(const RadarFrame& frame, double eps, int min_pts);

Correspondences nearest_correspondences_bruteforce(const RadarFrame& src_tf,
                                                   const RadarFrame& tgt);

double chamfer_l1_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double mhd_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double fscore_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double threshold);

/// Per-pixel full sort over every gaussian, no tiling or radius culling.
RenderBuffers render_bruteforce(const GaussianMap& map, const Camera& cam,
                                const RenderOptions& opts = {});

struct MonteCarloCs {
  double value = 0.0;
  double sigma = 0.0;  // 1-sigma error propagated from the three integrals
};

/// CS divergence by Monte-Carlo integration of the defining integrals.
MonteCarloCs cs_divergence_monte_carlo(const GaussianMixture& p, const GaussianMixture& q,
                                       int samples, Rng& rng);

}  // namespace radmap::ref
