#pragma once

#include <vector>

#include "radmap/preprocess.hpp"
#include "radmap/types.hpp"

namespace radmap {

/// Binary ring x sector occupancy over the xy-plane.
struct PolarOccupancy {
  int n_rings = 0;
  int n_sectors = 0;
  double r_max = 0.0;
  std::vector<std::uint8_t> grid;  // row-major rings x sectors

  std::uint8_t at(int ring, int sector) const {
    return grid[static_cast<std::size_t>(ring * n_sectors + sector)];
  }
};

struct GaussianMixture {
  struct Component {
    double weight = 0.0;
    Vec3 mean = Vec3::Zero();
    Mat3 covariance = Mat3::Identity();
  };
  std::vector<Component> components;
};

struct FeatureMatrix {
  int rows = 0;
  int dim = 0;
  std::vector<double> values;  // row-major

  const double* row(int i) const { return &values[static_cast<std::size_t>(i * dim)]; }
  double* row(int i) { return &values[static_cast<std::size_t>(i * dim)]; }
};

/// Number of other points within `radius` of each point (self excluded).
std::vector<int> local_density(const RadarFrame& frame, double radius);

struct CwdParams {
  int delta = 2;           // density gate: require more than delta neighbors
  double eps = 0.0225;     // squared-distance slack, (0.15 m)^2
  double radius = 1.0;     // density radius
  bool quadratic_weight = false;  // (n_c/N)^2 cluster weights instead of n_c/N
};

/// Bidirectional cluster-weighted nearest-neighbor distance. Noise points
/// form one pseudo-cluster per direction.
double cluster_weighted_distance(const RadarFrame& src_tf, const RadarFrame& tgt,
                                 const ClusterAssignment& src_clusters,
                                 const ClusterAssignment& tgt_clusters, const CwdParams& params);

/// theta = 90 + atan2(y, x) * 180/pi wrapped into [0, 360); points with
/// planar radius >= r_max are discarded.
PolarOccupancy polar_occupancy(const RadarFrame& frame, int n_rings, int n_sectors, double r_max);

/// 1 - mean cosine similarity over columns occupied in both grids;
/// 0 when no column is valid.
double column_occupancy_score(const PolarOccupancy& a, const PolarOccupancy& b);

/// One isotropic component (bandwidth^2 * I) per point, uniform weights.
GaussianMixture gmm_from_frame(const RadarFrame& frame, double bandwidth);

/// Density of the mixture at x.
double gmm_density(const GaussianMixture& mixture, const Vec3& x);

/// Cauchy-Schwarz divergence -log( int pq / sqrt(int p^2 int q^2) ),
/// closed form via pairwise Gaussian product integrals.
double cs_divergence(const GaussianMixture& p, const GaussianMixture& q);

/// InfoNCE over {spatially nearest, spatially farthest} target pairs with
/// feature cosine similarity at temperature tau.
double feature_contrast_score(const RadarFrame& src_tf, const RadarFrame& tgt,
                              const FeatureMatrix& feat_s, const FeatureMatrix& feat_t,
                              double tau);

/// Constant-acceleration penalty over three consecutive relative poses.
double motion_smoothness(const Se3Pose& t_km2, const Se3Pose& t_km1, const Se3Pose& t_k,
                         double eps_r, double eps_t, double weight);

}  // namespace radmap
