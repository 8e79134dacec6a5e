#pragma once

#include <vector>

#include "radmap/types.hpp"

namespace radmap {

/// Per-point cluster labels in {-1, 0..cluster_count-1} (-1 = noise) plus
/// per-cluster summaries.
struct ClusterAssignment {
  std::vector<int> labels;
  int cluster_count = 0;

  struct Summary {
    int size = 0;
    Vec3 centroid = Vec3::Zero();
    Vec2 mean_feature = Vec2::Zero();  // (rrv, rcs)
  };
  std::vector<Summary> clusters;
};

/// Keeps points with z_min <= z <= z_max, order preserved.
/// Throws EmptyFrame when nothing survives.
RadarFrame height_filter(const RadarFrame& frame, double z_min, double z_max);

/// Deterministic DBSCAN over point positions: core points are expanded in
/// ascending index order, border points go to the first cluster that
/// reaches them. Neighborhoods include the point itself.
ClusterAssignment dbscan(const RadarFrame& frame, double eps, int min_pts);

/// Farthest point sampling seeded at index 0; ties broken by lowest index.
/// When the frame has fewer than n points, the selected set is repeated
/// round-robin to pad the result to length n.
std::vector<int> farthest_point_sampling(const RadarFrame& frame, int n);

/// Fills per-cluster size / centroid / mean (rrv, rcs); noise excluded.
ClusterAssignment cluster_summaries(const RadarFrame& frame, const std::vector<int>& labels);

struct PreprocessConfig {
  double z_min = -3.0;
  double z_max = 3.0;
  double dbscan_eps = 3.0;
  int dbscan_min_pts = 3;
  int sample_n = 256;
};

struct PreprocessedFrame {
  RadarFrame frame;
  ClusterAssignment clusters;
};

/// height_filter -> dbscan -> FPS; labels carried through the sampling and
/// relabeled compactly, summaries recomputed on the sampled subset.
PreprocessedFrame preprocess_frame(const RadarFrame& frame, const PreprocessConfig& config);

}  // namespace radmap
