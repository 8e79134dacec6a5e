#pragma once

#include <string>
#include <vector>

#include "radmap/config.hpp"
#include "radmap/metrics.hpp"
#include "radmap/optimize.hpp"
#include "radmap/ply.hpp"

namespace radmap {

struct Dataset {
  std::vector<RadarFrame> frames;
  Trajectory gt;                    // empty when the dataset has no ground truth
  std::vector<OptimizeView> views;  // loaded from views.toml when present
  std::vector<double> view_times;
  ColoredCloud reference;           // dense reference cloud when present
};

/// Loads frames/NNNNNN.ply (+ gt, views.toml, gt/reference.ply when present).
Dataset load_dataset(const std::string& dir);

std::vector<OptimizeView> load_views(const std::string& views_path,
                                     std::vector<double>* times = nullptr);

/// Frames chained into the world frame and concatenated. With prior views,
/// each point is colored by projecting into the nearest-in-time camera;
/// unprojectable points turn gray.
ColoredCloud map_build(const std::vector<RadarFrame>& frames, const Trajectory& trajectory,
                       const std::vector<OptimizeView>& views,
                       const std::vector<double>& view_times);

struct PipelineOptions {
  std::string out_dir;
  std::string dataset_dir;          // defaults to <out_dir>/dataset
  std::vector<std::string> stages;  // empty = full pipeline
  PipelineConfig config;
  bool quiet = false;
};

struct StageReport {
  std::string name;
  bool ok = false;
  bool ran = false;
  double seconds = 0.0;
  std::string error;
};

struct PipelineSummary {
  std::vector<StageReport> stages;
  bool ok = true;

  OdomReport odom;
  MapReport map_initial;
  MapReport map_optimized;
  std::size_t gaussians_before = 0;
  std::size_t gaussians_after = 0;
  double path_length = 0.0;

  /// Deterministic fields only (no runtimes), byte-stable across runs.
  std::string csv() const;
  /// Human-readable report including per-stage runtimes.
  std::string text() const;
};

PipelineSummary run_pipeline(const PipelineOptions& options);

}  // namespace radmap
