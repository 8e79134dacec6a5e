#pragma once

#include "radmap/gaussian.hpp"
#include "radmap/growth.hpp"
#include "radmap/render.hpp"
#include "radmap/separate.hpp"

namespace radmap {

struct OptimizeView {
  Camera camera;
  ViewPriors priors;
};

struct OptimizeSchedule {
  int iterations = 15000;
  int densify_from = 500;
  int densify_interval = 100;
  double grad_threshold = 5e-4;

  double lambda_mvc = 3.0;
  int mvc_offset = 1;  // neighbor views at t + {-2, -1, 1, 2} * offset
  LossWeights loss;

  // Adam rates; mu is scaled by the scene extent.
  double lr_mu = 1.6e-4;
  double lr_color = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-15;

  // Growth / separation knobs. Scale thresholds are fractions of the scene
  // extent; interpolation d_max and prune tau_d derive from the map's median
  // nearest-neighbor distance at densification time.
  double densify_scale_frac = 0.01;
  double resplit_scale_frac = 0.05;
  int resplit_m = 4;
  double resplit_alpha = 0.6;
  double interp_opacity = 0.7;
  int interp_k = 6;
  double interp_dmax_factor = 3.0;
  double prune_taud_factor = 2.0;
  double prune_tau_s = 1.0;
  double prune_tau_r = 40.0;

  GroundCompletionConfig ground;
  bool enable_densify = true;
  bool enable_prune = true;
  bool enable_ground_completion = true;
  bool enable_sky_mask = true;

  std::uint64_t seed = 7;
};

struct OptimizeStats {
  std::size_t initial_count = 0;
  std::size_t final_count = 0;
  int iterations = 0;
  int nan_gradients = 0;
  int ground_added = 0;
  double final_loss = 0.0;
};

struct OptimizeResult {
  GaussianMap map;
  OptimizeStats stats;
};

/// Multi-view gaussian map optimization: cyclic view schedule, overlap
/// regularization from up to four neighboring keyframes, depth/normal
/// supervision on the current view, Adam updates, and periodic growth,
/// interpolation and pruning.
OptimizeResult optimize(const GaussianMap& map, const std::vector<OptimizeView>& views,
                        const OptimizeSchedule& schedule);

/// Median nearest-neighbor distance between gaussian centers.
double median_nn_distance(const GaussianMap& map);

}  // namespace radmap
