#pragma once

#include "radmap/gaussian.hpp"
#include "radmap/growth.hpp"
#include "radmap/image.hpp"

namespace radmap {

/// Flags every in-frustum gaussian whose projected center lands in a sky
/// pixel. Flags are sticky: once sky, always sky.
GaussianMap update_sky_mask(const GaussianMap& map, const Camera& cam, const ImageMask& sky2d);

struct PruneConfig {
  double tau_d = 1.0;   // mean 5-NN center distance threshold, meters
  double tau_s = 1.0;   // max scale threshold, meters
  double tau_r = 40.0;  // projected 2D radius threshold, pixels
  double min_opacity = 0.005;
};

/// Removes gaussians that are both isolated (mean distance to the 5 nearest
/// centers above tau_d) and oversized on either the 3D scale or the
/// projected radius; low-opacity gaussians are always culled. Large
/// gaussians embedded in dense neighborhoods survive for later splitting.
GrowthResult neighborhood_prune(const GaussianMap& map, const PruneConfig& config,
                                const Camera& cam);

}  // namespace radmap
