#include "radmap/separate.hpp"

#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"

namespace radmap {

GaussianMap update_sky_mask(const GaussianMap& map, const Camera& cam, const ImageMask& sky2d) {
  if (sky2d.width != cam.width || sky2d.height != cam.height) {
    throw DimensionMismatch("update_sky_mask: mask does not match camera");
  }
  GaussianMap out = map;
  for (Gaussian& g : out.gaussians) {
    if (g.sky) continue;
    const Vec3 pc = cam.to_camera(g.mu);
    if (pc.z() <= 0.01) continue;
    const Vec2 px = cam.project_camera(pc);
    const int u = static_cast<int>(std::floor(px.x()));
    const int v = static_cast<int>(std::floor(px.y()));
    if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) continue;
    if (sky2d.at(u, v) != 0) g.sky = true;
  }
  return out;
}

GrowthResult neighborhood_prune(const GaussianMap& map, const PruneConfig& config,
                                const Camera& cam) {
  GrowthResult out;
  if (map.empty()) return out;

  std::vector<Vec3> centers(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) centers[i] = map.gaussians[i].mu;
  const KdTree3 tree(centers);

  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    bool remove = false;
    if (g.opacity() < config.min_opacity) {
      remove = true;
    } else {
      const auto knn = tree.knn(g.mu, 6);  // self + up to 5 neighbors
      double mean_dist = 0.0;
      int count = 0;
      for (int j : knn) {
        if (j == static_cast<int>(i)) continue;
        mean_dist += (centers[static_cast<std::size_t>(j)] - g.mu).norm();
        ++count;
      }
      if (count > 0) mean_dist /= static_cast<double>(count);
      const bool isolated = count > 0 && mean_dist > config.tau_d;
      if (isolated) {
        bool oversized = g.scale().maxCoeff() > config.tau_s;
        if (!oversized) {
          const ProjectedGaussian proj = project(g, cam);
          if (!proj.culled) {
            const double mid = 0.5 * (proj.cov2d(0, 0) + proj.cov2d(1, 1));
            const double disc = std::sqrt(
                std::max(0.0, 0.25 * (proj.cov2d(0, 0) - proj.cov2d(1, 1)) *
                                      (proj.cov2d(0, 0) - proj.cov2d(1, 1)) +
                                  proj.cov2d(0, 1) * proj.cov2d(0, 1)));
            oversized = 3.0 * std::sqrt(mid + disc) > config.tau_r;
          }
        }
        remove = oversized;
      }
    }
    if (!remove) {
      out.map.gaussians.push_back(g);
      out.parent.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace radmap
