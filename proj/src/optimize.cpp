#include "radmap/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"

namespace radmap {

namespace {

/// Per-gaussian Adam state over the 14 scalar parameters
/// (mu 3, logit 1, log-scale 3, quat 4, color 3).
constexpr int kParamCount = 14;

struct AdamState {
  std::vector<double> m;  // first moments, kParamCount per gaussian
  std::vector<double> v;  // second moments

  void resize(std::size_t n) {
    m.assign(n * kParamCount, 0.0);
    v.assign(n * kParamCount, 0.0);
  }

  void remap(const std::vector<int>& parent) {
    std::vector<double> nm(parent.size() * kParamCount, 0.0);
    std::vector<double> nv(parent.size() * kParamCount, 0.0);
    for (std::size_t i = 0; i < parent.size(); ++i) {
      if (parent[i] < 0) continue;
      const std::size_t src = static_cast<std::size_t>(parent[i]) * kParamCount;
      std::copy_n(m.begin() + static_cast<std::ptrdiff_t>(src), kParamCount,
                  nm.begin() + static_cast<std::ptrdiff_t>(i * kParamCount));
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(src), kParamCount,
                  nv.begin() + static_cast<std::ptrdiff_t>(i * kParamCount));
    }
    m = std::move(nm);
    v = std::move(nv);
  }
};

double scene_extent(const GaussianMap& map) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Gaussian& g : map.gaussians) {
    lo = lo.cwiseMin(g.mu);
    hi = hi.cwiseMax(g.mu);
  }
  return std::max(0.5 * (hi - lo).norm(), 1.0);
}

int sanitize(GradientBuffers& grads) {
  int nan_count = 0;
  auto fix = [&nan_count](double& v) {
    if (!std::isfinite(v)) {
      v = 0.0;
      ++nan_count;
    }
  };
  for (std::size_t i = 0; i < grads.d_logit.size(); ++i) {
    for (int c = 0; c < 3; ++c) fix(grads.d_mu[i][c]);
    fix(grads.d_logit[i]);
    for (int c = 0; c < 3; ++c) fix(grads.d_log_scale[i][c]);
    for (int c = 0; c < 4; ++c) fix(grads.d_rotation[i][c]);
    for (int c = 0; c < 3; ++c) fix(grads.d_color[i][c]);
  }
  return nan_count;
}

}  // namespace

double median_nn_distance(const GaussianMap& map) {
  if (map.size() < 2) return 1.0;
  std::vector<Vec3> centers(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) centers[i] = map.gaussians[i].mu;
  const KdTree3 tree(centers);
  std::vector<double> dists(map.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(map.size()); ++i) {
    const auto knn = tree.knn(centers[static_cast<std::size_t>(i)], 2);
    double d = 0.0;
    for (int j : knn) {
      if (j != static_cast<int>(i)) d = (centers[static_cast<std::size_t>(j)] -
                                         centers[static_cast<std::size_t>(i)]).norm();
    }
    dists[static_cast<std::size_t>(i)] = d;
  }
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                   dists.end());
  return std::max(dists[dists.size() / 2], 1e-6);
}

OptimizeResult optimize(const GaussianMap& map, const std::vector<OptimizeView>& views,
                        const OptimizeSchedule& schedule) {
  if (views.empty()) throw Error("optimize: need at least one view");

  OptimizeResult result;
  result.map = map;
  result.stats.initial_count = map.size();

  Rng rng(schedule.seed);
  const double extent = scene_extent(map);
  const double lr_mu = schedule.lr_mu * extent;
  const double split_scale_threshold = schedule.densify_scale_frac * extent;
  const double resplit_scale_threshold = schedule.resplit_scale_frac * extent;

  AdamState adam;
  adam.resize(result.map.size());
  std::vector<double> pos_accum(result.map.size(), 0.0);
  std::vector<int> pos_count(result.map.size(), 0);
  std::vector<char> visited(views.size(), 0);

  const int offsets[4] = {-2 * schedule.mvc_offset, -schedule.mvc_offset, schedule.mvc_offset,
                          2 * schedule.mvc_offset};

  LossWeights color_only = schedule.loss;
  color_only.w_depth = 0.0;
  color_only.w_normal = 0.0;

  for (int it = 0; it < schedule.iterations; ++it) {
    const int view_idx = it % static_cast<int>(views.size());
    const OptimizeView& view = views[static_cast<std::size_t>(view_idx)];

    if (!visited[static_cast<std::size_t>(view_idx)]) {
      visited[static_cast<std::size_t>(view_idx)] = 1;
      if (schedule.enable_sky_mask) {
        result.map = update_sky_mask(result.map, view.camera, view.priors.sky2d);
      }
      if (schedule.enable_ground_completion) {
        Rng ground_rng = rng.fork(0x67726f756eULL + static_cast<std::uint64_t>(view_idx));
        GroundCompletionResult gc =
            ground_completion(result.map, view.camera, view.priors, schedule.ground, ground_rng);
        result.stats.ground_added += gc.added;
        if (gc.added > 0) {
          result.map = std::move(gc.map);
          adam.remap(gc.parent);
          pos_accum.assign(result.map.size(), 0.0);
          pos_count.assign(result.map.size(), 0);
        }
      }
    }

    // Current view carries the depth/normal terms; neighbors contribute the
    // color loss scaled by lambda_mvc / 4 (absent neighbors are dropped but
    // the divisor stays 4).
    RenderLoss main = render_with_gradients(result.map, view.camera, view.priors, schedule.loss);
    result.stats.nan_gradients += sanitize(main.grads);
    double total_loss = main.total;

    const double mvc_scale = schedule.lambda_mvc / 4.0;
    for (int o = 0; o < 4; ++o) {
      const int nb = view_idx + offsets[o];
      if (nb < 0 || nb >= static_cast<int>(views.size()) || nb == view_idx) continue;
      const OptimizeView& nview = views[static_cast<std::size_t>(nb)];
      RenderLoss side = render_with_gradients(result.map, nview.camera, nview.priors, color_only);
      result.stats.nan_gradients += sanitize(side.grads);
      total_loss += mvc_scale * side.total;
      for (std::size_t i = 0; i < result.map.size(); ++i) {
        main.grads.d_mu[i] += mvc_scale * side.grads.d_mu[i];
        main.grads.d_logit[i] += mvc_scale * side.grads.d_logit[i];
        main.grads.d_log_scale[i] += mvc_scale * side.grads.d_log_scale[i];
        main.grads.d_rotation[i] += mvc_scale * side.grads.d_rotation[i];
        main.grads.d_color[i] += mvc_scale * side.grads.d_color[i];
        if (side.grads.visible[i] != 0) {
          pos_accum[i] += side.grads.pos2d_grad_mag[i];
          pos_count[i] += 1;
        }
      }
    }
    for (std::size_t i = 0; i < result.map.size(); ++i) {
      if (main.grads.visible[i] != 0) {
        pos_accum[i] += main.grads.pos2d_grad_mag[i];
        pos_count[i] += 1;
      }
    }
    result.stats.final_loss = total_loss;

    // Adam update; bias correction uses the global step index.
    const double t_step = static_cast<double>(it + 1);
    const double bc1 = 1.0 - std::pow(schedule.beta1, t_step);
    const double bc2 = 1.0 - std::pow(schedule.beta2, t_step);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(result.map.size()); ++gi) {
      Gaussian& g = result.map.gaussians[static_cast<std::size_t>(gi)];
      double params[kParamCount] = {
          g.mu.x(),        g.mu.y(),        g.mu.z(),        g.opacity_logit,
          g.log_scale.x(), g.log_scale.y(), g.log_scale.z(), g.rotation.w(),
          g.rotation.x(),  g.rotation.y(),  g.rotation.z(),  g.color.x(),
          g.color.y(),     g.color.z()};
      const double grads[kParamCount] = {
          main.grads.d_mu[static_cast<std::size_t>(gi)].x(),
          main.grads.d_mu[static_cast<std::size_t>(gi)].y(),
          main.grads.d_mu[static_cast<std::size_t>(gi)].z(),
          main.grads.d_logit[static_cast<std::size_t>(gi)],
          main.grads.d_log_scale[static_cast<std::size_t>(gi)].x(),
          main.grads.d_log_scale[static_cast<std::size_t>(gi)].y(),
          main.grads.d_log_scale[static_cast<std::size_t>(gi)].z(),
          main.grads.d_rotation[static_cast<std::size_t>(gi)][0],
          main.grads.d_rotation[static_cast<std::size_t>(gi)][1],
          main.grads.d_rotation[static_cast<std::size_t>(gi)][2],
          main.grads.d_rotation[static_cast<std::size_t>(gi)][3],
          main.grads.d_color[static_cast<std::size_t>(gi)].x(),
          main.grads.d_color[static_cast<std::size_t>(gi)].y(),
          main.grads.d_color[static_cast<std::size_t>(gi)].z()};
      const double rates[kParamCount] = {
          lr_mu, lr_mu, lr_mu, schedule.lr_opacity,
          schedule.lr_scale, schedule.lr_scale, schedule.lr_scale, schedule.lr_rotation,
          schedule.lr_rotation, schedule.lr_rotation, schedule.lr_rotation, schedule.lr_color,
          schedule.lr_color, schedule.lr_color};
      double* m = &adam.m[static_cast<std::size_t>(gi) * kParamCount];
      double* v = &adam.v[static_cast<std::size_t>(gi) * kParamCount];
      for (int p = 0; p < kParamCount; ++p) {
        m[p] = schedule.beta1 * m[p] + (1.0 - schedule.beta1) * grads[p];
        v[p] = schedule.beta2 * v[p] + (1.0 - schedule.beta2) * grads[p] * grads[p];
        const double mhat = m[p] / bc1;
        const double vhat = v[p] / bc2;
        params[p] -= rates[p] * mhat / (std::sqrt(vhat) + schedule.adam_eps);
      }
      g.mu = Vec3(params[0], params[1], params[2]);
      g.opacity_logit = params[3];
      g.log_scale = Vec3(params[4], params[5], params[6]);
      g.rotation = Quat(params[7], params[8], params[9], params[10]).normalized();
      g.color = Vec3(params[11], params[12], params[13]).cwiseMax(0.0).cwiseMin(1.0);
    }

    // Periodic growth and pruning.
    const bool densify_now = it >= schedule.densify_from &&
                             (it - schedule.densify_from) % schedule.densify_interval == 0;
    if (densify_now && (schedule.enable_densify || schedule.enable_prune)) {
      if (schedule.enable_densify) {
        std::vector<double> grad_mean(result.map.size(), 0.0);
        for (std::size_t i = 0; i < result.map.size(); ++i) {
          if (pos_count[i] > 0) grad_mean[i] = pos_accum[i] / pos_count[i];
        }
        Rng densify_rng = rng.fork(0x64656e73ULL + static_cast<std::uint64_t>(it));
        GrowthResult grown = densify_clone_split(result.map, grad_mean, schedule.grad_threshold,
                                                 split_scale_threshold, densify_rng);
        result.map = std::move(grown.map);
        adam.remap(grown.parent);

        GrowthResult resplit = geometry_aware_resplit(result.map, resplit_scale_threshold,
                                                      schedule.resplit_m, schedule.resplit_alpha,
                                                      densify_rng);
        result.map = std::move(resplit.map);
        adam.remap(resplit.parent);

        const double med = median_nn_distance(result.map);
        GrowthResult interp = interpolate_gaussians(result.map, schedule.interp_opacity,
                                                    schedule.interp_k,
                                                    schedule.interp_dmax_factor * med);
        result.map = std::move(interp.map);
        adam.remap(interp.parent);
      }
      if (schedule.enable_prune) {
        PruneConfig prune;
        prune.tau_d = schedule.prune_taud_factor * median_nn_distance(result.map);
        prune.tau_s = schedule.prune_tau_s;
        prune.tau_r = schedule.prune_tau_r;
        GrowthResult pruned = neighborhood_prune(result.map, prune, view.camera);
        result.map = std::move(pruned.map);
        adam.remap(pruned.parent);
      }
      if (schedule.enable_sky_mask) {
        result.map = update_sky_mask(result.map, view.camera, view.priors.sky2d);
      }
      pos_accum.assign(result.map.size(), 0.0);
      pos_count.assign(result.map.size(), 0);
    }
    result.stats.iterations = it + 1;
  }
  result.stats.final_count = result.map.size();
  return result;
}

}  // namespace radmap
