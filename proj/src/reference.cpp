#include "radmap/reference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "radmap/errors.hpp"

namespace radmap::ref {

namespace {

constexpr double kAlphaSkip = 1.0 / 255.0;
constexpr double kAlphaClamp = 0.99;
constexpr double kTransmittanceMin = 1e-4;

double nn_distance(const Vec3& p, const std::vector<Vec3>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& q : set) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace

std::vector<int> local_density_quadratic(const RadarFrame& frame, double radius) {
  const double r2 = radius * radius;
  std::vector<int> out(frame.points.size(), 0);
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    for (std::size_t j = 0; j < frame.points.size(); ++j) {
      if (i == j) continue;
      if ((frame.points[i].position - frame.points[j].position).squaredNorm() <= r2) {
        ++out[i];
      }
    }
  }
  return out;
}

ClusterAssignment dbscan_quadratic(const RadarFrame& frame, double eps, int min_pts) {
  const int n = static_cast<int>(frame.points.size());
  const double eps2 = eps * eps;
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;

  auto neighbors = [&](int i) {
    std::vector<int> out;
    for (int j = 0; j < n; ++j) {
      if ((frame.points[static_cast<std::size_t>(i)].position -
           frame.points[static_cast<std::size_t>(j)].position)
              .squaredNorm() <= eps2) {
        out.push_back(j);
      }
    }
    return out;
  };

  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), kUnvisited);
  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (out.labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const auto neigh = neighbors(i);
    if (static_cast<int>(neigh.size()) < min_pts) {
      out.labels[static_cast<std::size_t>(i)] = kNoise;
      continue;
    }
    out.labels[static_cast<std::size_t>(i)] = cluster;
    std::deque<int> queue(neigh.begin(), neigh.end());
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      int& lj = out.labels[static_cast<std::size_t>(j)];
      if (lj == kNoise) lj = cluster;
      if (lj != kUnvisited) continue;
      lj = cluster;
      const auto nj = neighbors(j);
      if (static_cast<int>(nj.size()) >= min_pts) queue.insert(queue.end(), nj.begin(), nj.end());
    }
    ++cluster;
  }
  out.cluster_count = cluster;
  return out;
}

Correspondences nearest_correspondences_bruteforce(const RadarFrame& src_tf,
                                                   const RadarFrame& tgt) {
  Correspondences corr;
  corr.pairs.reserve(src_tf.points.size());
  for (std::size_t i = 0; i < src_tf.points.size(); ++i) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tgt.points.size(); ++j) {
      const double d2 = (src_tf.points[i].position - tgt.points[j].position).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(j);
      }
    }
    corr.pairs.push_back({static_cast<int>(i), best, std::sqrt(best_d2)});
    corr.d_max = std::max(corr.d_max, corr.pairs.back().dist);
  }
  return corr;
}

double chamfer_l1_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double ab = 0.0, ba = 0.0;
  for (const Vec3& p : a) ab += nn_distance(p, b);
  for (const Vec3& p : b) ba += nn_distance(p, a);
  return 0.5 * (ab / static_cast<double>(a.size()) + ba / static_cast<double>(b.size()));
}

double mhd_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double ab = 0.0, ba = 0.0;
  for (const Vec3& p : a) ab += nn_distance(p, b);
  for (const Vec3& p : b) ba += nn_distance(p, a);
  return std::max(ab / static_cast<double>(a.size()), ba / static_cast<double>(b.size()));
}

double fscore_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         double threshold) {
  int pa = 0, pb = 0;
  for (const Vec3& p : a) {
    if (nn_distance(p, b) < threshold) ++pa;
  }
  for (const Vec3& p : b) {
    if (nn_distance(p, a) < threshold) ++pb;
  }
  const double precision = static_cast<double>(pa) / static_cast<double>(a.size());
  const double recall = static_cast<double>(pb) / static_cast<double>(b.size());
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

RenderBuffers render_bruteforce(const GaussianMap& map, const Camera& cam,
                                const RenderOptions& opts) {
  RenderBuffers out(cam.width, cam.height);
  const Vec3 cam_pos = cam.camera_position();

  struct Splat {
    ProjectedGaussian proj;
    Mat2 inv_cov;
    double opacity;
    Vec3 color;
    Vec3 normal;
    int index;
  };
  std::vector<Splat> splats;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussians[i];
    const ProjectedGaussian proj = project(g, cam);
    if (proj.culled) continue;
    Splat s;
    s.proj = proj;
    s.inv_cov = proj.cov2d.inverse();
    s.opacity = g.opacity();
    s.color = g.color;
    const Vec3 scale = g.scale();
    int axis = 0;
    if (scale[1] < scale[axis]) axis = 1;
    if (scale[2] < scale[axis]) axis = 2;
    Vec3 n = g.rotation.normalized().toRotationMatrix().col(axis);
    if (n.dot(g.mu - cam_pos) > 0.0) n = -n;
    s.normal = n;
    s.index = static_cast<int>(i);
    splats.push_back(s);
  }
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    return a.proj.depth < b.proj.depth ||
           (a.proj.depth == b.proj.depth && a.index < b.index);
  });

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const Vec2 rho(px + 0.5, py + 0.5);
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      double depth = 0.0, alpha = 0.0, t = 1.0;
      for (const Splat& s : splats) {
        const Vec2 d = s.proj.mu2d - rho;
        const double q = d.dot(s.inv_cov * d);
        double a = s.opacity * std::exp(-0.5 * q);
        if (a < kAlphaSkip) continue;
        if (a > kAlphaClamp) a = kAlphaClamp;
        color += s.color * (a * t);
        depth += s.proj.depth * (a * t);
        normal += s.normal * (a * t);
        alpha += a * t;
        t *= 1.0 - a;
        if (opts.early_termination && t < kTransmittanceMin) break;
      }
      const std::size_t pix = static_cast<std::size_t>(py * cam.width + px);
      const double nn = normal.norm();
      if (nn > 1e-12) normal /= nn; else normal.setZero();
      for (int c = 0; c < 3; ++c) {
        out.color[3 * pix + c] = color[c];
        out.normal[3 * pix + c] = normal[c];
      }
      out.depth[pix] = depth;
      out.alpha[pix] = alpha;
    }
  }
  return out;
}

MonteCarloCs cs_divergence_monte_carlo(const GaussianMixture& p, const GaussianMixture& q,
                                       int samples, Rng& rng) {
  // int p*q = E_{x~p}[q(x)]; int p^2 = E_{x~p}[p(x)]; int q^2 = E_{x~q}[q(x)].
  auto sample_from = [&rng](const GaussianMixture& mix) {
    double u = rng.uniform();
    std::size_t k = 0;
    for (; k + 1 < mix.components.size(); ++k) {
      u -= mix.components[k].weight;
      if (u <= 0.0) break;
    }
    const auto& c = mix.components[k];
    const Eigen::LLT<Mat3> llt(c.covariance);
    const Vec3 z(rng.normal(), rng.normal(), rng.normal());
    return Vec3(c.mean + Mat3(llt.matrixL()) * z);
  };

  auto mc_expectation = [&](const GaussianMixture& from, const GaussianMixture& eval,
                            double& mean, double& stderr_out) {
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double v = gmm_density(eval, sample_from(from));
      sum += v;
      sum_sq += v * v;
    }
    mean = sum / samples;
    const double var = std::max(0.0, sum_sq / samples - mean * mean);
    stderr_out = std::sqrt(var / samples);
  };

  double i_pq, s_pq, i_pp, s_pp, i_qq, s_qq;
  mc_expectation(p, q, i_pq, s_pq);
  mc_expectation(p, p, i_pp, s_pp);
  mc_expectation(q, q, i_qq, s_qq);

  MonteCarloCs out;
  out.value = -std::log(i_pq) + 0.5 * std::log(i_pp) + 0.5 * std::log(i_qq);
  // Delta method on -log(i_pq) + log(i_pp)/2 + log(i_qq)/2.
  out.sigma = std::sqrt((s_pq / i_pq) * (s_pq / i_pq) +
                        0.25 * (s_pp / i_pp) * (s_pp / i_pp) +
                        0.25 * (s_qq / i_qq) * (s_qq / i_qq));
  return out;
}

}  // namespace radmap::ref
