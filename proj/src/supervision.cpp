#include "radmap/supervision.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"
#include "radmap/se3.hpp"

namespace radmap {

namespace {

std::vector<Vec3> positions_of(const RadarFrame& frame) {
  std::vector<Vec3> out(frame.points.size());
  for (std::size_t i = 0; i < frame.points.size(); ++i) out[i] = frame.points[i].position;
  return out;
}

/// Eq. 7/8 for one direction: gated, slacked NN distances averaged per
/// cluster and combined with n_c/N weights (noise as one pseudo-cluster).
double cwd_one_direction(const RadarFrame& src, const RadarFrame& tgt,
                         const ClusterAssignment& src_clusters, const CwdParams& params) {
  const std::vector<int> density = local_density(src, params.radius);
  const KdTree3 tgt_tree(positions_of(tgt));

  const int n = static_cast<int>(src.points.size());
  const int buckets = src_clusters.cluster_count + 1;  // last bucket = noise
  std::vector<double> sums(static_cast<std::size_t>(buckets), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(buckets), 0);

  for (int i = 0; i < n; ++i) {
    const int raw_label = src_clusters.labels[static_cast<std::size_t>(i)];
    const int bucket = raw_label < 0 ? buckets - 1 : raw_label;
    double d = 0.0;
    if (density[static_cast<std::size_t>(i)] > params.delta) {
      const auto [idx, d2] = tgt_tree.nearest(src.points[static_cast<std::size_t>(i)].position);
      d = std::max(d2 - params.eps, 0.0);
    }
    sums[static_cast<std::size_t>(bucket)] += d;
    counts[static_cast<std::size_t>(bucket)] += 1;
  }

  double total = 0.0;
  for (int c = 0; c < buckets; ++c) {
    const int nc = counts[static_cast<std::size_t>(c)];
    if (nc == 0) continue;
    const double frac = static_cast<double>(nc) / static_cast<double>(n);
    const double weight = params.quadratic_weight ? frac * frac : frac;
    total += weight * (sums[static_cast<std::size_t>(c)] / static_cast<double>(nc));
  }
  return total;
}

double log_gaussian_product_integral(const Vec3& mu_a, const Mat3& cov_a, const Vec3& mu_b,
                                     const Mat3& cov_b) {
  const Mat3 s = cov_a + cov_b;
  const Eigen::LLT<Mat3> llt(s);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovariance("cs_divergence: singular covariance sum");
  }
  const Mat3 l = llt.matrixL();
  const double log_det = 2.0 * std::log(l(0, 0) * l(1, 1) * l(2, 2));
  if (!std::isfinite(log_det)) {
    throw DegenerateCovariance("cs_divergence: non-finite covariance determinant");
  }
  const Vec3 d = mu_a - mu_b;
  const Vec3 w = llt.solve(d);
  const double maha = d.dot(w);
  return -0.5 * (3.0 * std::log(2.0 * M_PI) + log_det + maha);
}

/// log( sum_ij w_i v_j N(mu_i; nu_j, S_i + L_j) ) with max-factoring.
double log_cross_integral(const GaussianMixture& p, const GaussianMixture& q) {
  std::vector<double> terms;
  terms.reserve(p.components.size() * q.components.size());
  double max_term = -std::numeric_limits<double>::infinity();
  for (const auto& a : p.components) {
    for (const auto& b : q.components) {
      const double t = std::log(a.weight) + std::log(b.weight) +
                       log_gaussian_product_integral(a.mean, a.covariance, b.mean, b.covariance);
      terms.push_back(t);
      max_term = std::max(max_term, t);
    }
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

}  // namespace

std::vector<int> local_density(const RadarFrame& frame, double radius) {
  if (!(radius > 0.0)) throw Error("local_density: radius must be positive");
  const KdTree3 tree(positions_of(frame));
  std::vector<int> out(frame.points.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(frame.points.size()); ++i) {
    const auto neigh = tree.radius_search(frame.points[static_cast<std::size_t>(i)].position, radius);
    out[static_cast<std::size_t>(i)] = static_cast<int>(neigh.size()) - 1;  // exclude self
  }
  return out;
}

double cluster_weighted_distance(const RadarFrame& src_tf, const RadarFrame& tgt,
                                 const ClusterAssignment& src_clusters,
                                 const ClusterAssignment& tgt_clusters, const CwdParams& params) {
  if (src_tf.points.empty() || tgt.points.empty()) {
    throw EmptyFrame("cluster_weighted_distance: empty frame");
  }
  if (src_clusters.labels.size() != src_tf.points.size() ||
      tgt_clusters.labels.size() != tgt.points.size()) {
    throw DimensionMismatch("cluster_weighted_distance: cluster labels inconsistent with frames");
  }
  return cwd_one_direction(src_tf, tgt, src_clusters, params) +
         cwd_one_direction(tgt, src_tf, tgt_clusters, params);
}

PolarOccupancy polar_occupancy(const RadarFrame& frame, int n_rings, int n_sectors, double r_max) {
  if (n_rings < 1 || n_sectors < 1) throw Error("polar_occupancy: grid must be at least 1x1");
  if (!(r_max > 0.0)) throw Error("polar_occupancy: r_max must be positive");
  PolarOccupancy occ;
  occ.n_rings = n_rings;
  occ.n_sectors = n_sectors;
  occ.r_max = r_max;
  occ.grid.assign(static_cast<std::size_t>(n_rings * n_sectors), 0);

  const double dr = r_max / static_cast<double>(n_rings);
  const double dtheta = 360.0 / static_cast<double>(n_sectors);
  for (const RadarPoint& p : frame.points) {
    const double r = std::hypot(p.position.x(), p.position.y());
    if (r >= r_max) continue;
    double theta = 90.0 + std::atan2(p.position.y(), p.position.x()) * 180.0 / M_PI;
    theta = std::fmod(theta + 360.0, 360.0);
    const int ring = std::min(static_cast<int>(r / dr), n_rings - 1);
    const int sector = std::min(static_cast<int>(theta / dtheta), n_sectors - 1);
    occ.grid[static_cast<std::size_t>(ring * n_sectors + sector)] = 1;
  }
  return occ;
}

double column_occupancy_score(const PolarOccupancy& a, const PolarOccupancy& b) {
  if (a.n_rings != b.n_rings || a.n_sectors != b.n_sectors) {
    throw DimensionMismatch("column_occupancy_score: grid dimensions differ");
  }
  double total = 0.0;
  int valid = 0;
  for (int l = 0; l < a.n_sectors; ++l) {
    int dot = 0, na = 0, nb = 0;
    for (int k = 0; k < a.n_rings; ++k) {
      const int va = a.at(k, l), vb = b.at(k, l);
      dot += va * vb;
      na += va;
      nb += vb;
    }
    if (na == 0 || nb == 0) continue;  // column empty in either grid
    total += static_cast<double>(dot) /
             (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
    ++valid;
  }
  if (valid == 0) return 0.0;
  return 1.0 - total / static_cast<double>(valid);
}

GaussianMixture gmm_from_frame(const RadarFrame& frame, double bandwidth) {
  if (frame.points.empty()) throw EmptyFrame("gmm_from_frame: empty frame");
  if (!(bandwidth > 0.0)) throw Error("gmm_from_frame: bandwidth must be positive");
  GaussianMixture mix;
  mix.components.resize(frame.points.size());
  const double w = 1.0 / static_cast<double>(frame.points.size());
  const Mat3 cov = bandwidth * bandwidth * Mat3::Identity();
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    mix.components[i].weight = w;
    mix.components[i].mean = frame.points[i].position;
    mix.components[i].covariance = cov;
  }
  return mix;
}

double gmm_density(const GaussianMixture& mixture, const Vec3& x) {
  double acc = 0.0;
  for (const auto& c : mixture.components) {
    const Eigen::LLT<Mat3> llt(c.covariance);
    const Mat3 l = llt.matrixL();
    const double log_det = 2.0 * std::log(l(0, 0) * l(1, 1) * l(2, 2));
    const Vec3 d = x - c.mean;
    const double maha = d.dot(llt.solve(d));
    acc += c.weight * std::exp(-0.5 * (3.0 * std::log(2.0 * M_PI) + log_det + maha));
  }
  return acc;
}

double cs_divergence(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.components.empty() || q.components.empty()) {
    throw Error("cs_divergence: empty mixture");
  }
  const double log_pq = log_cross_integral(p, q);
  const double log_pp = log_cross_integral(p, p);
  const double log_qq = log_cross_integral(q, q);
  return -log_pq + 0.5 * (log_pp + log_qq);
}

double feature_contrast_score(const RadarFrame& src_tf, const RadarFrame& tgt,
                              const FeatureMatrix& feat_s, const FeatureMatrix& feat_t,
                              double tau) {
  if (!(tau > 0.0)) throw Error("feature_contrast_score: tau must be positive");
  if (feat_s.rows != static_cast<int>(src_tf.points.size()) ||
      feat_t.rows != static_cast<int>(tgt.points.size()) || feat_s.dim != feat_t.dim) {
    throw DimensionMismatch("feature_contrast_score: feature shape mismatch");
  }
  if (src_tf.points.empty() || tgt.points.empty()) {
    throw EmptyFrame("feature_contrast_score: empty frame");
  }

  const int dim = feat_s.dim;
  auto cosine = [dim](const double* a, const double* b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int k = 0; k < dim; ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  const int n = static_cast<int>(src_tf.points.size());
  const int m = static_cast<int>(tgt.points.size());
  double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
  for (int i = 0; i < n; ++i) {
    const Vec3& x = src_tf.points[static_cast<std::size_t>(i)].position;
    int j_pos = 0, j_neg = 0;
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      const double d2 = (tgt.points[static_cast<std::size_t>(j)].position - x).squaredNorm();
      if (d2 < best) {
        best = d2;
        j_pos = j;
      }
      if (d2 > worst) {
        worst = d2;
        j_neg = j;
      }
    }
    const double s_pos = cosine(feat_s.row(i), feat_t.row(j_pos));
    const double s_neg = cosine(feat_s.row(i), feat_t.row(j_neg));
    // -log softmax(pos | {pos, neg}) = log(1 + exp((neg - pos)/tau))
    acc += std::log1p(std::exp((s_neg - s_pos) / tau));
  }
  return acc / static_cast<double>(n);
}

double motion_smoothness(const Se3Pose& t_km2, const Se3Pose& t_km1, const Se3Pose& t_k,
                         double eps_r, double eps_t, double weight) {
  if (weight < 0.0) throw Error("motion_smoothness: weight must be >= 0");
  const Vec3 e0 = to_euler(t_km2.rotation).vec();
  const Vec3 e1 = to_euler(t_km1.rotation).vec();
  const Vec3 e2 = to_euler(t_k.rotation).vec();
  const Vec3 rot_accel = (e2 - e1) - (e1 - e0);
  const Vec3 trans_accel = (t_k.translation - t_km1.translation) -
                           (t_km1.translation - t_km2.translation);
  const double r_term = std::max(rot_accel.lpNorm<1>() - eps_r, 0.0);
  const double t_term = std::max(trans_accel.lpNorm<1>() - eps_t, 0.0);
  return weight * (r_term + t_term);
}

}  // namespace radmap
