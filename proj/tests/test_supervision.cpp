#include <doctest.h>

#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/reference.hpp"
#include "radmap/rng.hpp"
#include "radmap/se3.hpp"
#include "radmap/supervision.hpp"

using namespace radmap;

namespace {

RadarFrame random_frame(Rng& rng, int n, double extent = 15.0) {
  RadarFrame frame;
  for (int i = 0; i < n; ++i) {
    frame.points.push_back({Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                                 rng.uniform(-2, 2)),
                            rng.normal(), rng.normal(10, 3)});
  }
  return frame;
}

GaussianMixture random_mixture(Rng& rng, int k) {
  GaussianMixture mix;
  double wsum = 0.0;
  for (int i = 0; i < k; ++i) {
    GaussianMixture::Component c;
    c.weight = rng.uniform(0.2, 1.0);
    wsum += c.weight;
    c.mean = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    // random SPD via A A^T + eps I
    Mat3 a;
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) a(r, cc) = rng.normal(0.0, 0.4);
    c.covariance = a * a.transpose() + 0.05 * Mat3::Identity();
    mix.components.push_back(c);
  }
  for (auto& c : mix.components) c.weight /= wsum;
  return mix;
}

}  // namespace

TEST_CASE("local_density") {
  SUBCASE("isolated point has zero density") {
    RadarFrame frame;
    frame.points.push_back({Vec3(0, 0, 0), 0, 0});
    frame.points.push_back({Vec3(100, 0, 0), 0, 0});
    const auto density = local_density(frame, 1.0);
    CHECK(density[0] == 0);
    CHECK(density[1] == 0);
  }
  SUBCASE("coincident points count each other") {
    RadarFrame frame;
    for (int i = 0; i < 5; ++i) frame.points.push_back({Vec3(1, 2, 3), 0, 0});
    const auto density = local_density(frame, 0.5);
    for (int d : density) CHECK(d == 4);
  }
  SUBCASE("random frame matches quadratic oracle") {
    Rng rng(21);
    const RadarFrame frame = random_frame(rng, 400);
    CHECK(local_density(frame, 2.0) == ref::local_density_quadratic(frame, 2.0));
  }
}

TEST_CASE("cluster_weighted_distance") {
  Rng rng(22);

  SUBCASE("zero on identical frames") {
    const RadarFrame frame = random_frame(rng, 120, 5.0);
    const ClusterAssignment clusters =
        cluster_summaries(frame, std::vector<int>(frame.points.size(), 0));
    CwdParams params;
    params.delta = 0;  // every point participates
    CHECK(cluster_weighted_distance(frame, frame, clusters, clusters, params) == 0.0);
  }

  SUBCASE("uniform single cluster closed form") {
    // Two dense identical clusters offset by 0.1 m: per direction each point
    // contributes max(0.01 - eps, 0).
    RadarFrame a;
    for (int i = 0; i < 50; ++i) a.points.push_back({Vec3(0.02 * i, 0, 0), 0, 0});
    RadarFrame b = a;
    for (auto& p : b.points) p.position.y() += 0.1;
    const ClusterAssignment ca = cluster_summaries(a, std::vector<int>(a.points.size(), 0));
    CwdParams params;
    params.delta = 0;
    params.radius = 1.0;
    params.eps = 0.01;
    CHECK(cluster_weighted_distance(a, b, ca, ca, params) == doctest::Approx(0.0));
    params.eps = 0.0;
    CHECK(cluster_weighted_distance(a, b, ca, ca, params) ==
          doctest::Approx(2.0 * 0.01).epsilon(1e-12));
  }

  SUBCASE("random clustered frames match the double-loop oracle") {
    for (int trial = 0; trial < 3; ++trial) {
      const RadarFrame src = random_frame(rng, 150);
      const RadarFrame tgt = random_frame(rng, 170);
      const ClusterAssignment sc = cluster_summaries(
          src, [&] {
            std::vector<int> l(src.points.size());
            for (auto& v : l) v = static_cast<int>(rng.uniform_index(5)) - 1;
            return l;
          }());
      const ClusterAssignment tc = cluster_summaries(
          tgt, [&] {
            std::vector<int> l(tgt.points.size());
            for (auto& v : l) v = static_cast<int>(rng.uniform_index(4)) - 1;
            return l;
          }());
      CwdParams params;
      params.delta = 2;
      params.eps = 0.0225;
      params.radius = 3.0;

      // direct evaluation of the weighted bidirectional sum
      auto direction = [&](const RadarFrame& from, const RadarFrame& to,
                           const ClusterAssignment& clusters) {
        const auto density = ref::local_density_quadratic(from, params.radius);
        const int buckets = clusters.cluster_count + 1;
        std::vector<double> sums(static_cast<std::size_t>(buckets), 0.0);
        std::vector<int> counts(static_cast<std::size_t>(buckets), 0);
        for (std::size_t i = 0; i < from.points.size(); ++i) {
          double d = 0.0;
          if (density[i] > params.delta) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) {
              best = std::min(best, (from.points[i].position - q.position).squaredNorm());
            }
            d = std::max(best - params.eps, 0.0);
          }
          const int label = clusters.labels[i] < 0 ? buckets - 1 : clusters.labels[i];
          sums[static_cast<std::size_t>(label)] += d;
          counts[static_cast<std::size_t>(label)] += 1;
        }
        double total = 0.0;
        for (int c = 0; c < buckets; ++c) {
          if (counts[static_cast<std::size_t>(c)] == 0) continue;
          const double frac = static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                              static_cast<double>(from.points.size());
          total += frac * sums[static_cast<std::size_t>(c)] /
                   static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
        return total;
      };
      const double expect = direction(src, tgt, sc) + direction(tgt, src, tc);
      CHECK(cluster_weighted_distance(src, tgt, sc, tc, params) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }

  SUBCASE("non-negative always") {
    for (int trial = 0; trial < 5; ++trial) {
      const RadarFrame src = random_frame(rng, 80);
      const RadarFrame tgt = random_frame(rng, 80);
      const ClusterAssignment sc =
          cluster_summaries(src, std::vector<int>(src.points.size(), -1));
      const ClusterAssignment tc =
          cluster_summaries(tgt, std::vector<int>(tgt.points.size(), -1));
      CHECK(cluster_weighted_distance(src, tgt, sc, tc, CwdParams{}) >= 0.0);
    }
  }
}

TEST_CASE("polar_occupancy") {
  SUBCASE("direct formula example") {
    RadarFrame frame;
    frame.points.push_back({Vec3(1, 0, 0.3), 0, 0});
    const PolarOccupancy occ = polar_occupancy(frame, 1, 4, 2.0);
    // theta = 90 + 0 -> sector floor(90/90) = 1
    CHECK(occ.at(0, 1) == 1);
    int total = 0;
    for (auto v : occ.grid) total += v;
    CHECK(total == 1);
  }
  SUBCASE("empty frame is all zeros") {
    const PolarOccupancy occ = polar_occupancy(RadarFrame{}, 8, 16, 50.0);
    for (auto v : occ.grid) CHECK(v == 0);
  }
  SUBCASE("random frame matches scalar oracle") {
    Rng rng(23);
    const RadarFrame frame = random_frame(rng, 500, 60.0);
    const int n_rings = 16, n_sectors = 24;
    const double r_max = 50.0;
    const PolarOccupancy occ = polar_occupancy(frame, n_rings, n_sectors, r_max);
    std::vector<std::uint8_t> expect(static_cast<std::size_t>(n_rings * n_sectors), 0);
    for (const auto& p : frame.points) {
      const double r = std::sqrt(p.position.x() * p.position.x() +
                                 p.position.y() * p.position.y());
      if (r >= r_max) continue;
      double theta = 90.0 + std::atan2(p.position.y(), p.position.x()) * 180.0 / M_PI;
      while (theta < 0.0) theta += 360.0;
      while (theta >= 360.0) theta -= 360.0;
      const int ring = static_cast<int>(r / (r_max / n_rings));
      const int sector = static_cast<int>(theta / (360.0 / n_sectors));
      expect[static_cast<std::size_t>(ring * n_sectors + sector)] = 1;
    }
    CHECK(occ.grid == expect);
  }
  SUBCASE("rotation by whole sectors cyclically shifts columns") {
    Rng rng(24);
    const int n_sectors = 12;
    RadarFrame frame;
    // keep points away from bin boundaries
    for (int i = 0; i < 200; ++i) {
      const double theta = (rng.uniform_index(n_sectors) + 0.3 + 0.4 * rng.uniform()) * 2.0 *
                           M_PI / n_sectors;
      const double r = rng.uniform(2.0, 45.0);
      frame.points.push_back({Vec3(r * std::cos(theta), r * std::sin(theta), 0), 0, 0});
    }
    const int shift = 3;
    const double angle = shift * 2.0 * M_PI / n_sectors;
    Se3Pose rot;
    rot.rotation = from_euler(0, 0, angle);
    const PolarOccupancy a = polar_occupancy(frame, 8, n_sectors, 50.0);
    const PolarOccupancy b = polar_occupancy(transform_frame(frame, rot), 8, n_sectors, 50.0);
    for (int k = 0; k < 8; ++k) {
      for (int l = 0; l < n_sectors; ++l) {
        CHECK(a.at(k, l) == b.at(k, (l + shift) % n_sectors));
      }
    }
  }
}

TEST_CASE("column_occupancy_score") {
  Rng rng(25);
  SUBCASE("identical grids score zero") {
    const RadarFrame frame = random_frame(rng, 200, 40.0);
    const PolarOccupancy occ = polar_occupancy(frame, 8, 12, 50.0);
    CHECK(column_occupancy_score(occ, occ) == 0.0);
  }
  SUBCASE("single shared column with disjoint occupancy scores one") {
    PolarOccupancy a, b;
    a.n_rings = b.n_rings = 4;
    a.n_sectors = b.n_sectors = 3;
    a.r_max = b.r_max = 10.0;
    a.grid.assign(12, 0);
    b.grid.assign(12, 0);
    a.grid[0 * 3 + 1] = 1;  // ring 0, sector 1
    b.grid[2 * 3 + 1] = 1;  // ring 2, same sector
    CHECK(column_occupancy_score(a, b) == 1.0);
  }
  SUBCASE("empty valid set scores zero") {
    PolarOccupancy a, b;
    a.n_rings = b.n_rings = 2;
    a.n_sectors = b.n_sectors = 2;
    a.r_max = b.r_max = 1.0;
    a.grid = {1, 0, 1, 0};
    b.grid = {0, 1, 0, 1};  // no column occupied in both
    CHECK(column_occupancy_score(a, b) == 0.0);
  }
  SUBCASE("matches column loop oracle and is symmetric") {
    for (int trial = 0; trial < 5; ++trial) {
      const PolarOccupancy a = polar_occupancy(random_frame(rng, 150, 45.0), 8, 12, 50.0);
      const PolarOccupancy b = polar_occupancy(random_frame(rng, 150, 45.0), 8, 12, 50.0);
      double total = 0.0;
      int valid = 0;
      for (int l = 0; l < 12; ++l) {
        double dot = 0, na = 0, nb = 0;
        for (int k = 0; k < 8; ++k) {
          dot += a.at(k, l) * b.at(k, l);
          na += a.at(k, l);
          nb += b.at(k, l);
        }
        if (na > 0 && nb > 0) {
          total += dot / std::sqrt(na * nb);
          ++valid;
        }
      }
      const double expect = valid == 0 ? 0.0 : 1.0 - total / valid;
      const double got = column_occupancy_score(a, b);
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
      CHECK(got == column_occupancy_score(b, a));
      CHECK(got >= 0.0);
      CHECK(got <= 1.0);
    }
  }
  SUBCASE("dimension mismatch throws") {
    PolarOccupancy a, b;
    a.n_rings = 2;
    a.n_sectors = 2;
    a.grid.assign(4, 0);
    b.n_rings = 3;
    b.n_sectors = 2;
    b.grid.assign(6, 0);
    CHECK_THROWS_AS(column_occupancy_score(a, b), DimensionMismatch);
  }
}

TEST_CASE("gmm_from_frame") {
  Rng rng(26);
  SUBCASE("single point mixture") {
    RadarFrame frame;
    frame.points.push_back({Vec3(1, 2, 3), 0, 0});
    const GaussianMixture mix = gmm_from_frame(frame, 0.5);
    REQUIRE(mix.components.size() == 1);
    CHECK(mix.components[0].weight == 1.0);
    CHECK(mix.components[0].mean == Vec3(1, 2, 3));
  }
  SUBCASE("weights sum to one") {
    const RadarFrame frame = random_frame(rng, 37);
    const GaussianMixture mix = gmm_from_frame(frame, 0.5);
    double sum = 0.0;
    for (const auto& c : mix.components) sum += c.weight;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("density equals kernel density estimate") {
    const RadarFrame frame = random_frame(rng, 25, 3.0);
    const double bw = 0.7;
    const GaussianMixture mix = gmm_from_frame(frame, bw);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec3 x(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      double kde = 0.0;
      const double norm = std::pow(2.0 * M_PI * bw * bw, -1.5);
      for (const auto& p : frame.points) {
        kde += norm * std::exp(-(x - p.position).squaredNorm() / (2.0 * bw * bw));
      }
      kde /= static_cast<double>(frame.points.size());
      CHECK(gmm_density(mix, x) == doctest::Approx(kde).epsilon(1e-12));
    }
  }
}

TEST_CASE("cs_divergence") {
  Rng rng(27);
  SUBCASE("zero on identical mixtures") {
    for (int trial = 0; trial < 5; ++trial) {
      const GaussianMixture mix = random_mixture(rng, 4);
      CHECK(std::abs(cs_divergence(mix, mix)) < 1e-12);
    }
  }
  SUBCASE("symmetric and non-negative") {
    for (int trial = 0; trial < 5; ++trial) {
      const GaussianMixture p = random_mixture(rng, 3);
      const GaussianMixture q = random_mixture(rng, 5);
      const double pq = cs_divergence(p, q);
      CHECK(pq == doctest::Approx(cs_divergence(q, p)).epsilon(1e-12));
      CHECK(pq >= 0.0);
    }
  }
  SUBCASE("two isotropic singles: closed form d^2/(4 sigma^2)") {
    // Symbolic: int pq = N(d; 0, 2 s^2 I), sqrt(int p^2 int q^2) = (4 pi s^2)^{-3/2}
    // so D = d^2 / (4 s^2) with no residual log term.
    const double sigma = 0.6;
    const double d = 1.3;
    GaussianMixture p, q;
    GaussianMixture::Component c;
    c.weight = 1.0;
    c.covariance = sigma * sigma * Mat3::Identity();
    c.mean = Vec3::Zero();
    p.components.push_back(c);
    c.mean = Vec3(d, 0, 0);
    q.components.push_back(c);
    CHECK(cs_divergence(p, q) == doctest::Approx(d * d / (4.0 * sigma * sigma)).epsilon(1e-12));
  }
  SUBCASE("matches Monte-Carlo integration within 3 sigma") {
    for (int trial = 0; trial < 3; ++trial) {
      const GaussianMixture p = random_mixture(rng, 3);
      const GaussianMixture q = random_mixture(rng, 3);
      const double closed = cs_divergence(p, q);
      Rng mc_rng(1000 + static_cast<std::uint64_t>(trial));
      const auto mc = ref::cs_divergence_monte_carlo(p, q, 200000, mc_rng);
      CHECK(std::abs(closed - mc.value) < 3.0 * mc.sigma + 1e-9);
    }
  }
  SUBCASE("well separated mixtures stay finite (max factoring)") {
    GaussianMixture p, q;
    GaussianMixture::Component c;
    c.weight = 1.0;
    c.covariance = 0.01 * Mat3::Identity();
    c.mean = Vec3::Zero();
    p.components.push_back(c);
    c.mean = Vec3(500, 0, 0);
    q.components.push_back(c);
    const double far = cs_divergence(p, q);
    CHECK(std::isfinite(far));
    CHECK(far > 1e4);
  }
  SUBCASE("degenerate covariance throws") {
    GaussianMixture p;
    GaussianMixture::Component c;
    c.weight = 1.0;
    c.mean = Vec3::Zero();
    c.covariance = Mat3::Zero();
    p.components.push_back(c);
    CHECK_THROWS_AS(cs_divergence(p, p), DegenerateCovariance);
  }
}

TEST_CASE("feature_contrast_score") {
  SUBCASE("closed forms") {
    // one source point; positive at distance 0 with aligned features,
    // negative far away with opposite features
    RadarFrame src, tgt;
    src.points.push_back({Vec3(0, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(0, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(100, 0, 0), 0, 0});
    FeatureMatrix fs, ft;
    fs.rows = 1;
    fs.dim = 2;
    fs.values = {1.0, 0.0};
    ft.rows = 2;
    ft.dim = 2;
    ft.values = {1.0, 0.0, -1.0, 0.0};  // sim(pos)=1, sim(neg)=-1
    CHECK(feature_contrast_score(src, tgt, fs, ft, 1.0) ==
          doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));

    ft.values = {1.0, 0.0, 1.0, 0.0};  // sim(pos)=sim(neg)
    CHECK(feature_contrast_score(src, tgt, fs, ft, 1.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("random inputs match loop oracle") {
    Rng rng(28);
    for (int trial = 0; trial < 3; ++trial) {
      const int n = 40, m = 50, dim = 4;
      RadarFrame src = random_frame(rng, n);
      RadarFrame tgt = random_frame(rng, m);
      FeatureMatrix fs, ft;
      fs.rows = n;
      fs.dim = dim;
      for (int i = 0; i < n * dim; ++i) fs.values.push_back(rng.normal());
      ft.rows = m;
      ft.dim = dim;
      for (int i = 0; i < m * dim; ++i) ft.values.push_back(rng.normal());
      const double tau = 0.07;

      double expect = 0.0;
      for (int i = 0; i < n; ++i) {
        int jp = 0, jn = 0;
        for (int j = 0; j < m; ++j) {
          const double dj = (src.points[static_cast<std::size_t>(i)].position -
                             tgt.points[static_cast<std::size_t>(j)].position)
                                .norm();
          const double dp = (src.points[static_cast<std::size_t>(i)].position -
                             tgt.points[static_cast<std::size_t>(jp)].position)
                                .norm();
          const double dn = (src.points[static_cast<std::size_t>(i)].position -
                             tgt.points[static_cast<std::size_t>(jn)].position)
                                .norm();
          if (dj < dp) jp = j;
          if (dj > dn) jn = j;
        }
        auto cosine = [&](const double* a, const double* b) {
          double dot = 0, na = 0, nb = 0;
          for (int k = 0; k < dim; ++k) {
            dot += a[k] * b[k];
            na += a[k] * a[k];
            nb += b[k] * b[k];
          }
          return dot / (std::sqrt(na) * std::sqrt(nb));
        };
        const double sp = cosine(fs.row(i), ft.row(jp));
        const double sn = cosine(fs.row(i), ft.row(jn));
        expect += -std::log(std::exp(sp / tau) / (std::exp(sp / tau) + std::exp(sn / tau)));
      }
      expect /= n;
      CHECK(feature_contrast_score(src, tgt, fs, ft, tau) ==
            doctest::Approx(expect).epsilon(1e-9));
    }
  }
  SUBCASE("decreases when positive similarity increases") {
    RadarFrame src, tgt;
    src.points.push_back({Vec3(0, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(0.1, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(50, 0, 0), 0, 0});
    FeatureMatrix fs, ft;
    fs.rows = 1;
    fs.dim = 2;
    fs.values = {1.0, 0.0};
    ft.rows = 2;
    ft.dim = 2;
    double prev = std::numeric_limits<double>::infinity();
    for (double sim : {-0.5, 0.0, 0.5, 0.9}) {
      ft.values = {sim, std::sqrt(1.0 - sim * sim), 0.0, 1.0};
      const double score = feature_contrast_score(src, tgt, fs, ft, 0.07);
      CHECK(score < prev);
      prev = score;
    }
  }
}

TEST_CASE("motion_smoothness") {
  Rng rng(29);
  SUBCASE("identical relative poses score zero") {
    Se3Pose t;
    t.rotation = from_euler(0.01, 0.02, 0.03);
    t.translation = Vec3(1, 0.1, 0);
    CHECK(motion_smoothness(t, t, t, 0.0, 0.0, 1.0) == 0.0);
  }
  SUBCASE("constant velocity scores zero") {
    Se3Pose a, b, c;
    a.translation = Vec3(0, 0, 0);
    b.translation = Vec3(1, 0, 0);
    c.translation = Vec3(2, 0, 0);
    // relative steps: b-a = c-b -> zero acceleration
    CHECK(motion_smoothness(a, b, c, 0.0, 0.0, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("matches direct formula on random triples") {
    for (int trial = 0; trial < 20; ++trial) {
      auto small_pose = [&] {
        Se3Pose p;
        p.rotation = from_euler(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                rng.uniform(-0.3, 0.3));
        p.translation = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        return p;
      };
      const Se3Pose a = small_pose(), b = small_pose(), c = small_pose();
      const double eps_r = 0.01, eps_t = 0.05, w = 0.7;
      const Vec3 ea = to_euler(a.rotation).vec();
      const Vec3 eb = to_euler(b.rotation).vec();
      const Vec3 ec = to_euler(c.rotation).vec();
      const double rot_term =
          std::max(((ec - eb) - (eb - ea)).lpNorm<1>() - eps_r, 0.0);
      const double trans_term = std::max(
          ((c.translation - b.translation) - (b.translation - a.translation)).lpNorm<1>() - eps_t,
          0.0);
      CHECK(motion_smoothness(a, b, c, eps_r, eps_t, w) ==
            doctest::Approx(w * (rot_term + trans_term)).epsilon(1e-12));
    }
  }
}
