#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "radmap/errors.hpp"
#include "radmap/preprocess.hpp"
#include "radmap/reference.hpp"
#include "radmap/rng.hpp"
#include "radmap/se3.hpp"

using namespace radmap;

namespace {

RadarFrame random_frame(Rng& rng, int n, double extent = 20.0) {
  RadarFrame frame;
  for (int i = 0; i < n; ++i) {
    frame.points.push_back({Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                                 rng.uniform(-extent / 4, extent / 4)),
                            rng.normal(), rng.normal(10, 2)});
  }
  return frame;
}

RadarFrame clustered_frame(Rng& rng, int clusters, int per_cluster, double spread) {
  RadarFrame frame;
  for (int c = 0; c < clusters; ++c) {
    const Vec3 center(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-1, 1));
    for (int i = 0; i < per_cluster; ++i) {
      frame.points.push_back({center + spread * Vec3(rng.normal(), rng.normal(), rng.normal()),
                              rng.normal(), rng.normal(10, 2)});
    }
  }
  return frame;
}

/// Canonical form of a labeling for rename-invariant comparison: maps each
/// cluster label to the lowest member index.
std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> first_member;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0 && first_member.find(labels[i]) == first_member.end()) {
      first_member[labels[i]] = static_cast<int>(i);
    }
  }
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[i] = first_member[labels[i]];
  }
  return out;
}

}  // namespace

TEST_CASE("height_filter basics") {
  RadarFrame frame;
  for (double z : {-5.0, 0.0, 5.0}) frame.points.push_back({Vec3(0, 0, z), 0, 0});

  const RadarFrame out = height_filter(frame, -3.0, 3.0);
  REQUIRE(out.points.size() == 1);
  CHECK(out.points[0].position.z() == 0.0);

  RadarFrame inside;
  inside.points.push_back({Vec3(0, 0, 1), 0, 0});
  inside.points.push_back({Vec3(0, 0, -1), 0, 0});
  const RadarFrame same = height_filter(inside, -3.0, 3.0);
  CHECK(same.points.size() == 2);

  RadarFrame high;
  high.points.push_back({Vec3(0, 0, 10), 0, 0});
  CHECK_THROWS_AS(height_filter(high, -3.0, 3.0), EmptyFrame);
}

TEST_CASE("height_filter matches linear scan on random input") {
  Rng rng(11);
  const RadarFrame frame = random_frame(rng, 1000, 10.0);
  const RadarFrame out = height_filter(frame, -3.0, 3.0);
  std::vector<RadarPoint> expect;
  for (const auto& p : frame.points) {
    if (p.position.z() >= -3.0 && p.position.z() <= 3.0) expect.push_back(p);
  }
  REQUIRE(out.points.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK((out.points[i].position - expect[i].position).norm() == 0.0);
  }
}

TEST_CASE("dbscan simple cases") {
  SUBCASE("two distant points with min_pts 1 form two singletons") {
    RadarFrame frame;
    frame.points.push_back({Vec3(0, 0, 0), 0, 0});
    frame.points.push_back({Vec3(10, 0, 0), 0, 0});
    const ClusterAssignment out = dbscan(frame, 3.0, 1);
    CHECK(out.cluster_count == 2);
    CHECK(out.labels[0] == 0);
    CHECK(out.labels[1] == 1);
  }
  SUBCASE("tight blob is one cluster with no noise") {
    Rng rng(12);
    RadarFrame frame;
    for (int i = 0; i < 10; ++i) {
      frame.points.push_back({0.05 * Vec3(rng.uniform(), rng.uniform(), rng.uniform()), 0, 0});
    }
    const ClusterAssignment out = dbscan(frame, 3.0, 3);
    CHECK(out.cluster_count == 1);
    for (int l : out.labels) CHECK(l == 0);
  }
}

TEST_CASE("dbscan matches quadratic reference") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const RadarFrame frame = clustered_frame(rng, 8, 60, 0.8);
    const ClusterAssignment fast = dbscan(frame, 3.0, 3);
    const ClusterAssignment ref = ref::dbscan_quadratic(frame, 3.0, 3);
    CHECK(fast.cluster_count == ref.cluster_count);
    CHECK(canonical_labels(fast.labels) == canonical_labels(ref.labels));
  }
}

TEST_CASE("dbscan cluster sizes respect min_pts") {
  Rng rng(14);
  const RadarFrame frame = clustered_frame(rng, 6, 30, 1.0);
  const int min_pts = 3;
  const ClusterAssignment out = dbscan(frame, 2.0, min_pts);
  std::map<int, int> sizes;
  for (int l : out.labels) {
    if (l >= 0) sizes[l]++;
  }
  for (const auto& [label, size] : sizes) CHECK(size >= min_pts);
}

TEST_CASE("dbscan invariant to rigid transforms") {
  Rng rng(15);
  const RadarFrame frame = clustered_frame(rng, 5, 40, 0.7);
  const Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  const Se3Pose pose = Se3Pose::from_quat(q.normalized(), Vec3(3, -2, 1));
  const RadarFrame moved = transform_frame(frame, pose);
  const ClusterAssignment a = dbscan(frame, 3.0, 3);
  const ClusterAssignment b = dbscan(moved, 3.0, 3);
  CHECK(a.cluster_count == b.cluster_count);
  CHECK(canonical_labels(a.labels) == canonical_labels(b.labels));
}

TEST_CASE("fps basics") {
  RadarFrame frame;
  for (double x : {0.0, 1.0, 10.0}) frame.points.push_back({Vec3(x, 0, 0), 0, 0});

  SUBCASE("seed is index 0 and farthest follows") {
    const std::vector<int> picks = farthest_point_sampling(frame, 2);
    CHECK(picks == std::vector<int>{0, 2});
  }
  SUBCASE("n equal to size is a permutation") {
    const std::vector<int> picks = farthest_point_sampling(frame, 3);
    std::set<int> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 3);
  }
  SUBCASE("n of 1 returns the seed") {
    const std::vector<int> picks = farthest_point_sampling(frame, 1);
    CHECK(picks == std::vector<int>{0});
  }
  SUBCASE("deficit pads round-robin") {
    const std::vector<int> picks = farthest_point_sampling(frame, 7);
    REQUIRE(picks.size() == 7);
    // first three are distinct, then the selected set repeats in order
    std::set<int> unique(picks.begin(), picks.begin() + 3);
    CHECK(unique.size() == 3);
    for (std::size_t i = 3; i < picks.size(); ++i) CHECK(picks[i] == picks[i - 3]);
  }
}

TEST_CASE("fps steps are max-min optimal against exhaustive scan") {
  Rng rng(16);
  const RadarFrame frame = random_frame(rng, 300);
  const int n = 128;
  const std::vector<int> picks = farthest_point_sampling(frame, n);

  std::vector<char> selected(frame.points.size(), 0);
  selected[static_cast<std::size_t>(picks[0])] = 1;
  for (int step = 1; step < n; ++step) {
    // oracle: any unselected point's min distance to the selected set must
    // not exceed the pick's
    double pick_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < frame.points.size(); ++j) {
      if (!selected[j]) continue;
      pick_min = std::min(pick_min, (frame.points[static_cast<std::size_t>(picks[step])].position -
                                     frame.points[j].position)
                                        .norm());
    }
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
      if (selected[i]) continue;
      double min_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < frame.points.size(); ++j) {
        if (!selected[j]) continue;
        min_d = std::min(min_d, (frame.points[i].position - frame.points[j].position).norm());
      }
      CHECK(min_d <= pick_min + 1e-12);
    }
    selected[static_cast<std::size_t>(picks[step])] = 1;
  }
}

TEST_CASE("fps beats random subsets on min pairwise distance") {
  Rng rng(17);
  const RadarFrame frame = random_frame(rng, 200);
  const int n = 24;
  const std::vector<int> picks = farthest_point_sampling(frame, n);
  auto min_pairwise = [&](const std::vector<int>& idx) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        best = std::min(best, (frame.points[static_cast<std::size_t>(idx[i])].position -
                               frame.points[static_cast<std::size_t>(idx[j])].position)
                                  .norm());
      }
    }
    return best;
  };
  const double fps_min = min_pairwise(picks);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> random_subset;
    std::set<int> used;
    while (static_cast<int>(random_subset.size()) < n) {
      const int idx = static_cast<int>(rng.uniform_index(frame.points.size()));
      if (used.insert(idx).second) random_subset.push_back(idx);
    }
    if (fps_min >= min_pairwise(random_subset)) ++wins;
  }
  CHECK(wins == 100);
}

TEST_CASE("cluster_summaries") {
  SUBCASE("two-point cluster centroid") {
    RadarFrame frame;
    frame.points.push_back({Vec3(0, 0, 0), 1.0, 2.0});
    frame.points.push_back({Vec3(2, 0, 0), 3.0, 4.0});
    const ClusterAssignment out = cluster_summaries(frame, {0, 0});
    REQUIRE(out.cluster_count == 1);
    CHECK((out.clusters[0].centroid - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK(out.clusters[0].mean_feature == Vec2(2.0, 3.0));
    CHECK(out.clusters[0].size == 2);
  }
  SUBCASE("all noise yields no clusters") {
    RadarFrame frame;
    frame.points.push_back({Vec3(0, 0, 0), 0, 0});
    frame.points.push_back({Vec3(1, 1, 1), 0, 0});
    const ClusterAssignment out = cluster_summaries(frame, {-1, -1});
    CHECK(out.cluster_count == 0);
    CHECK(out.clusters.empty());
  }
  SUBCASE("random labels match group-by-mean oracle") {
    Rng rng(18);
    const RadarFrame frame = random_frame(rng, 300);
    std::vector<int> labels(frame.points.size());
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(7)) - 1;  // -1..5
    const ClusterAssignment out = cluster_summaries(frame, labels);
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= 0) groups[labels[i]].push_back(i);
    }
    for (const auto& [label, members] : groups) {
      Vec3 centroid = Vec3::Zero();
      Vec2 feat = Vec2::Zero();
      for (std::size_t i : members) {
        centroid += frame.points[i].position;
        feat += Vec2(frame.points[i].rrv, frame.points[i].rcs);
      }
      centroid /= static_cast<double>(members.size());
      feat /= static_cast<double>(members.size());
      CHECK((out.clusters[static_cast<std::size_t>(label)].centroid - centroid).norm() < 1e-12);
      CHECK((out.clusters[static_cast<std::size_t>(label)].mean_feature - feat).norm() < 1e-12);
    }
  }
}

TEST_CASE("cluster centroids stay inside the member bounding box") {
  Rng rng(19);
  const RadarFrame frame = clustered_frame(rng, 6, 25, 1.2);
  const ClusterAssignment clusters = dbscan(frame, 3.0, 3);
  const ClusterAssignment full = cluster_summaries(frame, clusters.labels);
  for (int c = 0; c < full.cluster_count; ++c) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
      if (full.labels[i] != c) continue;
      lo = lo.cwiseMin(frame.points[i].position);
      hi = hi.cwiseMax(frame.points[i].position);
    }
    if (full.clusters[static_cast<std::size_t>(c)].size == 0) continue;
    const Vec3& centroid = full.clusters[static_cast<std::size_t>(c)].centroid;
    for (int a = 0; a < 3; ++a) {
      CHECK(centroid[a] >= lo[a] - 1e-12);
      CHECK(centroid[a] <= hi[a] + 1e-12);
    }
  }
}

TEST_CASE("preprocess_frame carries labels through sampling") {
  Rng rng(20);
  const RadarFrame frame = clustered_frame(rng, 6, 80, 0.6);
  PreprocessConfig config;
  config.sample_n = 128;
  const PreprocessedFrame out = preprocess_frame(frame, config);
  CHECK(out.frame.points.size() == 128);
  CHECK(out.clusters.labels.size() == 128);
  for (int l : out.clusters.labels) CHECK(l < out.clusters.cluster_count);
}
