#include "radmap/preprocess.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "radmap/errors.hpp"
#include "radmap/kdtree.hpp"

namespace radmap {

RadarFrame height_filter(const RadarFrame& frame, double z_min, double z_max) {
  if (!(z_min < z_max)) throw Error("height_filter: z_min must be below z_max");
  RadarFrame out;
  out.timestamp = frame.timestamp;
  for (const RadarPoint& p : frame.points) {
    const double z = p.position.z();
    if (z >= z_min && z <= z_max) out.points.push_back(p);
  }
  if (out.points.empty()) throw EmptyFrame("height_filter: no points in vertical range");
  return out;
}

ClusterAssignment dbscan(const RadarFrame& frame, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error("dbscan: eps must be positive");
  if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");

  const int n = static_cast<int>(frame.points.size());
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;

  std::vector<Vec3> positions(frame.points.size());
  for (std::size_t i = 0; i < frame.points.size(); ++i) positions[i] = frame.points[i].position;
  const KdTree3 tree(std::move(positions));

  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), kUnvisited);

  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (out.labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const auto neigh = tree.radius_search(frame.points[static_cast<std::size_t>(i)].position, eps);
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
      if (lj == kNoise) lj = cluster;  // border point claimed by first expander
      if (lj != kUnvisited) continue;
      lj = cluster;
      const auto nj = tree.radius_search(frame.points[static_cast<std::size_t>(j)].position, eps);
      if (static_cast<int>(nj.size()) >= min_pts) {
        queue.insert(queue.end(), nj.begin(), nj.end());
      }
    }
    ++cluster;
  }
  out.cluster_count = cluster;
  return out;
}

std::vector<int> farthest_point_sampling(const RadarFrame& frame, int n) {
  if (n < 1) throw Error("fps: n must be >= 1");
  if (frame.points.empty()) throw EmptyFrame("fps: empty frame");

  const int count = static_cast<int>(frame.points.size());
  const int distinct = std::min(n, count);

  std::vector<int> selected;
  selected.reserve(static_cast<std::size_t>(n));
  selected.push_back(0);

  std::vector<double> min_d2(frame.points.size(), std::numeric_limits<double>::infinity());
  for (int step = 1; step < distinct; ++step) {
    const Vec3& last = frame.points[static_cast<std::size_t>(selected.back())].position;
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < count; ++i) {
      const double d2 = (frame.points[static_cast<std::size_t>(i)].position - last).squaredNorm();
      double& m = min_d2[static_cast<std::size_t>(i)];
      if (d2 < m) m = d2;
      if (m > best_d2 && m > 0.0) {
        // min_d2 of already-selected points is 0, so they never win.
        best_d2 = m;
        best = i;
      }
    }
    if (best < 0) {
      // All remaining points coincide with selected ones; take the lowest
      // unselected index for determinism.
      std::vector<char> taken(frame.points.size(), 0);
      for (int s : selected) taken[static_cast<std::size_t>(s)] = 1;
      for (int i = 0; i < count; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) {
          best = i;
          break;
        }
      }
    }
    selected.push_back(best);
  }
  // Deficit frames: pad round-robin over the selected set.
  for (int i = distinct; i < n; ++i) {
    selected.push_back(selected[static_cast<std::size_t>(i - distinct)]);
  }
  return selected;
}

ClusterAssignment cluster_summaries(const RadarFrame& frame, const std::vector<int>& labels) {
  if (labels.size() != frame.points.size()) {
    throw DimensionMismatch("cluster_summaries: label count != point count");
  }
  ClusterAssignment out;
  out.labels = labels;
  int max_label = -1;
  for (int l : labels) {
    if (l < -1) throw Error("cluster_summaries: label below -1");
    max_label = std::max(max_label, l);
  }
  out.cluster_count = max_label + 1;
  out.clusters.assign(static_cast<std::size_t>(out.cluster_count), ClusterAssignment::Summary{});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0) continue;
    auto& s = out.clusters[static_cast<std::size_t>(l)];
    s.size += 1;
    s.centroid += frame.points[i].position;
    s.mean_feature += Vec2(frame.points[i].rrv, frame.points[i].rcs);
  }
  for (auto& s : out.clusters) {
    if (s.size > 0) {
      s.centroid /= static_cast<double>(s.size);
      s.mean_feature /= static_cast<double>(s.size);
    }
  }
  return out;
}

PreprocessedFrame preprocess_frame(const RadarFrame& frame, const PreprocessConfig& config) {
  PreprocessedFrame out;
  const RadarFrame filtered = height_filter(frame, config.z_min, config.z_max);
  const ClusterAssignment raw = dbscan(filtered, config.dbscan_eps, config.dbscan_min_pts);
  const std::vector<int> picks = farthest_point_sampling(filtered, config.sample_n);

  out.frame.timestamp = filtered.timestamp;
  out.frame.points.reserve(picks.size());
  std::vector<int> sampled_labels;
  sampled_labels.reserve(picks.size());
  std::vector<int> remap(static_cast<std::size_t>(raw.cluster_count), -1);
  int next = 0;
  for (int idx : picks) {
    out.frame.points.push_back(filtered.points[static_cast<std::size_t>(idx)]);
    const int l = raw.labels[static_cast<std::size_t>(idx)];
    if (l < 0) {
      sampled_labels.push_back(-1);
    } else {
      if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
      sampled_labels.push_back(remap[static_cast<std::size_t>(l)]);
    }
  }
  out.clusters = cluster_summaries(out.frame, sampled_labels);
  return out;
}

}  // namespace radmap
