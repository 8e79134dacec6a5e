#include <doctest.h>

#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/odometry.hpp"
#include "radmap/reference.hpp"
#include "radmap/rng.hpp"
#include "radmap/se3.hpp"
#include "radmap/sim.hpp"

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

Se3Pose random_small_pose(Rng& rng, double max_angle, double max_shift) {
  Se3Pose pose;
  pose.rotation = from_euler(rng.uniform(-max_angle, max_angle),
                             rng.uniform(-max_angle, max_angle),
                             rng.uniform(-max_angle, max_angle));
  pose.translation = Vec3(rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift),
                          rng.uniform(-max_shift, max_shift));
  return pose;
}

Correspondences identity_pairs(std::size_t n) {
  Correspondences corr;
  for (std::size_t i = 0; i < n; ++i) {
    corr.pairs.push_back({static_cast<int>(i), static_cast<int>(i), 0.0});
  }
  corr.d_max = 0.0;
  return corr;
}

}  // namespace

TEST_CASE("nearest_correspondences") {
  SUBCASE("identical frames map onto themselves") {
    Rng rng(31);
    const RadarFrame frame = random_frame(rng, 100);
    const Correspondences corr = nearest_correspondences(frame, frame);
    for (const auto& p : corr.pairs) {
      CHECK(p.src == p.tgt);
      CHECK(p.dist == 0.0);
    }
    CHECK(corr.d_max == 0.0);
  }
  SUBCASE("equidistant targets resolve to the lower index") {
    RadarFrame src, tgt;
    src.points.push_back({Vec3(0, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(1, 0, 0), 0, 0});
    tgt.points.push_back({Vec3(-1, 0, 0), 0, 0});
    const Correspondences corr = nearest_correspondences(src, tgt);
    CHECK(corr.pairs[0].tgt == 0);
  }
  SUBCASE("random pair matches brute force exactly") {
    Rng rng(32);
    const RadarFrame src = random_frame(rng, 500);
    const RadarFrame tgt = random_frame(rng, 500);
    const Correspondences fast = nearest_correspondences(src, tgt);
    const Correspondences ref = ref::nearest_correspondences_bruteforce(src, tgt);
    REQUIRE(fast.pairs.size() == ref.pairs.size());
    for (std::size_t i = 0; i < fast.pairs.size(); ++i) {
      CHECK(fast.pairs[i].tgt == ref.pairs[i].tgt);
      CHECK(fast.pairs[i].dist == ref.pairs[i].dist);
    }
    CHECK(fast.d_max == ref.d_max);
  }
}

TEST_CASE("weighted_kabsch") {
  Rng rng(33);
  SUBCASE("aligned pairs give identity") {
    const RadarFrame frame = random_frame(rng, 50);
    const Se3Pose delta = weighted_kabsch(identity_pairs(frame.size()), frame, frame);
    CHECK((delta.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(delta.translation.norm() < 1e-10);
  }
  SUBCASE("recovers random rigid transforms exactly") {
    for (int trial = 0; trial < 100; ++trial) {
      const RadarFrame src = random_frame(rng, 60);
      const Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      const Se3Pose gt = Se3Pose::from_quat(
          q.normalized(), Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)));
      const RadarFrame tgt = transform_frame(src, gt);
      const Se3Pose delta = weighted_kabsch(identity_pairs(src.size()), src, tgt);
      CHECK(rotation_angle(Mat3(delta.rotation.transpose() * gt.rotation)) < 1e-9);
      CHECK((delta.translation - gt.translation).norm() < 1e-9);
    }
  }
  SUBCASE("weighted solve is locally optimal") {
    const RadarFrame src = random_frame(rng, 80);
    RadarFrame tgt = transform_frame(src, random_small_pose(rng, 0.2, 0.5));
    // perturb targets so weights differ
    for (auto& p : tgt.points) {
      p.position += 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    Correspondences corr = nearest_correspondences(src, tgt);
    // use direct pairs so the objective is well defined
    corr = identity_pairs(src.size());
    for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
      corr.pairs[i].dist = (src.points[i].position - tgt.points[i].position).norm();
      corr.d_max = std::max(corr.d_max, corr.pairs[i].dist);
    }
    const Se3Pose best = weighted_kabsch(corr, src, tgt);
    const double best_obj = kabsch_objective(corr, src, tgt, best);
    for (int trial = 0; trial < 1000; ++trial) {
      Se3Pose perturbed = best;
      perturbed.rotation =
          best.rotation * from_euler(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                     rng.uniform(-0.02, 0.02));
      perturbed.translation += 0.02 * Vec3(rng.normal(), rng.normal(), rng.normal());
      CHECK(kabsch_objective(corr, src, tgt, perturbed) >= best_obj - 1e-12);
    }
  }
  SUBCASE("degenerate geometry throws") {
    RadarFrame line_src, line_tgt;
    for (int i = 0; i < 10; ++i) {
      line_src.points.push_back({Vec3(i, 0, 0), 0, 0});
      line_tgt.points.push_back({Vec3(i, 0, 0), 0, 0});
    }
    CHECK_THROWS_AS(weighted_kabsch(identity_pairs(10), line_src, line_tgt), DegenerateGeometry);

    RadarFrame two_src = random_frame(rng, 2);
    CHECK_THROWS_AS(weighted_kabsch(identity_pairs(2), two_src, two_src), DegenerateGeometry);
  }
}

TEST_CASE("refine_pose") {
  Rng rng(34);
  SUBCASE("identity stays identity on identical frames") {
    const RadarFrame frame = random_frame(rng, 120);
    const RefineResult res = refine_pose(frame, frame, Se3Pose::identity(), RefineConfig{});
    CHECK(res.refined);
    CHECK(res.pose.translation.norm() < 1e-9);
    CHECK(rotation_angle(res.pose.rotation) < 1e-9);
  }
  SUBCASE("recovers a known pose from a nearby init (noise free)") {
    for (int trial = 0; trial < 5; ++trial) {
      const RadarFrame src = random_frame(rng, 200);
      const Se3Pose gt = random_small_pose(rng, 0.15, 1.0);
      // target = src points seen under gt: transform src by gt
      const RadarFrame tgt = transform_frame(src, gt);
      Se3Pose init = gt;
      init.translation += Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                               rng.uniform(-0.2, 0.2));
      init.rotation = gt.rotation * from_euler(rng.uniform(-0.03, 0.03),
                                               rng.uniform(-0.03, 0.03),
                                               rng.uniform(-0.03, 0.03));
      const RefineResult res = refine_pose(src, tgt, init, RefineConfig{});
      CHECK(res.refined);
      CHECK((res.pose.translation - gt.translation).norm() < 1e-3);
      CHECK(rotation_angle(Mat3(res.pose.rotation.transpose() * gt.rotation)) <
            0.05 * M_PI / 180.0);
    }
  }
  SUBCASE("per-iteration objective never increases") {
    const RadarFrame src = random_frame(rng, 150);
    RadarFrame tgt = transform_frame(src, random_small_pose(rng, 0.1, 0.5));
    for (auto& p : tgt.points) p.position += 0.03 * Vec3(rng.normal(), rng.normal(), rng.normal());
    const RefineResult res = refine_pose(src, tgt, Se3Pose::identity(), RefineConfig{});
    for (const auto& [before, after] : res.objectives) {
      CHECK(after <= before + 1e-12);
    }
  }
  SUBCASE("disjoint clouds terminate without NaN") {
    RadarFrame src = random_frame(rng, 60, 5.0);
    RadarFrame tgt = random_frame(rng, 60, 5.0);
    for (auto& p : tgt.points) p.position += Vec3(1000, 0, 0);
    const RefineResult res = refine_pose(src, tgt, Se3Pose::identity(), RefineConfig{});
    CHECK(res.pose.translation.allFinite());
    CHECK(res.pose.rotation.allFinite());
  }
  SUBCASE("noise-free convergence basin") {
    // From any init within 0.1 m / 1 degree, the refined pose lands within
    // 1e-6 of the truth on fully overlapping frames.
    for (int trial = 0; trial < 5; ++trial) {
      const RadarFrame src = random_frame(rng, 250);
      const Se3Pose gt = random_small_pose(rng, 0.1, 0.8);
      const RadarFrame tgt = transform_frame(src, gt);
      Se3Pose init = gt;
      init.translation += 0.1 * Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
      init.rotation = gt.rotation * from_euler(0.017 * rng.uniform(-1, 1),
                                               0.017 * rng.uniform(-1, 1),
                                               0.017 * rng.uniform(-1, 1));
      RefineConfig config;
      config.tol_trans = 1e-9;
      config.tol_rot = 1e-9;
      config.max_iters = 100;
      const RefineResult res = refine_pose(src, tgt, init, config);
      CHECK((res.pose.translation - gt.translation).norm() < 1e-6);
      CHECK(rotation_angle(Mat3(res.pose.rotation.transpose() * gt.rotation)) < 1e-6);
    }
  }
}

TEST_CASE("select_pose") {
  Rng rng(35);
  SUBCASE("tie keeps the first candidate") {
    const RadarFrame frame = random_frame(rng, 60);
    const Se3Pose t = random_small_pose(rng, 0.1, 0.5);
    const PoseEstimate est = select_pose(frame, frame, t, t, 0.5);
    CHECK(!est.refined);
    CHECK((est.pose.translation - t.translation).norm() == 0.0);
  }
  SUBCASE("better candidate wins, worse candidate is rejected") {
    const RadarFrame src = random_frame(rng, 100);
    const Se3Pose gt = random_small_pose(rng, 0.1, 0.5);
    const RadarFrame tgt = transform_frame(src, gt);
    Se3Pose off = gt;
    off.translation += Vec3(1.0, 0, 0);

    const PoseEstimate good_b = select_pose(src, tgt, off, gt, 0.5);
    CHECK(good_b.refined);
    CHECK((good_b.pose.translation - gt.translation).norm() < 1e-12);

    Se3Pose bad = gt;
    bad.rotation = gt.rotation * from_euler(0, 0, 30.0 * M_PI / 180.0);
    const PoseEstimate keep_a = select_pose(src, tgt, gt, bad, 0.5);
    CHECK(!keep_a.refined);
    CHECK((keep_a.pose.translation - gt.translation).norm() < 1e-12);
  }
  SUBCASE("dominance: selected divergence never exceeds both candidates") {
    for (int trial = 0; trial < 10; ++trial) {
      const RadarFrame src = random_frame(rng, 80);
      const RadarFrame tgt = random_frame(rng, 80);
      const Se3Pose a = random_small_pose(rng, 0.2, 1.0);
      const Se3Pose b = random_small_pose(rng, 0.2, 1.0);
      const PoseEstimate est = select_pose(src, tgt, a, b, 0.5);
      const GaussianMixture mt = gmm_from_frame(tgt, 0.5);
      const double div_a = cs_divergence(gmm_from_frame(transform_frame(src, a), 0.5), mt);
      const double div_b = cs_divergence(gmm_from_frame(transform_frame(src, b), 0.5), mt);
      CHECK(est.objective <= std::max(div_a, div_b) + 1e-12);
      CHECK(est.objective == doctest::Approx(std::min(div_a, div_b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("predict_initial") {
  CHECK(predict_initial({}).translation.norm() == 0.0);

  Se3Pose one;
  one.translation = Vec3(1, 0, 0);
  const Se3Pose repeat = predict_initial({one});
  CHECK((repeat.translation - Vec3(1, 0, 0)).norm() == 0.0);

  Se3Pose two;
  two.translation = Vec3(2, 0, 0);
  const Se3Pose extrapolated = predict_initial({one, two});
  CHECK((extrapolated.translation - Vec3(3, 0, 0)).norm() < 1e-15);
}

TEST_CASE("run_odometry") {
  Rng rng(36);
  SUBCASE("static sequence yields identity trajectory") {
    RadarFrame frame = random_frame(rng, 250, 10.0);
    std::vector<RadarFrame> frames;
    for (int k = 0; k < 5; ++k) {
      RadarFrame f = frame;
      f.timestamp = 0.1 * k;
      frames.push_back(f);
    }
    OdometryConfig config;
    config.preprocess.sample_n = 128;
    const OdometryResult result = run_odometry(frames, config);
    REQUIRE(result.trajectory.size() == frames.size());
    for (const auto& tp : result.trajectory.poses) {
      CHECK(tp.pose.translation.norm() < 1e-6);
      CHECK(rotation_angle(tp.pose.rotation) < 1e-6);
    }
  }
  SUBCASE("an empty frame falls back to the motion prior") {
    RadarFrame good = random_frame(rng, 200, 10.0);
    std::vector<RadarFrame> frames;
    for (int k = 0; k < 4; ++k) {
      RadarFrame f = good;
      f.timestamp = 0.1 * k;
      frames.push_back(f);
    }
    // frame 2 is entirely out of the height gate
    for (auto& p : frames[2].points) p.position.z() = 50.0;
    OdometryConfig config;
    config.preprocess.sample_n = 128;
    const OdometryResult result = run_odometry(frames, config);
    REQUIRE(result.trajectory.size() == 4);
    CHECK(result.diags[1].failed);
    for (const auto& tp : result.trajectory.poses) {
      CHECK(tp.pose.translation.allFinite());
    }
  }
  SUBCASE("reversed noise-free sequence yields the inverse trajectory") {
    // forward and reversed runs on the same noise-free frames
    auto scene = sim::build_scene(sim::default_scene());
    sim::RadarModel model = sim::default_radar();
    model.sigma_range = 0.0;
    model.sigma_azimuth_deg = 0.0;
    std::vector<RadarFrame> forward;
    Rng sample_rng(1);
    for (int k = 0; k < 6; ++k) {
      Se3Pose pose;
      pose.translation = Vec3(-12.0 + k, -2.0, 0.5);
      Rng fr = sample_rng.fork(static_cast<std::uint64_t>(k));
      RadarFrame f = sim::sample_radar(scene, pose, Vec3(10, 0, 0), model, fr, 0.1 * k);
      forward.push_back(f);
    }
    std::vector<RadarFrame> reversed(forward.rbegin(), forward.rend());
    for (std::size_t i = 0; i < reversed.size(); ++i) reversed[i].timestamp = 0.1 * i;

    OdometryConfig config;
    const OdometryResult fwd = run_odometry(forward, config);
    const OdometryResult rev = run_odometry(reversed, config);
    // end-to-end displacement flips sign
    const Vec3 fwd_total = fwd.trajectory.poses.back().pose.translation;
    const Vec3 rev_total = rev.trajectory.poses.back().pose.translation;
    CHECK((fwd_total + rev_total).norm() < 0.02);
  }
}
