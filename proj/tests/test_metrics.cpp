#include <doctest.h>

#include <cmath>

#include "radmap/errors.hpp"
#include "radmap/image_ops.hpp"
#include "radmap/metrics.hpp"
#include "radmap/reference.hpp"
#include "radmap/rng.hpp"
#include "radmap/se3.hpp"

using namespace radmap;

namespace {

Trajectory straight_line(int n, double step, double dt = 0.1) {
  Trajectory traj;
  for (int i = 0; i < n; ++i) {
    TimedPose tp;
    tp.timestamp = i * dt;
    tp.pose.translation = Vec3(i * step, 0, 0);
    traj.poses.push_back(tp);
  }
  return traj;
}

std::vector<Vec3> random_points(Rng& rng, int n, double extent = 10.0) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                     rng.uniform(-extent, extent));
  }
  return out;
}

}  // namespace

TEST_CASE("rpe_kitti") {
  SUBCASE("perfect estimate scores zero") {
    const Trajectory gt = straight_line(200, 1.0);
    const auto [t_rel, r_rel] = rpe_kitti(gt, gt);
    CHECK(t_rel == 0.0);
    CHECK(r_rel == 0.0);
  }
  SUBCASE("too short throws") {
    const Trajectory gt = straight_line(10, 1.0);
    CHECK_THROWS_AS(rpe_kitti(gt, gt), TooShort);
  }
  SUBCASE("constant yaw-rate bias is recovered") {
    const double bias_deg_per_m = 0.01;
    const Trajectory gt = straight_line(200, 1.0);
    Trajectory est;
    Se3Pose pose;
    for (int i = 0; i < 200; ++i) {
      TimedPose tp;
      tp.timestamp = i * 0.1;
      tp.pose = pose;
      est.poses.push_back(tp);
      // advance 1 m with a yaw bias of 0.01 deg per meter
      Se3Pose step;
      step.translation = Vec3(1, 0, 0);
      step.rotation = from_euler(0, 0, bias_deg_per_m * M_PI / 180.0);
      pose = compose(pose, step);
    }
    const auto [t_rel, r_rel] = rpe_kitti(est, gt);
    CHECK(r_rel == doctest::Approx(bias_deg_per_m).epsilon(0.05));
  }
  SUBCASE("matches an independent double-loop implementation") {
    Rng rng(41);
    const Trajectory gt = straight_line(180, 1.0);
    Trajectory est = gt;
    Se3Pose drift;
    for (std::size_t i = 0; i < est.poses.size(); ++i) {
      Se3Pose wiggle;
      wiggle.translation = 0.02 * Vec3(rng.normal(), rng.normal(), rng.normal());
      wiggle.rotation = from_euler(0.001 * rng.normal(), 0.001 * rng.normal(),
                                   0.001 * rng.normal());
      drift = compose(drift, wiggle);
      est.poses[i].pose = compose(est.poses[i].pose, drift);
    }
    const auto [t_rel, r_rel] = rpe_kitti(est, gt);

    // independent straightforward re-implementation
    std::vector<double> arc(gt.size(), 0.0);
    for (std::size_t i = 1; i < gt.size(); ++i) {
      arc[i] = arc[i - 1] +
               (gt.poses[i].pose.translation - gt.poses[i - 1].pose.translation).norm();
    }
    double t_sum = 0.0, r_sum = 0.0;
    int used = 0;
    for (int len = 20; len <= 160; len += 20) {
      double t_sq = 0.0, r_sq = 0.0;
      int count = 0;
      for (std::size_t s = 0; s < gt.size(); ++s) {
        std::size_t e = s;
        while (e < gt.size() && arc[e] - arc[s] < len) ++e;
        if (e >= gt.size()) break;
        const Se3Pose gt_rel = compose(gt.poses[s].pose.inverse(), gt.poses[e].pose);
        const Se3Pose est_rel = compose(est.poses[s].pose.inverse(), est.poses[e].pose);
        const Se3Pose err = compose(gt_rel.inverse(), est_rel);
        t_sq += err.translation.squaredNorm();
        const double r = rotation_angle(err.rotation) * 180.0 / M_PI;
        r_sq += r * r;
        ++count;
      }
      if (count == 0) continue;
      t_sum += std::sqrt(t_sq / count) / len;
      r_sum += std::sqrt(r_sq / count) / len;
      ++used;
    }
    CHECK(t_rel == doctest::Approx(t_sum / used).epsilon(1e-12));
    CHECK(r_rel == doctest::Approx(r_sum / used).epsilon(1e-12));
  }
}

TEST_CASE("rpe_framewise") {
  SUBCASE("exact estimate scores zero") {
    const Trajectory gt = straight_line(50, 0.5);
    const auto [t, r] = rpe_framewise(gt, gt);
    CHECK(t == 0.0);
    CHECK(r == 0.0);
  }
  SUBCASE("a rigid shift of the whole trajectory is invisible") {
    const Trajectory gt = straight_line(50, 0.5);
    Trajectory est = gt;
    const Se3Pose shift = Se3Pose::from_quat(Quat(0.9, 0.1, 0.2, 0.1).normalized(),
                                             Vec3(5, -3, 2));
    for (auto& tp : est.poses) tp.pose = compose(shift, tp.pose);
    const auto [t, r] = rpe_framewise(est, gt);
    CHECK(t < 1e-12);
    CHECK(r < 1e-10);
  }
  SUBCASE("per-pose noise RMSE near the analytic expectation") {
    Rng rng(42);
    const double sigma = 0.05;
    const Trajectory gt = straight_line(1000, 1.0);
    Trajectory est = gt;
    for (auto& tp : est.poses) {
      tp.pose.translation += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    const auto [t, r] = rpe_framewise(est, gt);
    // difference of two iid gaussian 3-vectors: E[|d|^2] = 6 sigma^2
    CHECK(t == doctest::Approx(sigma * std::sqrt(6.0)).epsilon(0.10));
  }
}

TEST_CASE("ate") {
  SUBCASE("exact match scores zero") {
    const Trajectory gt = straight_line(40, 1.0);
    CHECK(ate(gt, gt, false) == 0.0);
    CHECK(ate(gt, gt, true) < 1e-12);
  }
  SUBCASE("alignment absorbs a rigid transform") {
    Rng rng(43);
    Trajectory gt;
    for (int i = 0; i < 60; ++i) {
      TimedPose tp;
      tp.timestamp = 0.1 * i;
      tp.pose.translation = Vec3(std::cos(0.1 * i) * 5, std::sin(0.1 * i) * 5, 0.05 * i);
      gt.poses.push_back(tp);
    }
    Trajectory est = gt;
    const Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const Se3Pose rigid = Se3Pose::from_quat(q.normalized(), Vec3(10, 5, -2));
    for (auto& tp : est.poses) {
      tp.pose.translation = rigid.apply(tp.pose.translation);
      tp.pose.rotation = rigid.rotation * tp.pose.rotation;
    }
    CHECK(ate(est, gt, true) < 1e-9);
    CHECK(ate(est, gt, false) > 1.0);
  }
  SUBCASE("known offsets match the direct RMSE formula") {
    const Trajectory gt = straight_line(10, 1.0);
    Trajectory est = gt;
    double sq = 0.0;
    for (std::size_t i = 0; i < est.poses.size(); ++i) {
      const Vec3 offset(0.01 * static_cast<double>(i), 0.0, 0.0);
      est.poses[i].pose.translation += offset;
      sq += offset.squaredNorm();
    }
    CHECK(ate(est, gt, false) ==
          doctest::Approx(std::sqrt(sq / est.poses.size())).epsilon(1e-12));
  }
}

TEST_CASE("point cloud metrics") {
  SUBCASE("identical sets") {
    Rng rng(44);
    const auto pts = random_points(rng, 200);
    CHECK(chamfer_l1(pts, pts) == 0.0);
    CHECK(mhd(pts, pts) == 0.0);
    CHECK(fscore(pts, pts, 0.3) == 1.0);
  }
  SUBCASE("two singletons closed form") {
    const std::vector<Vec3> a = {Vec3(0, 0, 0)};
    const std::vector<Vec3> b = {Vec3(1, 0, 0)};
    CHECK(chamfer_l1(a, b) == 1.0);
    CHECK(mhd(a, b) == 1.0);
    CHECK(fscore(a, b, 0.3) == 0.0);
  }
  SUBCASE("random pair matches brute force") {
    Rng rng(45);
    const auto a = random_points(rng, 1000);
    const auto b = random_points(rng, 900);
    CHECK(chamfer_l1(a, b) == doctest::Approx(ref::chamfer_l1_bruteforce(a, b)).epsilon(1e-9));
    CHECK(mhd(a, b) == doctest::Approx(ref::mhd_bruteforce(a, b)).epsilon(1e-9));
    CHECK(fscore(a, b, 0.3) == doctest::Approx(ref::fscore_bruteforce(a, b, 0.3)).epsilon(1e-12));
    // symmetry
    CHECK(chamfer_l1(b, a) == doctest::Approx(chamfer_l1(a, b)).epsilon(1e-12));
    CHECK(mhd(b, a) == doctest::Approx(mhd(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("psnr and ssim") {
  SUBCASE("identical images") {
    ImageRGB img(24, 16);
    Rng rng(46);
    for (double& v : img.data) v = rng.uniform();
    CHECK(std::isinf(psnr(img, img)));
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("uniform offset closed form") {
    ImageRGB a(16, 16, 0.4);
    ImageRGB b(16, 16, 0.5);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("ssim matches a direct windowed reference") {
    Rng rng(47);
    ImageRGB a(20, 18), b(20, 18);
    for (double& v : a.data) v = rng.uniform();
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      b.data[i] = std::clamp(a.data[i] + 0.1 * rng.normal(), 0.0, 1.0);
    }
    // direct per-window evaluation over the valid region
    const int win = 11, r = win / 2;
    std::vector<double> kernel;
    double ksum = 0.0;
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        const double k = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
        kernel.push_back(k);
        ksum += k;
      }
    }
    for (double& k : kernel) k /= ksum;
    double total = 0.0;
    std::size_t count = 0;
    for (int y = r; y < a.height - r; ++y) {
      for (int x = r; x < a.width - r; ++x) {
        for (int c = 0; c < 3; ++c) {
          double mx = 0, my = 0, ex2 = 0, ey2 = 0, exy = 0;
          std::size_t ki = 0;
          for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx, ++ki) {
              const double va = a.at(x + dx, y + dy, c);
              const double vb = b.at(x + dx, y + dy, c);
              mx += kernel[ki] * va;
              my += kernel[ki] * vb;
              ex2 += kernel[ki] * va * va;
              ey2 += kernel[ki] * vb * vb;
              exy += kernel[ki] * va * vb;
            }
          }
          const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
          const double sx2 = ex2 - mx * mx, sy2 = ey2 - my * my, sxy = exy - mx * my;
          total += (2 * mx * my + c1) * (2 * sxy + c2) /
                   ((mx * mx + my * my + c1) * (sx2 + sy2 + c2));
          ++count;
        }
      }
    }
    CHECK(ssim(a, b) == doctest::Approx(total / count).epsilon(1e-6));
  }
  SUBCASE("psnr decreases monotonically with noise amplitude") {
    Rng rng(48);
    ImageRGB base(32, 32);
    for (double& v : base.data) v = rng.uniform(0.2, 0.8);
    double prev = std::numeric_limits<double>::infinity();
    for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      ImageRGB noisy = base;
      Rng noise_rng(1234);
      for (double& v : noisy.data) v = std::clamp(v + amp * noise_rng.normal(), 0.0, 1.0);
      const double p = psnr(noisy, base);
      CHECK(p < prev);
      prev = p;
    }
  }
  SUBCASE("ssim gradient matches finite differences") {
    Rng rng(49);
    ImageRGB x(14, 14), y(14, 14);
    for (double& v : x.data) v = rng.uniform();
    for (double& v : y.data) v = rng.uniform();
    const SsimResult res = ssim_with_gradient(x, y);
    CHECK(res.mean == doctest::Approx(ssim(x, y)).epsilon(1e-12));
    const double h = 1e-6;
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t i = rng.uniform_index(x.data.size());
      ImageRGB xp = x, xm = x;
      xp.data[i] += h;
      xm.data[i] -= h;
      const double fd = (ssim(xp, y) - ssim(xm, y)) / (2 * h);
      CHECK(res.grad[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("timestamp association") {
  Trajectory est = straight_line(10, 1.0, 0.1);
  Trajectory gt = straight_line(10, 1.0, 0.1);
  // shift gt timestamps by 0.02 s (within skew) then by 0.2 s (beyond)
  for (auto& tp : gt.poses) tp.timestamp += 0.02;
  CHECK(associate(est, gt).size() == est.size());
  for (auto& tp : gt.poses) tp.timestamp += 10.0;
  CHECK(associate(est, gt).empty());
  AssociationOptions interp;
  interp.interpolate = true;
  CHECK(associate(est, gt, interp).size() == est.size());
}
