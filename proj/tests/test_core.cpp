#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "radmap/errors.hpp"
#include "radmap/image.hpp"
#include "radmap/kitti.hpp"
#include "radmap/ply.hpp"
#include "radmap/rng.hpp"
#include "radmap/se3.hpp"

using namespace radmap;

namespace {

Se3Pose random_pose(Rng& rng) {
  const Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return Se3Pose::from_quat(q.normalized(),
                            Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)));
}

}  // namespace

TEST_CASE("compose identity and inverse") {
  const Se3Pose id = Se3Pose::identity();
  const Se3Pose both = compose(id, id);
  CHECK((both.rotation - Mat3::Identity()).norm() == 0.0);
  CHECK(both.translation.norm() == 0.0);

  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Se3Pose t = random_pose(rng);
    const Se3Pose round = compose(t, t.inverse());
    CHECK((round.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(round.translation.norm() < 1e-12);
  }
}

TEST_CASE("compose matches pointwise application") {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Se3Pose a = random_pose(rng);
    const Se3Pose b = random_pose(rng);
    const Se3Pose ab = compose(a, b);
    for (int k = 0; k < 10; ++k) {
      const Vec3 x(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
      CHECK((ab.apply(x) - a.apply(b.apply(x))).norm() < 1e-12);
    }
  }
}

TEST_CASE("compose associativity") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Se3Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Se3Pose left = compose(compose(a, b), c);
    const Se3Pose right = compose(a, compose(b, c));
    CHECK((left.rotation - right.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((left.translation - right.translation).norm() < 1e-12);
  }
}

TEST_CASE("euler conventions") {
  const EulerZyx zero = to_euler(Mat3::Identity());
  CHECK(zero.roll == 0.0);
  CHECK(zero.pitch == 0.0);
  CHECK(zero.yaw == 0.0);

  const Mat3 yaw90 = from_euler(0.0, 0.0, M_PI / 2.0);
  const EulerZyx e = to_euler(yaw90);
  CHECK(e.roll == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e.pitch == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e.yaw == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
  // +90 deg about z maps x to y
  CHECK((yaw90 * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-12);
}

TEST_CASE("euler round trip on random rotations") {
  Rng rng(4);
  int checked = 0;
  while (checked < 200) {
    const Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const Mat3 r = q.normalized().toRotationMatrix();
    EulerZyx e;
    try {
      e = to_euler(r);
    } catch (const GimbalLock&) {
      continue;
    }
    const Mat3 back = from_euler(e);
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-9);
    ++checked;
  }
}

TEST_CASE("gimbal lock signaled") {
  const Mat3 locked = from_euler(0.3, M_PI / 2.0, -0.2);
  CHECK_THROWS_AS(to_euler(locked), GimbalLock);
}

TEST_CASE("transform_frame") {
  RadarFrame frame;
  frame.points.push_back({Vec3(1, 0, 0), 2.0, 3.0});

  SUBCASE("identity keeps the frame") {
    const RadarFrame out = transform_frame(frame, Se3Pose::identity());
    CHECK((out.points[0].position - Vec3(1, 0, 0)).norm() == 0.0);
    CHECK(out.points[0].rrv == 2.0);
    CHECK(out.points[0].rcs == 3.0);
  }

  SUBCASE("translation moves positions only") {
    Se3Pose t;
    t.translation = Vec3(0, 1, 0);
    const RadarFrame out = transform_frame(frame, t);
    CHECK((out.points[0].position - Vec3(1, 1, 0)).norm() < 1e-15);
    CHECK(out.points[0].rrv == 2.0);
  }

  SUBCASE("random pose matches per-point oracle and preserves distances") {
    Rng rng(5);
    RadarFrame big;
    for (int i = 0; i < 100; ++i) {
      big.points.push_back({Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)),
                            rng.normal(), rng.normal()});
    }
    const Se3Pose pose = random_pose(rng);
    const RadarFrame out = transform_frame(big, pose);
    for (std::size_t i = 0; i < big.points.size(); ++i) {
      const Vec3 expect = pose.rotation * big.points[i].position + pose.translation;
      CHECK((out.points[i].position - expect).norm() < 1e-12);
    }
    for (int k = 0; k < 50; ++k) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_index(big.points.size()));
      const std::size_t j = static_cast<std::size_t>(rng.uniform_index(big.points.size()));
      const double before = (big.points[i].position - big.points[j].position).norm();
      const double after = (out.points[i].position - out.points[j].position).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
  }
}

TEST_CASE("camera optical axis lands at principal point") {
  Camera cam;
  cam.fx = 100;
  cam.fy = 110;
  cam.cx = 32.5;
  cam.cy = 24.5;
  cam.width = 64;
  cam.height = 48;
  const Vec2 px = cam.project_camera(Vec3(0, 0, 7.0));
  CHECK(px.x() == cam.cx);
  CHECK(px.y() == cam.cy);
}

TEST_CASE("ply round trip binary and ascii") {
  RadarFrame frame;
  Rng rng(6);
  for (int i = 0; i < 57; ++i) {
    frame.points.push_back({Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-3, 3)),
                            rng.normal(0.0, 5.0), rng.normal(10.0, 3.0)});
  }
  const auto dir = std::filesystem::temp_directory_path() / "radmap_test_ply";
  std::filesystem::create_directories(dir);
  for (const bool binary : {true, false}) {
    const std::string path = (dir / (binary ? "b.ply" : "a.ply")).string();
    write_radar_ply(path, frame, binary);
    const RadarFrame back = read_radar_ply(path);
    REQUIRE(back.points.size() == frame.points.size());
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
      // storage is float32
      CHECK((back.points[i].position - frame.points[i].position).norm() < 1e-4);
      CHECK(back.points[i].rrv == doctest::Approx(frame.points[i].rrv).epsilon(1e-5));
    }
  }
}

TEST_CASE("ply reader ignores unknown properties") {
  const auto dir = std::filesystem::temp_directory_path() / "radmap_test_ply";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "extra.ply").string();
  {
    std::ofstream out(path);
    out << "ply\nformat ascii 1.0\nelement vertex 2\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property float intensity\nproperty uchar ring\n"
        << "property float rrv\nproperty float rcs\nend_header\n"
        << "1 2 3 99 7 0.5 10\n"
        << "4 5 6 88 3 -0.5 20\n";
  }
  const RadarFrame frame = read_radar_ply(path);
  REQUIRE(frame.points.size() == 2);
  CHECK(frame.points[0].position == Vec3(1, 2, 3));
  CHECK(frame.points[1].rrv == doctest::Approx(-0.5));
  CHECK(frame.points[1].rcs == doctest::Approx(20.0));
}

TEST_CASE("kitti trajectory round trip") {
  Trajectory traj;
  Rng rng(7);
  double t = 0.0;
  for (int i = 0; i < 25; ++i) {
    t += rng.uniform(0.05, 0.2);
    traj.poses.push_back({t, random_pose(rng)});
  }
  const auto dir = std::filesystem::temp_directory_path() / "radmap_test_kitti";
  std::filesystem::create_directories(dir);
  const std::string poses = (dir / "poses.kitti").string();
  const std::string times = (dir / "times.txt").string();
  write_kitti_trajectory(poses, times, traj);
  const Trajectory back = read_kitti_trajectory(poses, times);
  REQUIRE(back.size() == traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(back.poses[i].timestamp == doctest::Approx(traj.poses[i].timestamp).epsilon(1e-12));
    CHECK((back.poses[i].pose.rotation - traj.poses[i].pose.rotation).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((back.poses[i].pose.translation - traj.poses[i].pose.translation).norm() < 1e-12);
  }
}

TEST_CASE("image io round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "radmap_test_img";
  std::filesystem::create_directories(dir);
  Rng rng(8);

  ImageRGB img(13, 9);
  for (double& v : img.data) v = rng.uniform();
  write_ppm((dir / "t.ppm").string(), img);
  const ImageRGB back = read_ppm((dir / "t.ppm").string());
  REQUIRE(back.width == img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(back.data[i] - img.data[i]) < 0.5 / 255.0 + 1e-12);
  }

  ImageGray depth(7, 5);
  for (double& v : depth.data) v = rng.uniform(0.0, 50.0);
  write_pfm_gray((dir / "t.pfm").string(), depth);
  const ImageGray dback = read_pfm_gray((dir / "t.pfm").string());
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    CHECK(std::abs(dback.data[i] - depth.data[i]) < 1e-4);
  }

  ImageMask mask(6, 4);
  for (auto& v : mask.data) v = rng.uniform() < 0.5 ? 0 : 255;
  write_pgm_mask((dir / "t.pgm").string(), mask);
  const ImageMask mback = read_pgm_mask((dir / "t.pgm").string());
  CHECK(mback.data == mask.data);
}
