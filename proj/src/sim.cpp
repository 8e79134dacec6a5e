#include "radmap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "radmap/errors.hpp"
#include "radmap/image.hpp"
#include "radmap/kitti.hpp"
#include "radmap/ply.hpp"
#include "radmap/se3.hpp"

namespace radmap::sim {

namespace {

/// Stratified jittered grid over a rectangle in a primitive-local plane.
/// `make_point` maps (u, v) in [-au/2, au/2] x [-av/2, av/2] to a sample.
template <typename F>
void sample_rect(double au, double av, double density, Rng& rng, F&& make_point) {
  const int nu = std::max(1, static_cast<int>(std::lround(au * std::sqrt(density))));
  const int nv = std::max(1, static_cast<int>(std::lround(av * std::sqrt(density))));
  const double du = au / nu, dv = av / nv;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const double u = -au / 2.0 + (i + 0.5 + 0.8 * (rng.uniform() - 0.5)) * du;
      const double v = -av / 2.0 + (j + 0.5 + 0.8 * (rng.uniform() - 0.5)) * dv;
      make_point(u, v, std::max(du, dv));
    }
  }
}

void sample_box(const ScenePrimitive& prim, Rng& rng, std::vector<ScenePoint>& out) {
  const Vec3 half = prim.dimensions / 2.0;
  // Six faces: (fixed axis, sign, u axis, v axis).
  const int faces[6][2] = {{0, 1}, {0, -1}, {1, 1}, {1, -1}, {2, 1}, {2, -1}};
  for (const auto& f : faces) {
    const int axis = f[0];
    const double sign = f[1];
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    sample_rect(prim.dimensions[ua], prim.dimensions[va], prim.density, rng,
                [&](double u, double v, double cell) {
                  Vec3 local = Vec3::Zero();
                  local[axis] = sign * half[axis];
                  local[ua] = u;
                  local[va] = v;
                  Vec3 n_local = Vec3::Zero();
                  n_local[axis] = sign;
                  ScenePoint p;
                  p.position = prim.pose.apply(local);
                  p.normal = prim.pose.rotation * n_local;
                  p.albedo = prim.albedo;
                  p.ground = false;
                  p.spacing = cell;
                  out.push_back(p);
                });
  }
}

}  // namespace

std::vector<ScenePoint> build_scene(const SceneSpec& spec) {
  std::vector<ScenePoint> out;
  Rng rng(spec.seed);
  for (const ScenePrimitive& prim : spec.primitives) {
    if (!(prim.density > 0.0)) throw Error("build_scene: density must be positive");
    // Each kind validates just the extents it uses.
    switch (prim.kind) {
      case ScenePrimitive::Kind::kGroundPlane:
        if (prim.dimensions.x() <= 0.0 || prim.dimensions.y() <= 0.0) {
          throw Error("build_scene: ground plane needs positive x/y extents");
        }
        break;
      case ScenePrimitive::Kind::kBox:
        if (prim.dimensions.minCoeff() <= 0.0) {
          throw Error("build_scene: box needs positive extents");
        }
        break;
      case ScenePrimitive::Kind::kWall:
        if (prim.dimensions.x() <= 0.0 || prim.dimensions.z() <= 0.0) {
          throw Error("build_scene: wall needs positive length and height");
        }
        break;
      case ScenePrimitive::Kind::kCylinder:
        if (prim.dimensions.x() <= 0.0 || prim.dimensions.y() <= 0.0) {
          throw Error("build_scene: cylinder needs positive radius and height");
        }
        break;
    }
    switch (prim.kind) {
      case ScenePrimitive::Kind::kGroundPlane: {
        sample_rect(prim.dimensions.x(), prim.dimensions.y(), prim.density, rng,
                    [&](double u, double v, double cell) {
                      ScenePoint p;
                      p.position = prim.pose.apply(Vec3(u, v, 0.0));
                      p.normal = prim.pose.rotation * Vec3::UnitZ();
                      p.albedo = prim.albedo;
                      p.ground = true;
                      p.spacing = cell;
                      out.push_back(p);
                    });
        break;
      }
      case ScenePrimitive::Kind::kBox:
        sample_box(prim, rng, out);
        break;
      case ScenePrimitive::Kind::kWall: {
        // Vertical rectangle: length along x, height along z, both faces.
        for (const double sign : {1.0, -1.0}) {
          sample_rect(prim.dimensions.x(), prim.dimensions.z(), prim.density, rng,
                      [&](double u, double v, double cell) {
                        ScenePoint p;
                        p.position = prim.pose.apply(Vec3(u, 0.0, v + prim.dimensions.z() / 2.0));
                        p.normal = prim.pose.rotation * Vec3(0.0, sign, 0.0);
                        p.albedo = prim.albedo;
                        p.ground = false;
                        p.spacing = cell;
                        out.push_back(p);
                      });
        }
        break;
      }
      case ScenePrimitive::Kind::kCylinder: {
        const double radius = prim.dimensions.x();
        const double height = prim.dimensions.y();
        const double circumference = 2.0 * M_PI * radius;
        const int n_theta = std::max(3, static_cast<int>(std::lround(circumference *
                                                                     std::sqrt(prim.density))));
        const int n_z = std::max(1, static_cast<int>(std::lround(height * std::sqrt(prim.density))));
        const double dz = height / n_z;
        for (int i = 0; i < n_theta; ++i) {
          for (int j = 0; j < n_z; ++j) {
            const double theta = 2.0 * M_PI * (i + 0.5 + 0.8 * (rng.uniform() - 0.5)) / n_theta;
            const double z = (j + 0.5 + 0.8 * (rng.uniform() - 0.5)) * dz;
            const Vec3 n_local(std::cos(theta), std::sin(theta), 0.0);
            ScenePoint p;
            p.position = prim.pose.apply(Vec3(radius * n_local.x(), radius * n_local.y(), z));
            p.normal = prim.pose.rotation * n_local;
            p.albedo = prim.albedo;
            p.ground = false;
            p.spacing = std::max(circumference / n_theta, dz);
            out.push_back(p);
          }
        }
        // Top cap.
        sample_rect(2.0 * radius, 2.0 * radius, prim.density, rng,
                    [&](double u, double v, double cell) {
                      if (u * u + v * v > radius * radius) return;
                      ScenePoint p;
                      p.position = prim.pose.apply(Vec3(u, v, height));
                      p.normal = prim.pose.rotation * Vec3::UnitZ();
                      p.albedo = prim.albedo;
                      p.ground = false;
                      p.spacing = cell;
                      out.push_back(p);
                    });
        break;
      }
    }
  }
  return out;
}

namespace {

/// Stable per-scene-point uniform in (0, 1): real scatterers persist across
/// frames, so survival decisions must not be redrawn every frame.
double point_hash_uniform(std::size_t index, std::uint64_t salt) {
  std::uint64_t x = (static_cast<std::uint64_t>(index) + 1) * 0x9e3779b97f4a7c15ULL + salt;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

RadarFrame sample_radar(const std::vector<ScenePoint>& scene, const Se3Pose& sensor_pose,
                        const Vec3& ego_velocity_world, const RadarModel& model, Rng& rng,
                        double timestamp) {
  const Se3Pose world_to_sensor = sensor_pose.inverse();
  const Vec3 v_sensor = world_to_sensor.rotation * ego_velocity_world;
  const double half_az = model.fov_az_deg * M_PI / 360.0;
  const double half_el = model.fov_el_deg * M_PI / 360.0;

  struct Candidate {
    Vec3 p_sensor;
    Vec3 albedo;
    double priority;
  };
  std::vector<Candidate> visible;
  for (std::size_t idx = 0; idx < scene.size(); ++idx) {
    const ScenePoint& sp = scene[idx];
    const Vec3 p = world_to_sensor.apply(sp.position);
    const double range = p.norm();
    if (range > model.max_range || range < 1e-6) continue;
    const double az = std::atan2(p.y(), p.x());
    if (std::abs(az) > half_az) continue;
    const double el = std::atan2(p.z(), std::hypot(p.x(), p.y()));
    if (std::abs(el) > half_el) continue;
    if (sp.ground && point_hash_uniform(idx, 0x67726f756e64ULL) >= model.ground_return_scale) {
      continue;  // specular ground loss, persistent per scatterer
    }
    if (model.dropout > 0.0 && rng.uniform() < model.dropout) continue;
    // Radar fills angular resolution cells: importance 1/r^2 with a stable
    // per-point key, so the kept scatterers change smoothly with the pose.
    visible.push_back({p, sp.albedo,
                       std::log(point_hash_uniform(idx, 0x7072696fULL)) * range * range});
  }
  if (visible.empty()) throw EmptyFrame("sample_radar: nothing visible");

  const int budget = model.points_per_frame;
  if (static_cast<int>(visible.size()) > budget) {
    std::partial_sort(visible.begin(), visible.begin() + budget, visible.end(),
                      [](const Candidate& a, const Candidate& b) { return a.priority > b.priority; });
    visible.resize(static_cast<std::size_t>(budget));
  }

  RadarFrame frame;
  frame.timestamp = timestamp;
  frame.points.reserve(visible.size());
  for (const Candidate& c : visible) {
    const double range = c.p_sensor.norm();
    const Vec3 dir = c.p_sensor / range;
    double az = std::atan2(c.p_sensor.y(), c.p_sensor.x());
    const double el = std::atan2(c.p_sensor.z(), std::hypot(c.p_sensor.x(), c.p_sensor.y()));
    const double noisy_range = range + rng.normal(0.0, model.sigma_range);
    az += rng.normal(0.0, model.sigma_azimuth_deg * M_PI / 180.0);

    RadarPoint rp;
    rp.position = Vec3(noisy_range * std::cos(el) * std::cos(az),
                       noisy_range * std::cos(el) * std::sin(az),
                       noisy_range * std::sin(el));
    rp.rrv = -dir.dot(v_sensor);
    rp.rcs = 10.0 * c.albedo.mean() + rng.normal(0.0, 0.5);
    frame.points.push_back(rp);
  }
  return frame;
}

ViewPriors render_priors(const std::vector<ScenePoint>& scene, const Camera& cam) {
  ViewPriors priors;
  priors.image = ImageRGB(cam.width, cam.height, 0.0);
  priors.depth_prior = ImageGray(cam.width, cam.height, 0.0);
  priors.normal_prior = ImageRGB(cam.width, cam.height, 0.0);
  priors.sky2d = ImageMask(cam.width, cam.height, 255);

  const Vec3 light = Vec3(0.3, 0.2, 0.9).normalized();
  const Vec3 cam_pos = cam.camera_position();
  std::vector<double> zbuf(static_cast<std::size_t>(cam.width * cam.height),
                           std::numeric_limits<double>::infinity());

  for (const ScenePoint& sp : scene) {
    const Vec3 pc = cam.to_camera(sp.position);
    if (pc.z() <= 0.05) continue;
    const Vec2 px = cam.project_camera(pc);
    const double half = std::max(0.6, 0.5 * cam.fx * sp.spacing / pc.z());
    const int x0 = std::max(0, static_cast<int>(std::floor(px.x() - half)));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(px.x() + half)));
    const int y0 = std::max(0, static_cast<int>(std::floor(px.y() - half)));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(px.y() + half)));
    if (x0 > x1 || y0 > y1) continue;

    Vec3 n = sp.normal;
    if (n.dot(sp.position - cam_pos) > 0.0) n = -n;
    const double shade = 0.35 + 0.65 * std::max(0.0, sp.normal.dot(light));
    const Vec3 color = (sp.albedo * shade).cwiseMax(0.0).cwiseMin(1.0);

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y * cam.width + x);
        if (pc.z() >= zbuf[idx]) continue;
        zbuf[idx] = pc.z();
        priors.depth_prior.data[idx] = pc.z();
        priors.sky2d.data[idx] = 0;
        for (int c = 0; c < 3; ++c) {
          priors.image.data[3 * idx + static_cast<std::size_t>(c)] = color[c];
          priors.normal_prior.data[3 * idx + static_cast<std::size_t>(c)] = n[c];
        }
      }
    }
  }
  return priors;
}

Trajectory trajectory_from_spec(const TrajectorySpec& spec) {
  if (spec.waypoints.size() < 2) throw Error("trajectory_from_spec: need at least 2 waypoints");
  if (!(spec.speed > 0.0) || !(spec.frame_dt > 0.0)) {
    throw Error("trajectory_from_spec: speed and frame_dt must be positive");
  }

  Trajectory traj;
  const double step = spec.speed * spec.frame_dt;
  double remaining_offset = 0.0;
  int frame = 0;
  for (std::size_t seg = 0; seg + 1 < spec.waypoints.size(); ++seg) {
    const Vec3& a = spec.waypoints[seg];
    const Vec3& b = spec.waypoints[seg + 1];
    const double seg_len = (b - a).norm();
    if (seg_len < 1e-12) continue;
    const Vec3 dir = (b - a) / seg_len;
    double s = remaining_offset;
    while (s <= seg_len + 1e-12) {
      TimedPose tp;
      tp.timestamp = frame * spec.frame_dt;
      tp.pose.translation = a + s * dir;
      if (spec.face_travel) {
        const double yaw = std::atan2(dir.y(), dir.x());
        tp.pose.rotation = from_euler(0.0, 0.0, yaw);
      }
      traj.poses.push_back(tp);
      ++frame;
      s += step;
    }
    remaining_offset = s - seg_len;
  }
  if (traj.poses.empty()) throw Error("trajectory_from_spec: empty trajectory");
  return traj;
}

Camera camera_at(const CameraModel& model, const Se3Pose& body_pose) {
  Camera cam;
  cam.fx = model.fx;
  cam.fy = model.fy;
  cam.cx = model.cx;
  cam.cy = model.cy;
  cam.width = model.width;
  cam.height = model.height;
  cam.world_to_camera = compose(model.body_to_camera, body_pose.inverse());
  return cam;
}

SequenceSummary generate_sequence(const SequenceConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "frames");
  fs::create_directories(fs::path(out_dir) / "gt");
  fs::create_directories(fs::path(out_dir) / "priors");

  const auto scene = build_scene(config.scene);
  const Trajectory traj = trajectory_from_spec(config.trajectory);
  Rng master(config.seed);

  char name[32];
  SequenceSummary summary;
  std::ofstream views(fs::path(out_dir) / "views.toml");
  views << "# per-keyframe camera views\n";
  views << std::setprecision(17);

  for (std::size_t k = 0; k < traj.poses.size(); ++k) {
    const Se3Pose& pose = traj.poses[k].pose;
    // World-frame velocity from the pose chain (forward difference).
    Vec3 velocity = Vec3::Zero();
    if (k + 1 < traj.poses.size()) {
      velocity = (traj.poses[k + 1].pose.translation - pose.translation) / config.trajectory.frame_dt;
    } else if (k > 0) {
      velocity = (pose.translation - traj.poses[k - 1].pose.translation) / config.trajectory.frame_dt;
    }
    Rng frame_rng = master.fork(static_cast<std::uint64_t>(k) + 1);
    const RadarFrame frame =
        sample_radar(scene, pose, velocity, config.radar, frame_rng, traj.poses[k].timestamp);
    std::snprintf(name, sizeof(name), "%06zu.ply", k);
    write_radar_ply((fs::path(out_dir) / "frames" / name).string(), frame);

    if (static_cast<int>(k) % config.keyframe_stride == 0) {
      const Camera cam = camera_at(config.camera, pose);
      const ViewPriors priors = render_priors(scene, cam);
      std::snprintf(name, sizeof(name), "%06zu", k);
      const std::string stem = (fs::path(out_dir) / "priors" / name).string();
      write_ppm(stem + ".ppm", priors.image);
      write_pfm_gray(stem + ".pfm", priors.depth_prior);
      write_pfm_rgb(stem + ".normal.pfm", priors.normal_prior);
      write_pgm_mask(stem + ".sky.pgm", priors.sky2d);

      views << "\n[[view]]\n";
      views << "frame = " << k << "\n";
      views << "image = \"priors/" << name << ".ppm\"\n";
      views << "depth = \"priors/" << name << ".pfm\"\n";
      views << "normal = \"priors/" << name << ".normal.pfm\"\n";
      views << "sky = \"priors/" << name << ".sky.pgm\"\n";
      views << "intrinsics = [" << cam.fx << ", " << cam.fy << ", " << cam.cx << ", " << cam.cy
            << "]\n";
      views << "size = [" << cam.width << ", " << cam.height << "]\n";
      views << "world_to_camera = [";
      const Mat3& r = cam.world_to_camera.rotation;
      const Vec3& t = cam.world_to_camera.translation;
      for (int row = 0; row < 3; ++row) {
        views << r(row, 0) << ", " << r(row, 1) << ", " << r(row, 2) << ", " << t(row);
        views << (row == 2 ? "]\n" : ", ");
      }
      ++summary.keyframes;
    }
  }
  write_kitti_trajectory((fs::path(out_dir) / "gt" / "poses.kitti").string(),
                         (fs::path(out_dir) / "gt" / "times.txt").string(), traj);

  std::ofstream cam_file(fs::path(out_dir) / "camera.toml");
  cam_file << std::setprecision(17);
  cam_file << "[camera]\n";
  cam_file << "fx = " << config.camera.fx << "\nfy = " << config.camera.fy << "\n";
  cam_file << "cx = " << config.camera.cx << "\ncy = " << config.camera.cy << "\n";
  cam_file << "width = " << config.camera.width << "\nheight = " << config.camera.height << "\n";
  cam_file << "body_to_camera = [";
  const Mat3& r = config.camera.body_to_camera.rotation;
  const Vec3& t = config.camera.body_to_camera.translation;
  for (int row = 0; row < 3; ++row) {
    cam_file << r(row, 0) << ", " << r(row, 1) << ", " << r(row, 2) << ", " << t(row);
    cam_file << (row == 2 ? "]\n" : ", ");
  }
  summary.frames = static_cast<int>(traj.poses.size());
  return summary;
}

SceneSpec default_scene() {
  SceneSpec spec;
  spec.seed = 11;

  ScenePrimitive ground;
  ground.kind = ScenePrimitive::Kind::kGroundPlane;
  ground.dimensions = Vec3(60.0, 40.0, 1.0);
  ground.albedo = Vec3(0.35, 0.4, 0.3);
  ground.density = 12.0;
  spec.primitives.push_back(ground);

  const Vec3 box_centers[6] = {Vec3(8, 3, 0),  Vec3(10, -5, 0), Vec3(14, 6, 0),
                               Vec3(5, -9, 0), Vec3(16, -2, 0), Vec3(12, 10, 0)};
  const Vec3 box_albedos[6] = {Vec3(0.8, 0.3, 0.25), Vec3(0.3, 0.5, 0.8), Vec3(0.7, 0.7, 0.3),
                               Vec3(0.5, 0.3, 0.6),  Vec3(0.3, 0.7, 0.5), Vec3(0.75, 0.5, 0.3)};
  for (int i = 0; i < 6; ++i) {
    ScenePrimitive box;
    box.kind = ScenePrimitive::Kind::kBox;
    box.dimensions = Vec3(2.0 + 0.3 * i, 2.0, 2.2 + 0.2 * i);
    box.pose.translation = box_centers[i] + Vec3(0, 0, box.dimensions.z() / 2.0);
    box.albedo = box_albedos[i];
    box.density = 36.0;
    spec.primitives.push_back(box);
  }

  ScenePrimitive wall1;
  wall1.kind = ScenePrimitive::Kind::kWall;
  wall1.dimensions = Vec3(20.0, 0.0, 3.0);
  wall1.pose.translation = Vec3(18.0, 0.0, 0.0);
  wall1.pose.rotation = from_euler(0.0, 0.0, M_PI / 2.0);  // runs along y
  wall1.albedo = Vec3(0.65, 0.55, 0.45);
  wall1.density = 36.0;
  spec.primitives.push_back(wall1);

  ScenePrimitive wall2;
  wall2.kind = ScenePrimitive::Kind::kWall;
  wall2.dimensions = Vec3(16.0, 0.0, 2.5);
  wall2.pose.translation = Vec3(8.0, -14.0, 0.0);
  wall2.albedo = Vec3(0.55, 0.6, 0.65);
  wall2.density = 36.0;
  spec.primitives.push_back(wall2);

  const Vec3 tree_spots[3] = {Vec3(4, 7, 0), Vec3(9, -11, 0), Vec3(15, 2, 0)};
  for (int i = 0; i < 3; ++i) {
    ScenePrimitive trunk;
    trunk.kind = ScenePrimitive::Kind::kCylinder;
    trunk.dimensions = Vec3(0.4, 3.5 + 0.5 * i, 0.0);
    trunk.pose.translation = tree_spots[i];
    trunk.albedo = Vec3(0.45, 0.35, 0.25);
    trunk.density = 48.0;
    spec.primitives.push_back(trunk);
  }
  return spec;
}

RadarModel default_radar() { return RadarModel{}; }

CameraModel default_camera() {
  CameraModel model;
  // Camera 0.6 m above the body origin, looking forward and pitched down
  // by 12 degrees so the near ground is in view.
  const double pitch = 12.0 * M_PI / 180.0;
  const Vec3 z_b(std::cos(pitch), 0.0, -std::sin(pitch));  // camera forward in body frame
  const Vec3 x_b(0.0, -1.0, 0.0);                          // camera right
  const Vec3 y_b = z_b.cross(x_b);                         // camera down
  Mat3 cam_to_body;
  cam_to_body.col(0) = x_b;
  cam_to_body.col(1) = y_b;
  cam_to_body.col(2) = z_b;
  const Vec3 cam_pos_body(0.0, 0.0, 0.6);
  model.body_to_camera.rotation = cam_to_body.transpose();
  model.body_to_camera.translation = -(cam_to_body.transpose() * cam_pos_body);
  return model;
}

TrajectorySpec default_trajectory() {
  TrajectorySpec spec;
  // Straight 49 m line through the scene: 50 frames at 1 m per frame.
  spec.waypoints = {Vec3(-25.0, -2.0, 0.5), Vec3(24.0, -2.0, 0.5)};
  spec.speed = 10.0;
  spec.frame_dt = 0.1;
  return spec;
}

}  // namespace radmap::sim
