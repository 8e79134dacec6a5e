#pragma once

#include <string>
#include <vector>

#include "radmap/render.hpp"
#include "radmap/rng.hpp"
#include "radmap/types.hpp"

namespace radmap::sim {

struct ScenePrimitive {
  enum class Kind { kGroundPlane, kBox, kCylinder, kWall };
  Kind kind = Kind::kBox;
  Se3Pose pose;          // primitive-to-world
  Vec3 dimensions = Vec3::Ones();  // ground/wall: x=length,(z=height); box: full extents; cylinder: x=radius,y=height
  Vec3 albedo = Vec3::Constant(0.5);
  double density = 36.0;  // surface points per m^2
};

struct SceneSpec {
  std::vector<ScenePrimitive> primitives;
  std::uint64_t seed = 1;
};

struct ScenePoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 albedo = Vec3::Constant(0.5);
  bool ground = false;
  double spacing = 0.2;  // sampling cell edge, drives the splat footprint
};

/// Deterministic stratified surface sampling; normals are the true
/// primitive normals.
std::vector<ScenePoint> build_scene(const SceneSpec& spec);

struct RadarModel {
  double fov_az_deg = 120.0;
  double fov_el_deg = 30.0;
  double max_range = 40.0;
  int points_per_frame = 300;
  double sigma_range = 0.05;
  double sigma_azimuth_deg = 0.3;
  double dropout = 0.0;
  double ground_return_scale = 0.2;  // specular ground loss
};

/// Radar sampling in the sensor frame (x forward, y left, z up):
/// FOV/range selection, ground thinning, subsampling, spherical noise.
/// RRV assumes a static world. Throws EmptyFrame when nothing is visible.
RadarFrame sample_radar(const std::vector<ScenePoint>& scene, const Se3Pose& sensor_pose,
                        const Vec3& ego_velocity_world, const RadarModel& model, Rng& rng,
                        double timestamp = 0.0);

/// Z-buffered point-splat rasterization of the reference cloud: Lambertian
/// color, true depth and normals, sky mask where nothing was hit.
ViewPriors render_priors(const std::vector<ScenePoint>& scene, const Camera& cam);

struct TrajectorySpec {
  std::vector<Vec3> waypoints;
  double speed = 1.0;     // m/s
  double frame_dt = 0.1;  // s
  bool face_travel = true;
};

/// Body poses marched along the waypoint polyline at constant speed.
Trajectory trajectory_from_spec(const TrajectorySpec& spec);

struct CameraModel {
  double fx = 48.0, fy = 48.0, cx = 32.0, cy = 32.0;
  int width = 64, height = 64;
  Se3Pose body_to_camera;  // maps body-frame points into the camera frame
};

Camera camera_at(const CameraModel& model, const Se3Pose& body_pose);

struct SequenceConfig {
  SceneSpec scene;
  TrajectorySpec trajectory;
  RadarModel radar;
  CameraModel camera;
  int keyframe_stride = 5;
  std::uint64_t seed = 1;
};

struct SequenceSummary {
  int frames = 0;
  int keyframes = 0;
};

/// Writes frames/NNNNNN.ply, gt/poses.kitti, gt/times.txt, per-keyframe
/// priors/NNNNNN.{ppm,pfm,normal.pfm,sky.pgm}, camera.toml and views.toml.
/// Byte-identical across runs for a fixed seed.
SequenceSummary generate_sequence(const SequenceConfig& config, const std::string& out_dir);

SceneSpec default_scene();
RadarModel default_radar();
CameraModel default_camera();
TrajectorySpec default_trajectory();

}  // namespace radmap::sim
