#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace radmap {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;
using Quat = Eigen::Quaterniond;

/// One 4D radar return: position plus relative radial velocity (m/s)
/// and radar cross section (dBsm).
struct RadarPoint {
  Vec3 position = Vec3::Zero();
  double rrv = 0.0;
  double rcs = 0.0;
};

struct RadarFrame {
  double timestamp = 0.0;
  std::vector<RadarPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Rigid transform. Rotation stored as a matrix; quaternions are accepted
/// at boundaries and converted on entry.
struct Se3Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  Se3Pose inverse() const {
    Se3Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  static Se3Pose identity() { return Se3Pose{}; }

  static Se3Pose from_quat(const Quat& q, const Vec3& t) {
    Se3Pose p;
    p.rotation = q.normalized().toRotationMatrix();
    p.translation = t;
    return p;
  }
};

struct TimedPose {
  double timestamp = 0.0;
  Se3Pose pose;
};

/// Pose chain in a fixed world frame; timestamps strictly increasing.
struct Trajectory {
  std::vector<TimedPose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
};

/// Pinhole camera. world_to_camera maps world points into the camera frame
/// (z forward, x right, y down). Pixel (i, j) covers the unit square with
/// center (i + 0.5, j + 0.5) in continuous image coordinates.
struct Camera {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Se3Pose world_to_camera;

  Vec3 to_camera(const Vec3& world) const { return world_to_camera.apply(world); }

  /// Projects a camera-frame point; caller must ensure p.z() > 0.
  Vec2 project_camera(const Vec3& p) const {
    return Vec2(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
  }

  /// Unprojects continuous pixel coordinates at camera-frame depth z.
  Vec3 unproject(double u, double v, double z) const {
    return Vec3((u - cx) * z / fx, (v - cy) * z / fy, z);
  }

  Vec3 camera_position() const { return world_to_camera.inverse().translation; }

  bool in_image(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < static_cast<double>(width) && px.y() >= 0.0 &&
           px.y() < static_cast<double>(height);
  }
};

}  // namespace radmap
