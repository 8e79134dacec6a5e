#include "radmap/se3.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "radmap/errors.hpp"

namespace radmap {

Se3Pose compose(const Se3Pose& a, const Se3Pose& b) {
  Se3Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

EulerZyx to_euler(const Mat3& r) {
  // R = Rz(yaw) Ry(pitch) Rx(roll); r(2,0) = -sin(pitch).
  const double sp = -r(2, 0);
  const double clamped = std::max(-1.0, std::min(1.0, sp));
  const double pitch = std::asin(clamped);
  if (std::abs(std::abs(pitch) - M_PI / 2.0) < 1e-6) {
    throw GimbalLock("pitch within 1e-6 rad of +-pi/2");
  }
  EulerZyx e;
  e.pitch = pitch;
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

Mat3 from_euler(double roll, double pitch, double yaw) {
  const Eigen::AngleAxisd rz(yaw, Vec3::UnitZ());
  const Eigen::AngleAxisd ry(pitch, Vec3::UnitY());
  const Eigen::AngleAxisd rx(roll, Vec3::UnitX());
  return (rz * ry * rx).toRotationMatrix();
}

double rotation_angle(const Mat3& rotation) {
  const double c = (rotation.trace() - 1.0) / 2.0;
  return std::acos(std::max(-1.0, std::min(1.0, c)));
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

bool is_rotation(const Mat3& m, double tol) {
  const Mat3 should_be_identity = m.transpose() * m;
  return (should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

RadarFrame transform_frame(const RadarFrame& frame, const Se3Pose& pose) {
  RadarFrame out;
  out.timestamp = frame.timestamp;
  out.points.reserve(frame.points.size());
  for (const RadarPoint& p : frame.points) {
    RadarPoint q = p;
    q.position = pose.apply(p.position);
    out.points.push_back(q);
  }
  return out;
}

}  // namespace radmap
