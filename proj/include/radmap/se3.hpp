#pragma once

#include "radmap/types.hpp"

namespace radmap {

/// Composition a∘b: (a∘b)(x) = a(b(x)).
Se3Pose compose(const Se3Pose& a, const Se3Pose& b);

/// Intrinsic Z-Y-X (yaw-pitch-roll) Euler angles.
/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerZyx {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Vec3 vec() const { return Vec3(roll, pitch, yaw); }
};

/// Throws GimbalLock when |pitch| is within 1e-6 rad of pi/2.
EulerZyx to_euler(const Mat3& rotation);

Mat3 from_euler(double roll, double pitch, double yaw);
inline Mat3 from_euler(const EulerZyx& e) { return from_euler(e.roll, e.pitch, e.yaw); }

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3& rotation);

/// Nearest proper rotation (polar decomposition via SVD).
Mat3 orthonormalize(const Mat3& m);

bool is_rotation(const Mat3& m, double tol = 1e-9);

RadarFrame transform_frame(const RadarFrame& frame, const Se3Pose& pose);

}  // namespace radmap
