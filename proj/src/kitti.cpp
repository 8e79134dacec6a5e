#include "radmap/kitti.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "radmap/errors.hpp"
#include "radmap/se3.hpp"

namespace radmap {

Trajectory read_kitti_trajectory(const std::string& poses_path, const std::string& times_path) {
  std::ifstream pf(poses_path);
  if (!pf) throw IoError("kitti: cannot open " + poses_path);
  std::ifstream tf(times_path);
  if (!tf) throw IoError("kitti: cannot open " + times_path);

  Trajectory traj;
  std::string line;
  while (std::getline(pf, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    for (double& x : v) {
      if (!(ls >> x)) throw IoError("kitti: bad pose line in " + poses_path);
    }
    TimedPose tp;
    tp.pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    tp.pose.translation = Vec3(v[3], v[7], v[11]);
    if (!is_rotation(tp.pose.rotation, 1e-6)) {
      throw IoError("kitti: non-orthonormal rotation in " + poses_path);
    }
    tp.pose.rotation = orthonormalize(tp.pose.rotation);
    if (!(tf >> tp.timestamp)) throw IoError("kitti: missing timestamp in " + times_path);
    if (!traj.poses.empty() && tp.timestamp <= traj.poses.back().timestamp) {
      throw IoError("kitti: timestamps not strictly increasing in " + times_path);
    }
    traj.poses.push_back(tp);
  }
  return traj;
}

void write_kitti_trajectory(const std::string& poses_path, const std::string& times_path,
                            const Trajectory& traj) {
  std::ofstream pf(poses_path);
  if (!pf) throw IoError("kitti: cannot write " + poses_path);
  std::ofstream tf(times_path);
  if (!tf) throw IoError("kitti: cannot write " + times_path);
  pf << std::setprecision(17);
  tf << std::setprecision(17);
  for (const TimedPose& tp : traj.poses) {
    const Mat3& r = tp.pose.rotation;
    const Vec3& t = tp.pose.translation;
    for (int row = 0; row < 3; ++row) {
      pf << r(row, 0) << ' ' << r(row, 1) << ' ' << r(row, 2) << ' ' << t(row);
      pf << (row == 2 ? '\n' : ' ');
    }
    tf << tp.timestamp << '\n';
  }
  if (!pf || !tf) throw IoError("kitti: write failed");
}

}  // namespace radmap
