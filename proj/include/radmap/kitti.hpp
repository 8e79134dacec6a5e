#pragma once

#include <string>

#include "radmap/types.hpp"

namespace radmap {

/// KITTI pose format: one line per pose, 12 whitespace-separated floats,
/// row-major 3x4 [R|t], with a sidecar timestamps file (one float per line).
Trajectory read_kitti_trajectory(const std::string& poses_path, const std::string& times_path);

void write_kitti_trajectory(const std::string& poses_path, const std::string& times_path,
                            const Trajectory& traj);

}  // namespace radmap
