#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radmap/types.hpp"

namespace radmap {

/// Plain colored point cloud used by map building and export.
struct ColoredCloud {
  std::vector<Vec3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty means no color

  std::size_t size() const { return points.size(); }
};

/// Reads x,y,z plus optional rrv/rcs (float32) from an ASCII or
/// binary-little-endian PLY. Unknown vertex properties are skipped.
RadarFrame read_radar_ply(const std::string& path);

void write_radar_ply(const std::string& path, const RadarFrame& frame, bool binary = true);

/// Reads x,y,z and, when present, red/green/blue.
ColoredCloud read_colored_ply(const std::string& path);

void write_colored_ply(const std::string& path, const ColoredCloud& cloud, bool binary = true);

}  // namespace radmap
