#pragma once

#include <string>

#include "radmap/gaussian.hpp"

namespace radmap {

inline constexpr std::uint32_t kGmapVersion = 1;

/// Versioned binary checkpoint: magic "GMAP", u32 version, u64 count, then
/// per gaussian 14 float32 (mu, logit, log-scale, quat wxyz, rgb) + u8 sky.
void save_gmap(const std::string& path, const GaussianMap& map);

GaussianMap load_gmap(const std::string& path);

}  // namespace radmap
