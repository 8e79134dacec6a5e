#include "radmap/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "radmap/errors.hpp"

namespace radmap {

void save_gmap(const std::string& path, const GaussianMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("gmap: cannot write " + path);
  out.write("GMAP", 4);
  const std::uint32_t version = kGmapVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t count = map.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const Gaussian& g : map.gaussians) {
    const float vals[14] = {
        static_cast<float>(g.mu.x()),        static_cast<float>(g.mu.y()),
        static_cast<float>(g.mu.z()),        static_cast<float>(g.opacity_logit),
        static_cast<float>(g.log_scale.x()), static_cast<float>(g.log_scale.y()),
        static_cast<float>(g.log_scale.z()), static_cast<float>(g.rotation.w()),
        static_cast<float>(g.rotation.x()),  static_cast<float>(g.rotation.y()),
        static_cast<float>(g.rotation.z()),  static_cast<float>(g.color.x()),
        static_cast<float>(g.color.y()),     static_cast<float>(g.color.z())};
    out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    const std::uint8_t sky = g.sky ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&sky), 1);
  }
  if (!out) throw IoError("gmap: write failed for " + path);
}

GaussianMap load_gmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("gmap: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GMAP", 4) != 0) throw IoError("gmap: bad magic in " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kGmapVersion) throw IoError("gmap: unsupported version in " + path);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));

  GaussianMap map;
  map.gaussians.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    float vals[14];
    std::uint8_t sky = 0;
    in.read(reinterpret_cast<char*>(vals), sizeof(vals));
    in.read(reinterpret_cast<char*>(&sky), 1);
    if (!in) throw IoError("gmap: truncated data in " + path);
    Gaussian& g = map.gaussians[i];
    g.mu = Vec3(vals[0], vals[1], vals[2]);
    g.opacity_logit = vals[3];
    g.log_scale = Vec3(vals[4], vals[5], vals[6]);
    g.rotation = Quat(vals[7], vals[8], vals[9], vals[10]).normalized();
    g.color = Vec3(vals[11], vals[12], vals[13]);
    g.sky = sky != 0;
  }
  return map;
}

}  // namespace radmap
