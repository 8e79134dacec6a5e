#include "radmap/ply.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "radmap/errors.hpp"

namespace radmap {

namespace {

enum class ScalarType { kChar, kUchar, kShort, kUshort, kInt, kUint, kFloat, kDouble };

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kChar:
    case ScalarType::kUchar:
      return 1;
    case ScalarType::kShort:
    case ScalarType::kUshort:
      return 2;
    case ScalarType::kInt:
    case ScalarType::kUint:
    case ScalarType::kFloat:
      return 4;
    case ScalarType::kDouble:
      return 8;
  }
  return 0;
}

ScalarType parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::kChar;
  if (name == "uchar" || name == "uint8") return ScalarType::kUchar;
  if (name == "short" || name == "int16") return ScalarType::kShort;
  if (name == "ushort" || name == "uint16") return ScalarType::kUshort;
  if (name == "int" || name == "int32") return ScalarType::kInt;
  if (name == "uint" || name == "uint32") return ScalarType::kUint;
  if (name == "float" || name == "float32") return ScalarType::kFloat;
  if (name == "double" || name == "float64") return ScalarType::kDouble;
  throw IoError("ply: unknown property type '" + name + "'");
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUchar;
};

struct Header {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<Property> vertex_props;
};

Header read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("ply: empty file " + path);
  if (line.size() >= 1 && line.back() == '\r') line.pop_back();
  if (line != "ply") throw IoError("ply: missing magic in " + path);

  Header h;
  std::string current_element;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        h.binary = false;
      } else if (fmt == "binary_little_endian") {
        h.binary = true;
      } else {
        throw IoError("ply: unsupported format '" + fmt + "' in " + path);
      }
    } else if (tok == "element") {
      std::size_t count = 0;
      ls >> current_element >> count;
      if (current_element == "vertex") h.vertex_count = count;
    } else if (tok == "property") {
      if (current_element != "vertex") continue;  // only vertices are read
      std::string type_name;
      ls >> type_name;
      Property p;
      if (type_name == "list") {
        std::string count_name, value_name;
        ls >> count_name >> value_name >> p.name;
        p.is_list = true;
        p.count_type = parse_type(count_name);
        p.type = parse_type(value_name);
      } else {
        p.type = parse_type(type_name);
        ls >> p.name;
      }
      h.vertex_props.push_back(p);
    } else if (tok == "end_header") {
      return h;
    }
  }
  throw IoError("ply: truncated header in " + path);
}

double read_binary_scalar(std::istream& in, ScalarType t) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(scalar_size(t)));
  switch (t) {
    case ScalarType::kChar: {
      std::int8_t v;
      std::memcpy(&v, buf, 1);
      return v;
    }
    case ScalarType::kUchar: {
      std::uint8_t v;
      std::memcpy(&v, buf, 1);
      return v;
    }
    case ScalarType::kShort: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case ScalarType::kUshort: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case ScalarType::kInt: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case ScalarType::kUint: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case ScalarType::kFloat: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case ScalarType::kDouble: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
  }
  return 0.0;
}

/// Reads every vertex into a row of named values; list properties are skipped.
std::vector<std::vector<double>> read_vertices(std::istream& in, const Header& h,
                                               const std::string& path) {
  std::vector<std::vector<double>> rows(h.vertex_count,
                                        std::vector<double>(h.vertex_props.size(), 0.0));
  if (h.binary) {
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
      for (std::size_t p = 0; p < h.vertex_props.size(); ++p) {
        const Property& prop = h.vertex_props[p];
        if (prop.is_list) {
          const double n = read_binary_scalar(in, prop.count_type);
          in.seekg(static_cast<std::streamoff>(static_cast<std::size_t>(n) *
                                               scalar_size(prop.type)),
                   std::ios::cur);
        } else {
          rows[i][p] = read_binary_scalar(in, prop.type);
        }
      }
      if (!in) throw IoError("ply: truncated vertex data in " + path);
    }
  } else {
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
      for (std::size_t p = 0; p < h.vertex_props.size(); ++p) {
        const Property& prop = h.vertex_props[p];
        if (prop.is_list) {
          double n = 0.0;
          if (!(in >> n)) throw IoError("ply: truncated vertex data in " + path);
          double dummy;
          for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) in >> dummy;
        } else {
          if (!(in >> rows[i][p])) throw IoError("ply: truncated vertex data in " + path);
        }
      }
    }
  }
  return rows;
}

int find_prop(const Header& h, const std::string& name) {
  for (std::size_t i = 0; i < h.vertex_props.size(); ++i) {
    if (h.vertex_props[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

RadarFrame read_radar_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ply: cannot open " + path);
  const Header h = read_header(in, path);
  const int ix = find_prop(h, "x"), iy = find_prop(h, "y"), iz = find_prop(h, "z");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("ply: missing x/y/z in " + path);
  const int irrv = find_prop(h, "rrv");
  const int ircs = find_prop(h, "rcs");
  const auto rows = read_vertices(in, h, path);

  RadarFrame frame;
  frame.points.reserve(rows.size());
  for (const auto& row : rows) {
    RadarPoint p;
    p.position = Vec3(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                      row[static_cast<std::size_t>(iz)]);
    if (irrv >= 0) p.rrv = row[static_cast<std::size_t>(irrv)];
    if (ircs >= 0) p.rcs = row[static_cast<std::size_t>(ircs)];
    frame.points.push_back(p);
  }
  return frame;
}

void write_radar_ply(const std::string& path, const RadarFrame& frame, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ply: cannot write " + path);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << frame.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float rrv\nproperty float rcs\nend_header\n";
  if (binary) {
    for (const RadarPoint& p : frame.points) {
      const float vals[5] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                             static_cast<float>(p.position.z()), static_cast<float>(p.rrv),
                             static_cast<float>(p.rcs)};
      out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
  } else {
    out.precision(9);
    for (const RadarPoint& p : frame.points) {
      out << static_cast<float>(p.position.x()) << ' ' << static_cast<float>(p.position.y()) << ' '
          << static_cast<float>(p.position.z()) << ' ' << static_cast<float>(p.rrv) << ' '
          << static_cast<float>(p.rcs) << '\n';
    }
  }
  if (!out) throw IoError("ply: write failed for " + path);
}

ColoredCloud read_colored_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ply: cannot open " + path);
  const Header h = read_header(in, path);
  const int ix = find_prop(h, "x"), iy = find_prop(h, "y"), iz = find_prop(h, "z");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("ply: missing x/y/z in " + path);
  const int ir = find_prop(h, "red"), ig = find_prop(h, "green"), ib = find_prop(h, "blue");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
  const auto rows = read_vertices(in, h, path);

  ColoredCloud cloud;
  cloud.points.reserve(rows.size());
  if (has_color) cloud.colors.reserve(rows.size());
  for (const auto& row : rows) {
    cloud.points.emplace_back(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                              row[static_cast<std::size_t>(iz)]);
    if (has_color) {
      cloud.colors.push_back({static_cast<std::uint8_t>(row[static_cast<std::size_t>(ir)]),
                              static_cast<std::uint8_t>(row[static_cast<std::size_t>(ig)]),
                              static_cast<std::uint8_t>(row[static_cast<std::size_t>(ib)])});
    }
  }
  return cloud;
}

void write_colored_ply(const std::string& path, const ColoredCloud& cloud, bool binary) {
  if (!cloud.colors.empty() && cloud.colors.size() != cloud.points.size()) {
    throw IoError("ply: color count does not match point count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ply: cannot write " + path);
  const bool has_color = !cloud.colors.empty();
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (has_color) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (binary) {
      const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      if (has_color) out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    } else {
      out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
          << static_cast<float>(p.z());
      if (has_color) {
        out << ' ' << static_cast<int>(cloud.colors[i][0]) << ' '
            << static_cast<int>(cloud.colors[i][1]) << ' '
            << static_cast<int>(cloud.colors[i][2]);
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("ply: write failed for " + path);
}

}  // namespace radmap
