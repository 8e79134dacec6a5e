#include "radmap/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "radmap/errors.hpp"

namespace radmap {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Splits a top-level comma list, respecting nested brackets and strings.
std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  bool in_str = false;
  std::string cur;
  for (char c : s) {
    if (in_str) {
      if (c == '"') in_str = false;
      cur.push_back(c);
      continue;
    }
    if (c == '"') {
      in_str = true;
      cur.push_back(c);
    } else if (c == '[') {
      ++depth;
      cur.push_back(c);
    } else if (c == ']') {
      --depth;
      cur.push_back(c);
    } else if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty()) out.push_back(last);
  return out;
}

TomlValue parse_value(const std::string& raw, const std::string& origin) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError(origin + ": empty value");
  TomlValue v;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ConfigError(origin + ": unterminated string");
    v.type = TomlValue::Type::kString;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.type = TomlValue::Type::kBool;
    v.boolean = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(origin + ": unterminated array");
    v.type = TomlValue::Type::kArray;
    for (const std::string& item : split_commas(s.substr(1, s.size() - 2))) {
      v.array.push_back(parse_value(item, origin));
    }
    return v;
  }
  char* end = nullptr;
  v.number = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0') throw ConfigError(origin + ": bad value '" + s + "'");
  v.type = TomlValue::Type::kNumber;
  return v;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace

const TomlValue& TomlTable::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

double TomlTable::number(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  return it->second.number;
}

std::string TomlTable::string_or(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  return it->second.str;
}

TomlDoc parse_toml(const std::string& text, const std::string& origin) {
  TomlDoc doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  TomlTable* array_table = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.size() >= 4 && line.substr(0, 2) == "[[" && line.substr(line.size() - 2) == "]]") {
      const std::string name = trim(line.substr(2, line.size() - 4));
      doc.table_arrays[name].emplace_back();
      array_table = &doc.table_arrays[name].back();
      section.clear();
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      array_table = nullptr;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const TomlValue value = parse_value(line.substr(eq + 1), where);
    if (array_table != nullptr) {
      array_table->values[key] = value;
    } else {
      doc.flat[section.empty() ? key : section + "." + key] = value;
    }
  }
  return doc;
}

TomlDoc parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Entry {
  std::function<void(PipelineConfig&, const TomlValue&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

double as_number(const TomlValue& v, const std::string& key) {
  if (v.type == TomlValue::Type::kNumber) return v.number;
  if (v.type == TomlValue::Type::kBool) return v.boolean ? 1.0 : 0.0;
  throw ConfigError("config: key '" + key + "' expects a number");
}

bool as_bool(const TomlValue& v, const std::string& key) {
  if (v.type == TomlValue::Type::kBool) return v.boolean;
  if (v.type == TomlValue::Type::kNumber) return v.number != 0.0;
  throw ConfigError("config: key '" + key + "' expects a boolean");
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = [] {
    std::map<std::string, Entry> r;

#define RADMAP_NUM_KEY(KEY, FIELD)                                                        \
  r[KEY] = Entry{[](PipelineConfig& c, const TomlValue& v) {                              \
                   c.FIELD = static_cast<decltype(c.FIELD)>(as_number(v, KEY));           \
                 },                                                                       \
                 [](const PipelineConfig& c) { return fmt(static_cast<double>(c.FIELD)); }}
#define RADMAP_BOOL_KEY(KEY, FIELD)                                                      \
  r[KEY] = Entry{[](PipelineConfig& c, const TomlValue& v) { c.FIELD = as_bool(v, KEY); }, \
                 [](const PipelineConfig& c) { return c.FIELD ? std::string("true")       \
                                                              : std::string("false"); }}

    RADMAP_NUM_KEY("preprocess.z_min", preprocess.z_min);
    RADMAP_NUM_KEY("preprocess.z_max", preprocess.z_max);
    RADMAP_NUM_KEY("preprocess.dbscan_eps", preprocess.dbscan_eps);
    RADMAP_NUM_KEY("preprocess.dbscan_min_pts", preprocess.dbscan_min_pts);
    RADMAP_NUM_KEY("preprocess.sample_n", preprocess.sample_n);

    RADMAP_NUM_KEY("supervision.gmm_bandwidth", supervision.gmm_bandwidth);
    RADMAP_NUM_KEY("supervision.cwd_delta", supervision.cwd_delta);
    RADMAP_NUM_KEY("supervision.cwd_eps", supervision.cwd_eps);
    RADMAP_NUM_KEY("supervision.cwd_radius", supervision.cwd_radius);
    RADMAP_BOOL_KEY("supervision.cwd_quadratic", supervision.cwd_quadratic);
    RADMAP_NUM_KEY("supervision.occ_rings", supervision.occ_rings);
    RADMAP_NUM_KEY("supervision.occ_sectors", supervision.occ_sectors);
    RADMAP_NUM_KEY("supervision.occ_rmax", supervision.occ_rmax);
    RADMAP_NUM_KEY("supervision.tau", supervision.tau);
    RADMAP_NUM_KEY("supervision.eps_r", supervision.eps_r);
    RADMAP_NUM_KEY("supervision.eps_t", supervision.eps_t);
    RADMAP_NUM_KEY("supervision.lambda_cm", supervision.lambda_cm);
    RADMAP_NUM_KEY("supervision.lambda_cm_decay", supervision.lambda_cm_decay);
    RADMAP_NUM_KEY("supervision.lambda_cm_floor", supervision.lambda_cm_floor);

    RADMAP_NUM_KEY("odometry.max_iters", odometry.max_iters);
    RADMAP_NUM_KEY("odometry.tol_trans", odometry.tol_trans);
    RADMAP_NUM_KEY("odometry.tol_rot", odometry.tol_rot);
    RADMAP_NUM_KEY("odometry.reject_ratio", odometry.reject_ratio);

    RADMAP_NUM_KEY("gaussmap.iters", gaussmap.iters);
    RADMAP_NUM_KEY("gaussmap.densify_from", gaussmap.densify_from);
    RADMAP_NUM_KEY("gaussmap.densify_interval", gaussmap.densify_interval);
    RADMAP_NUM_KEY("gaussmap.grad_threshold", gaussmap.grad_threshold);
    RADMAP_NUM_KEY("gaussmap.lambda", gaussmap.lambda);
    RADMAP_NUM_KEY("gaussmap.gamma", gaussmap.gamma);
    RADMAP_NUM_KEY("gaussmap.lambda_mvc", gaussmap.lambda_mvc);
    RADMAP_NUM_KEY("gaussmap.mvc_offset", gaussmap.mvc_offset);
    RADMAP_NUM_KEY("gaussmap.w_depth", gaussmap.w_depth);
    RADMAP_NUM_KEY("gaussmap.w_normal", gaussmap.w_normal);
    RADMAP_BOOL_KEY("gaussmap.normalize_depth", gaussmap.normalize_depth);
    RADMAP_NUM_KEY("gaussmap.densify_scale_frac", gaussmap.densify_scale_frac);
    RADMAP_NUM_KEY("gaussmap.resplit_scale_frac", gaussmap.resplit_scale_frac);
    RADMAP_NUM_KEY("gaussmap.resplit_m", gaussmap.resplit_m);
    RADMAP_NUM_KEY("gaussmap.resplit_alpha", gaussmap.resplit_alpha);
    RADMAP_NUM_KEY("gaussmap.interp_opacity", gaussmap.interp_opacity);
    RADMAP_NUM_KEY("gaussmap.interp_k", gaussmap.interp_k);
    RADMAP_NUM_KEY("gaussmap.interp_dmax_factor", gaussmap.interp_dmax_factor);
    RADMAP_NUM_KEY("gaussmap.prune_taud_factor", gaussmap.prune_taud_factor);
    RADMAP_NUM_KEY("gaussmap.prune_tau_s", gaussmap.prune_tau_s);
    RADMAP_NUM_KEY("gaussmap.prune_tau_r", gaussmap.prune_tau_r);
    RADMAP_NUM_KEY("gaussmap.export_opacity", gaussmap.export_opacity);
    RADMAP_NUM_KEY("gaussmap.ground_stride", gaussmap.ground_stride);

    RADMAP_NUM_KEY("metrics.fscore_thr", metrics.fscore_thr);
    RADMAP_BOOL_KEY("metrics.ate_align", metrics.ate_align);
    RADMAP_NUM_KEY("metrics.max_skew", metrics.max_skew);
    RADMAP_BOOL_KEY("metrics.chamfer_squared", metrics.chamfer_squared);

    RADMAP_NUM_KEY("sim.points_per_frame", sim.points_per_frame);
    RADMAP_NUM_KEY("sim.sigma_range", sim.sigma_range);
    RADMAP_NUM_KEY("sim.sigma_azimuth", sim.sigma_azimuth);
    RADMAP_NUM_KEY("sim.ground_return_scale", sim.ground_return_scale);
    RADMAP_NUM_KEY("sim.fov_az", sim.fov_az);
    RADMAP_NUM_KEY("sim.fov_el", sim.fov_el);
    RADMAP_NUM_KEY("sim.max_range", sim.max_range);
    RADMAP_NUM_KEY("sim.dropout", sim.dropout);

    RADMAP_NUM_KEY("pipeline.seed", pipeline.seed);
    RADMAP_NUM_KEY("pipeline.threads", pipeline.threads);
    RADMAP_NUM_KEY("pipeline.keyframe_stride", pipeline.keyframe_stride);

#undef RADMAP_NUM_KEY
#undef RADMAP_BOOL_KEY
    return r;
  }();
  return reg;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const TomlValue& value) {
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(*this, value);
}

void PipelineConfig::set(const std::string& key, const std::string& value_text) {
  set(key, parse_value(value_text, "override " + key));
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(preprocess.z_min < preprocess.z_max, "preprocess.z_min must be below z_max");
  require(preprocess.dbscan_eps > 0.0, "preprocess.dbscan_eps must be positive");
  require(preprocess.dbscan_min_pts >= 1, "preprocess.dbscan_min_pts must be >= 1");
  require(preprocess.sample_n >= 1, "preprocess.sample_n must be >= 1");
  require(supervision.gmm_bandwidth > 0.0, "supervision.gmm_bandwidth must be positive");
  require(supervision.cwd_radius > 0.0, "supervision.cwd_radius must be positive");
  require(supervision.occ_rings >= 1 && supervision.occ_sectors >= 1,
          "occupancy grid must be at least 1x1");
  require(supervision.occ_rmax > 0.0, "supervision.occ_rmax must be positive");
  require(supervision.tau > 0.0, "supervision.tau must be positive");
  require(odometry.max_iters >= 1, "odometry.max_iters must be >= 1");
  require(odometry.tol_trans > 0.0 && odometry.tol_rot > 0.0,
          "odometry tolerances must be positive");
  require(gaussmap.iters >= 0, "gaussmap.iters must be >= 0");
  require(gaussmap.densify_interval >= 1, "gaussmap.densify_interval must be >= 1");
  require(gaussmap.resplit_m >= 1, "gaussmap.resplit_m must be >= 1");
  require(gaussmap.resplit_alpha > 0.0 && gaussmap.resplit_alpha < 1.0,
          "gaussmap.resplit_alpha must be in (0,1)");
  require(gaussmap.interp_k >= 1, "gaussmap.interp_k must be >= 1");
  require(gaussmap.ground_stride >= 1, "gaussmap.ground_stride must be >= 1");
  require(metrics.fscore_thr > 0.0, "metrics.fscore_thr must be positive");
  require(sim.points_per_frame >= 1, "sim.points_per_frame must be >= 1");
  require(sim.ground_return_scale >= 0.0 && sim.ground_return_scale <= 1.0,
          "sim.ground_return_scale must be in [0,1]");
  require(sim.dropout >= 0.0 && sim.dropout <= 1.0, "sim.dropout must be in [0,1]");
  require(pipeline.threads >= 1, "pipeline.threads must be >= 1");
  require(pipeline.keyframe_stride >= 1, "pipeline.keyframe_stride must be >= 1");
}

std::string PipelineConfig::dump() const {
  const auto& reg = registry();
  std::string out;
  std::string section;
  for (const auto& [key, entry] : reg) {
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(key.find('.') + 1) + " = " + entry.get(*this) + "\n";
  }
  return out;
}

OdometryConfig PipelineConfig::odometry_config() const {
  OdometryConfig c;
  c.preprocess = preprocess;
  c.refine.max_iters = odometry.max_iters;
  c.refine.tol_trans = odometry.tol_trans;
  c.refine.tol_rot = odometry.tol_rot;
  c.refine.reject_ratio = odometry.reject_ratio;
  c.gmm_bandwidth = supervision.gmm_bandwidth;
  c.cwd.delta = supervision.cwd_delta;
  c.cwd.eps = supervision.cwd_eps;
  c.cwd.radius = supervision.cwd_radius;
  c.cwd.quadratic_weight = supervision.cwd_quadratic;
  c.occ_rings = supervision.occ_rings;
  c.occ_sectors = supervision.occ_sectors;
  c.occ_rmax = supervision.occ_rmax;
  c.eps_r = supervision.eps_r;
  c.eps_t = supervision.eps_t;
  return c;
}

OptimizeSchedule PipelineConfig::optimize_schedule() const {
  OptimizeSchedule s;
  s.iterations = gaussmap.iters;
  s.densify_from = gaussmap.densify_from;
  s.densify_interval = gaussmap.densify_interval;
  s.grad_threshold = gaussmap.grad_threshold;
  s.lambda_mvc = gaussmap.lambda_mvc;
  s.mvc_offset = gaussmap.mvc_offset;
  s.loss.lambda = gaussmap.lambda;
  s.loss.gamma = gaussmap.gamma;
  s.loss.w_depth = gaussmap.w_depth;
  s.loss.w_normal = gaussmap.w_normal;
  s.loss.normalize_depth = gaussmap.normalize_depth;
  s.densify_scale_frac = gaussmap.densify_scale_frac;
  s.resplit_scale_frac = gaussmap.resplit_scale_frac;
  s.resplit_m = gaussmap.resplit_m;
  s.resplit_alpha = gaussmap.resplit_alpha;
  s.interp_opacity = gaussmap.interp_opacity;
  s.interp_k = gaussmap.interp_k;
  s.interp_dmax_factor = gaussmap.interp_dmax_factor;
  s.prune_taud_factor = gaussmap.prune_taud_factor;
  s.prune_tau_s = gaussmap.prune_tau_s;
  s.prune_tau_r = gaussmap.prune_tau_r;
  s.ground.stride = gaussmap.ground_stride;
  s.seed = pipeline.seed;
  return s;
}

sim::RadarModel PipelineConfig::radar_model() const {
  sim::RadarModel m;
  m.points_per_frame = sim.points_per_frame;
  m.sigma_range = sim.sigma_range;
  m.sigma_azimuth_deg = sim.sigma_azimuth;
  m.ground_return_scale = sim.ground_return_scale;
  m.fov_az_deg = sim.fov_az;
  m.fov_el_deg = sim.fov_el;
  m.max_range = sim.max_range;
  m.dropout = sim.dropout;
  return m;
}

PipelineConfig config_from_toml(const TomlDoc& doc) {
  PipelineConfig config;
  for (const auto& [key, value] : doc.flat) config.set(key, value);
  config.validate();
  return config;
}

PipelineConfig load_config(const std::string& path) {
  return config_from_toml(parse_toml_file(path));
}

}  // namespace radmap
