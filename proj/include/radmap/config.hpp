#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radmap/metrics.hpp"
#include "radmap/odometry.hpp"
#include "radmap/optimize.hpp"
#include "radmap/sim.hpp"

namespace radmap {

/// Minimal TOML document: sections, key = value, [[table]] arrays; values
/// are numbers, booleans, strings and (nested) arrays.
struct TomlValue {
  enum class Type { kNumber, kBool, kString, kArray };
  Type type = Type::kNumber;
  double number = 0.0;
  bool boolean = false;
  std::string str;
  std::vector<TomlValue> array;
};

struct TomlTable {
  std::map<std::string, TomlValue> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const TomlValue& at(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
};

struct TomlDoc {
  std::map<std::string, TomlValue> flat;  // "section.key" -> value
  std::map<std::string, std::vector<TomlTable>> table_arrays;
};

TomlDoc parse_toml_file(const std::string& path);
TomlDoc parse_toml(const std::string& text, const std::string& origin = "<string>");

/// Every tunable of the pipeline with the published defaults. Unknown keys
/// are rejected at load time and all values are validated against the
/// module preconditions.
struct PipelineConfig {
  PreprocessConfig preprocess;

  struct Supervision {
    double gmm_bandwidth = 0.5;
    int cwd_delta = 2;
    double cwd_eps = 0.0225;
    double cwd_radius = 1.0;
    bool cwd_quadratic = false;
    int occ_rings = 32;
    int occ_sectors = 72;
    double occ_rmax = 80.0;
    double tau = 0.07;
    double eps_r = 0.01;
    double eps_t = 0.05;
    double lambda_cm = 1.0;
    double lambda_cm_decay = 0.95;
    double lambda_cm_floor = 0.1;
  } supervision;

  struct Odometry {
    int max_iters = 30;
    double tol_trans = 1e-4;
    double tol_rot = 1e-4;
    double reject_ratio = 3.0;
  } odometry;

  struct Gaussmap {
    int iters = 15000;
    int densify_from = 500;
    int densify_interval = 100;
    double grad_threshold = 5e-4;
    double lambda = 0.1;
    double gamma = 1.0;
    double lambda_mvc = 3.0;
    int mvc_offset = 1;
    double w_depth = 1.0;
    double w_normal = 1.0;
    bool normalize_depth = false;
    double densify_scale_frac = 0.01;
    double resplit_scale_frac = 0.05;
    int resplit_m = 4;
    double resplit_alpha = 0.6;
    double interp_opacity = 0.7;
    int interp_k = 6;
    double interp_dmax_factor = 3.0;
    double prune_taud_factor = 2.0;
    double prune_tau_s = 1.0;
    double prune_tau_r = 40.0;
    double export_opacity = 0.1;
    int ground_stride = 4;
  } gaussmap;

  struct Metrics {
    double fscore_thr = 0.3;
    bool ate_align = true;
    double max_skew = 0.05;
    bool chamfer_squared = false;
  } metrics;

  struct Sim {
    int points_per_frame = 300;
    double sigma_range = 0.05;
    double sigma_azimuth = 0.3;
    double ground_return_scale = 0.2;
    double fov_az = 120.0;
    double fov_el = 30.0;
    double max_range = 40.0;
    double dropout = 0.0;
  } sim;

  struct Pipeline {
    std::uint64_t seed = 1;
    int threads = 1;
    int keyframe_stride = 5;
  } pipeline;

  /// Sets one dotted key from its textual value; throws ConfigError on
  /// unknown keys or invalid values.
  void set(const std::string& key, const TomlValue& value);
  void set(const std::string& key, const std::string& value_text);

  void validate() const;

  /// Serializes every key; load(dump()) reproduces the effective values.
  std::string dump() const;

  OdometryConfig odometry_config() const;
  OptimizeSchedule optimize_schedule() const;
  sim::RadarModel radar_model() const;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_toml(const TomlDoc& doc);

}  // namespace radmap
