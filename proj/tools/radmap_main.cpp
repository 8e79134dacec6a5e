#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "radmap/checkpoint.hpp"
#include "radmap/config.hpp"
#include "radmap/errors.hpp"
#include "radmap/image_ops.hpp"
#include "radmap/kitti.hpp"
#include "radmap/odometry.hpp"
#include "radmap/pipeline.hpp"
#include "radmap/se3.hpp"
#include "radmap/sim.hpp"

namespace {

using namespace radmap;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 1;
  bool quiet = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "TOML config file");
  cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
  cmd->add_option("--threads", args.threads, "worker threads (1 = bit-reproducible)");
  cmd->add_flag("--quiet", args.quiet, "suppress progress logging");
  cmd->add_flag("--verbose", args.verbose, "extra progress logging");
}

PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig config;
  if (!args.config_path.empty()) config = load_config(args.config_path);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.threads > 0) config.pipeline.threads = args.threads;
  config.validate();
  omp_set_num_threads(config.pipeline.threads);
  return config;
}

void log_kv(const CommonArgs& args, const std::string& line) {
  if (!args.quiet) std::cerr << line << "\n";
}

sim::SceneSpec scene_from_file(const std::string& path) {
  const TomlDoc doc = parse_toml_file(path);
  sim::SceneSpec spec;
  const auto seed_it = doc.flat.find("scene.seed");
  if (seed_it != doc.flat.end()) spec.seed = static_cast<std::uint64_t>(seed_it->second.number);
  const auto prims = doc.table_arrays.find("primitive");
  if (prims == doc.table_arrays.end()) throw ConfigError(path + ": no [[primitive]] tables");
  for (const TomlTable& t : prims->second) {
    sim::ScenePrimitive prim;
    const std::string kind = t.at("kind").str;
    if (kind == "ground-plane") prim.kind = sim::ScenePrimitive::Kind::kGroundPlane;
    else if (kind == "box") prim.kind = sim::ScenePrimitive::Kind::kBox;
    else if (kind == "cylinder") prim.kind = sim::ScenePrimitive::Kind::kCylinder;
    else if (kind == "wall") prim.kind = sim::ScenePrimitive::Kind::kWall;
    else throw ConfigError(path + ": unknown primitive kind '" + kind + "'");
    if (t.has("center")) {
      const auto& c = t.at("center").array;
      prim.pose.translation = Vec3(c.at(0).number, c.at(1).number, c.at(2).number);
    }
    if (t.has("yaw")) prim.pose.rotation = from_euler(0.0, 0.0, t.number("yaw", 0.0));
    if (t.has("dims")) {
      const auto& d = t.at("dims").array;
      prim.dimensions = Vec3(d.at(0).number, d.size() > 1 ? d.at(1).number : 0.0,
                             d.size() > 2 ? d.at(2).number : 0.0);
    }
    if (t.has("albedo")) {
      const auto& a = t.at("albedo").array;
      prim.albedo = Vec3(a.at(0).number, a.at(1).number, a.at(2).number);
    }
    prim.density = t.number("density", prim.density);
    spec.primitives.push_back(prim);
  }
  return spec;
}

sim::TrajectorySpec trajectory_from_file(const std::string& path) {
  const TomlDoc doc = parse_toml_file(path);
  sim::TrajectorySpec spec;
  const auto speed = doc.flat.find("trajectory.speed");
  if (speed != doc.flat.end()) spec.speed = speed->second.number;
  const auto dt = doc.flat.find("trajectory.frame_dt");
  if (dt != doc.flat.end()) spec.frame_dt = dt->second.number;
  const auto wps = doc.flat.find("trajectory.waypoints");
  if (wps == doc.flat.end()) throw ConfigError(path + ": missing trajectory.waypoints");
  spec.waypoints.clear();
  for (const TomlValue& wp : wps->second.array) {
    spec.waypoints.emplace_back(wp.array.at(0).number, wp.array.at(1).number,
                                wp.array.at(2).number);
  }
  return spec;
}

Camera camera_from_file(const std::string& path, const Se3Pose& world_from_body) {
  const TomlDoc doc = parse_toml_file(path);
  sim::CameraModel model;
  auto get = [&doc](const std::string& key, double fallback) {
    const auto it = doc.flat.find(key);
    return it == doc.flat.end() ? fallback : it->second.number;
  };
  model.fx = get("camera.fx", model.fx);
  model.fy = get("camera.fy", model.fy);
  model.cx = get("camera.cx", model.cx);
  model.cy = get("camera.cy", model.cy);
  model.width = static_cast<int>(get("camera.width", model.width));
  model.height = static_cast<int>(get("camera.height", model.height));
  const auto ext = doc.flat.find("camera.body_to_camera");
  if (ext != doc.flat.end()) {
    const auto& arr = ext->second.array;
    Mat3 r;
    r << arr.at(0).number, arr.at(1).number, arr.at(2).number, arr.at(4).number, arr.at(5).number,
        arr.at(6).number, arr.at(8).number, arr.at(9).number, arr.at(10).number;
    model.body_to_camera.rotation = orthonormalize(r);
    model.body_to_camera.translation =
        Vec3(arr.at(3).number, arr.at(7).number, arr.at(11).number);
  }
  return sim::camera_at(model, world_from_body);
}

int cmd_simulate(const CommonArgs& common, const std::string& scene_path,
                 const std::string& traj_path, const std::string& out_dir) {
  const PipelineConfig config = resolve_config(common);
  sim::SequenceConfig seq;
  seq.scene = scene_path.empty() ? sim::default_scene() : scene_from_file(scene_path);
  seq.trajectory = traj_path.empty() ? sim::default_trajectory() : trajectory_from_file(traj_path);
  seq.radar = config.radar_model();
  seq.camera = sim::default_camera();
  seq.keyframe_stride = config.pipeline.keyframe_stride;
  seq.seed = config.pipeline.seed;
  const sim::SequenceSummary summary = sim::generate_sequence(seq, out_dir);

  const auto scene = sim::build_scene(seq.scene);
  ColoredCloud reference;
  for (const auto& sp : scene) {
    reference.points.push_back(sp.position);
    reference.colors.push_back({static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.x())),
                                static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.y())),
                                static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.z()))});
  }
  write_colored_ply((fs::path(out_dir) / "gt" / "reference.ply").string(), reference);
  log_kv(common, "stage=simulate frames=" + std::to_string(summary.frames) +
                     " keyframes=" + std::to_string(summary.keyframes));
  return 0;
}

int cmd_odom(const CommonArgs& common, const std::string& input_dir, const std::string& out_path,
             const std::string& diag_path) {
  const PipelineConfig config = resolve_config(common);
  const Dataset data = load_dataset(input_dir);
  const OdometryResult result = run_odometry(data.frames, config.odometry_config());
  const fs::path out(out_path);
  write_kitti_trajectory(out.string(), (out.parent_path() / "times.txt").string(),
                         result.trajectory);
  if (!diag_path.empty()) {
    std::ofstream diag(diag_path);
    diag << "frame,refined,cs_div,cwd,occ,motion\n";
    for (const FrameDiag& d : result.diags) {
      diag << d.frame << ',' << (d.refined ? 1 : 0) << ',' << d.cs_div << ',' << d.cwd << ','
           << d.occ << ',' << d.motion << "\n";
    }
  }
  log_kv(common, "stage=odom frames=" + std::to_string(data.frames.size()));
  return 0;
}

int cmd_score(const CommonArgs& common, const std::string& src_path, const std::string& tgt_path,
              const std::string& pose_text) {
  const PipelineConfig config = resolve_config(common);
  RadarFrame src = read_radar_ply(src_path);
  RadarFrame tgt = read_radar_ply(tgt_path);

  Se3Pose pose;
  if (!pose_text.empty()) {
    std::istringstream ss(pose_text);
    double v[12];
    for (double& x : v) {
      if (!(ss >> x)) throw ConfigError("score: --pose expects 12 floats (row-major 3x4)");
    }
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.rotation = orthonormalize(pose.rotation);
    pose.translation = Vec3(v[3], v[7], v[11]);
  }

  const PreprocessConfig pp = config.preprocess;
  const PreprocessedFrame src_pre = preprocess_frame(src, pp);
  const PreprocessedFrame tgt_pre = preprocess_frame(tgt, pp);
  const RadarFrame src_tf = transform_frame(src_pre.frame, pose);

  CwdParams cwd_params;
  cwd_params.delta = config.supervision.cwd_delta;
  cwd_params.eps = config.supervision.cwd_eps;
  cwd_params.radius = config.supervision.cwd_radius;
  cwd_params.quadratic_weight = config.supervision.cwd_quadratic;
  const double cwd =
      cluster_weighted_distance(src_tf, tgt_pre.frame, src_pre.clusters, tgt_pre.clusters,
                                cwd_params);
  const double occ = column_occupancy_score(
      polar_occupancy(src_tf, config.supervision.occ_rings, config.supervision.occ_sectors,
                      config.supervision.occ_rmax),
      polar_occupancy(tgt_pre.frame, config.supervision.occ_rings, config.supervision.occ_sectors,
                      config.supervision.occ_rmax));

  const GaussianMixture mix_src = gmm_from_frame(src_tf, config.supervision.gmm_bandwidth);
  const GaussianMixture mix_tgt = gmm_from_frame(tgt_pre.frame, config.supervision.gmm_bandwidth);
  const double ga = cs_divergence(mix_src, mix_tgt);

  // Teacher term: refine from the provided pose, keep it only if it wins.
  OdometryConfig odom_config = config.odometry_config();
  const RefineResult refined = refine_pose(src_pre.frame, tgt_pre.frame, pose, odom_config.refine);
  const PoseEstimate selected = select_pose(src_pre.frame, tgt_pre.frame, pose, refined.pose,
                                            config.supervision.gmm_bandwidth);
  double tg = 0.0;
  if (selected.refined) {
    tg = (pose.rotation - selected.pose.rotation).cwiseAbs().sum() +
         (pose.translation - selected.pose.translation).cwiseAbs().sum();
  }

  // Feature contrast from the carried point features (rrv, rcs).
  FeatureMatrix feat_s, feat_t;
  feat_s.rows = static_cast<int>(src_tf.points.size());
  feat_s.dim = 2;
  feat_s.values.resize(static_cast<std::size_t>(feat_s.rows * 2));
  for (int i = 0; i < feat_s.rows; ++i) {
    feat_s.values[static_cast<std::size_t>(2 * i)] = src_tf.points[static_cast<std::size_t>(i)].rrv;
    feat_s.values[static_cast<std::size_t>(2 * i + 1)] =
        src_tf.points[static_cast<std::size_t>(i)].rcs;
  }
  feat_t.rows = static_cast<int>(tgt_pre.frame.points.size());
  feat_t.dim = 2;
  feat_t.values.resize(static_cast<std::size_t>(feat_t.rows * 2));
  for (int i = 0; i < feat_t.rows; ++i) {
    feat_t.values[static_cast<std::size_t>(2 * i)] =
        tgt_pre.frame.points[static_cast<std::size_t>(i)].rrv;
    feat_t.values[static_cast<std::size_t>(2 * i + 1)] =
        tgt_pre.frame.points[static_cast<std::size_t>(i)].rcs;
  }
  const double fc =
      feature_contrast_score(src_tf, tgt_pre.frame, feat_s, feat_t, config.supervision.tau);

  // Continuous-motion term needs pose history; a single pair reports the
  // slack-free penalty of repeating this pose (zero by construction).
  double cm = 0.0;
  try {
    cm = motion_smoothness(pose, pose, pose, config.supervision.eps_r, config.supervision.eps_t,
                           config.supervision.lambda_cm);
  } catch (const GimbalLock&) {
    cm = 0.0;
  }

  std::cout << "cwd=" << cwd << "\n"
            << "occ=" << occ << "\n"
            << "tg=" << tg << "\n"
            << "ga=" << ga << "\n"
            << "fc=" << fc << "\n"
            << "cm=" << cm << "\n";
  return 0;
}

int cmd_map_build(const CommonArgs& common, const std::string& input_dir,
                  const std::string& traj_path, const std::string& out_path) {
  const PipelineConfig config = resolve_config(common);
  (void)config;
  Dataset data = load_dataset(input_dir);
  Trajectory traj = data.gt;
  if (!traj_path.empty()) {
    const fs::path tp(traj_path);
    fs::path times = tp.parent_path() / "times.txt";
    if (!fs::exists(times)) times = tp.parent_path() / "traj_est_times.txt";
    traj = read_kitti_trajectory(tp.string(), times.string());
  }
  const ColoredCloud cloud = map_build(data.frames, traj, data.views, data.view_times);
  write_colored_ply(out_path, cloud);
  log_kv(common, "stage=map-build points=" + std::to_string(cloud.points.size()));
  return 0;
}

int cmd_gs_optimize(const CommonArgs& common, const std::string& map_path,
                    const std::string& views_path, int iters_override,
                    const std::string& out_path) {
  PipelineConfig config = resolve_config(common);
  if (iters_override >= 0) config.gaussmap.iters = iters_override;

  const ColoredCloud cloud = read_colored_ply(map_path);
  std::vector<Vec3> colors;
  colors.reserve(cloud.points.size());
  if (cloud.colors.empty()) {
    colors.assign(cloud.points.size(), Vec3::Constant(0.5));
  } else {
    for (const auto& c : cloud.colors) colors.emplace_back(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0);
  }
  const GaussianMap init = init_from_points(cloud.points, colors);
  const std::vector<OptimizeView> views = load_views(views_path);
  const OptimizeResult result = optimize(init, views, config.optimize_schedule());
  save_gmap(out_path, result.map);
  log_kv(common, "stage=gs-optimize gaussians_before=" + std::to_string(result.stats.initial_count) +
                     " gaussians_after=" + std::to_string(result.stats.final_count) +
                     " nan_gradients=" + std::to_string(result.stats.nan_gradients));
  return 0;
}

int cmd_render(const CommonArgs& common, const std::string& map_path,
               const std::string& camera_path, const std::string& pose_text,
               const std::string& out_path) {
  resolve_config(common);
  const GaussianMap map = load_gmap(map_path);
  Se3Pose body;
  if (!pose_text.empty()) {
    std::istringstream ss(pose_text);
    double v[12];
    for (double& x : v) {
      if (!(ss >> x)) throw ConfigError("render: --pose expects 12 floats");
    }
    body.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    body.rotation = orthonormalize(body.rotation);
    body.translation = Vec3(v[3], v[7], v[11]);
  }
  const Camera cam = camera_from_file(camera_path, body);
  const RenderBuffers buffers = render(map, cam);
  write_ppm(out_path, buffers.color_image());
  const fs::path out(out_path);
  ImageGray depth(cam.width, cam.height);
  depth.data = buffers.depth;
  write_pfm_gray((out.parent_path() / (out.stem().string() + ".depth.pfm")).string(), depth);
  return 0;
}

int cmd_export_points(const CommonArgs& common, const std::string& map_path,
                      const std::string& out_path) {
  const PipelineConfig config = resolve_config(common);
  const GaussianMap map = load_gmap(map_path);
  const ExportedPoints exported = export_points(map, config.gaussmap.export_opacity);
  ColoredCloud cloud;
  cloud.points = exported.points;
  for (const Vec3& c : exported.colors) {
    cloud.colors.push_back(
        {static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.x(), 0.0, 1.0))),
         static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.y(), 0.0, 1.0))),
         static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.z(), 0.0, 1.0)))});
  }
  write_colored_ply(out_path, cloud);
  log_kv(common, "stage=export-points points=" + std::to_string(cloud.points.size()));
  return 0;
}

int cmd_eval_odom(const CommonArgs& common, const std::string& est_path,
                  const std::string& gt_path, const std::string& mode, bool interp,
                  const std::string& csv_path) {
  const PipelineConfig config = resolve_config(common);
  const fs::path ep(est_path), gp(gt_path);
  auto times_for = [](const fs::path& p) {
    for (const char* name : {"times.txt", "traj_est_times.txt"}) {
      const fs::path t = p.parent_path() / name;
      if (fs::exists(t)) return t.string();
    }
    throw IoError("eval-odom: no timestamps file next to " + p.string());
  };
  const Trajectory est = read_kitti_trajectory(ep.string(), times_for(ep));
  const Trajectory gt = read_kitti_trajectory(gp.string(), times_for(gp));
  AssociationOptions assoc;
  assoc.max_skew = config.metrics.max_skew;
  assoc.interpolate = interp;

  std::ostringstream report;
  if (mode == "kitti") {
    const auto [t_rel, r_rel] = rpe_kitti(est, gt, assoc);
    report << "t_rel=" << t_rel << "\nr_rel=" << r_rel << "\n";
  } else {
    const auto [rpe_t, rpe_r] = rpe_framewise(est, gt, assoc);
    report << "rpe_trans=" << rpe_t << "\nrpe_rot=" << rpe_r << "\n";
  }
  report << "ate=" << ate(est, gt, config.metrics.ate_align, assoc) << "\n";
  std::cout << report.str();
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "metric,value\n";
    std::istringstream lines(report.str());
    std::string line;
    while (std::getline(lines, line)) {
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos) {
        csv << line.substr(0, eq) << ',' << line.substr(eq + 1) << "\n";
      }
    }
  }
  return 0;
}

int cmd_eval_map(const CommonArgs& common, const std::string& est_path,
                 const std::string& gt_path, double threshold, const std::string& csv_path) {
  const PipelineConfig config = resolve_config(common);
  const ColoredCloud est = read_colored_ply(est_path);
  const ColoredCloud gt = read_colored_ply(gt_path);
  const double thr = threshold > 0.0 ? threshold : config.metrics.fscore_thr;

  std::ostringstream report;
  report << "chamfer_l1=" << chamfer_l1(est.points, gt.points) << "\n";
  report << "mhd=" << mhd(est.points, gt.points) << "\n";
  report << "fscore=" << fscore(est.points, gt.points, thr) << "\n";
  std::cout << report.str();
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "metric,value\n";
    std::istringstream lines(report.str());
    std::string line;
    while (std::getline(lines, line)) {
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos) csv << line.substr(0, eq) << ',' << line.substr(eq + 1) << "\n";
    }
  }
  return 0;
}

int cmd_pipeline(const CommonArgs& common, const std::string& out_dir,
                 const std::string& dataset_dir, const std::string& stages_csv) {
  PipelineOptions options;
  options.config = resolve_config(common);
  options.out_dir = out_dir;
  options.dataset_dir = dataset_dir;
  options.quiet = common.quiet;
  if (!stages_csv.empty()) {
    std::istringstream ss(stages_csv);
    std::string stage;
    while (std::getline(ss, stage, ',')) options.stages.push_back(stage);
  }
  const PipelineSummary summary = run_pipeline(options);
  std::cout << summary.text();
  return summary.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4D radar odometry and gaussian map optimization"};
  app.require_subcommand(1);
  bool show_version = false;
  app.add_flag("--version", show_version, "print the map checkpoint format version");

  CommonArgs common;

  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string scene_path, traj_path, sim_out = "dataset";
  sim_cmd->add_option("--scene", scene_path, "scene TOML (defaults to the built-in scene)");
  sim_cmd->add_option("--traj", traj_path, "trajectory TOML");
  sim_cmd->add_option("--out", sim_out, "output dataset directory")->required();
  add_common(sim_cmd, common);

  auto* odom_cmd = app.add_subcommand("odom", "run the teacher odometry over a dataset");
  std::string odom_in, odom_out = "traj.kitti", odom_diag;
  odom_cmd->add_option("--input", odom_in, "dataset directory (frames/*.ply)")->required();
  odom_cmd->add_option("--out", odom_out, "estimated trajectory (KITTI format)");
  odom_cmd->add_option("--diag", odom_diag, "per-frame diagnostics CSV");
  add_common(odom_cmd, common);

  auto* score_cmd = app.add_subcommand("score", "supervision terms for a frame pair + pose");
  std::string score_src, score_tgt, score_pose;
  score_cmd->add_option("--src", score_src, "source frame PLY")->required();
  score_cmd->add_option("--tgt", score_tgt, "target frame PLY")->required();
  score_cmd->add_option("--pose", score_pose, "12 floats, row-major 3x4 [R|t]");
  add_common(score_cmd, common);

  auto* map_cmd = app.add_subcommand("map-build", "chain frames into a colored world map");
  std::string map_in, map_traj, map_out = "map_init.ply";
  map_cmd->add_option("--input", map_in, "dataset directory")->required();
  map_cmd->add_option("--traj", map_traj, "trajectory (defaults to dataset gt)");
  map_cmd->add_option("--out", map_out, "output PLY");
  add_common(map_cmd, common);

  auto* gs_cmd = app.add_subcommand("gs-optimize", "optimize a gaussian map against views");
  std::string gs_map, gs_views, gs_out = "map.gmap";
  int gs_iters = -1;
  gs_cmd->add_option("--map", gs_map, "initial map PLY")->required();
  gs_cmd->add_option("--views", gs_views, "views.toml")->required();
  gs_cmd->add_option("--iters", gs_iters, "iteration override");
  gs_cmd->add_option("--out", gs_out, "output checkpoint (.gmap)");
  add_common(gs_cmd, common);

  auto* render_cmd = app.add_subcommand("render", "render a checkpoint from a camera");
  std::string render_map, render_cam, render_pose, render_out = "img.ppm";
  render_cmd->add_option("--map", render_map, "checkpoint (.gmap)")->required();
  render_cmd->add_option("--camera", render_cam, "camera TOML")->required();
  render_cmd->add_option("--pose", render_pose, "body pose, 12 floats (identity default)");
  render_cmd->add_option("--out", render_out, "output PPM");
  add_common(render_cmd, common);

  auto* export_cmd = app.add_subcommand("export-points", "revert a checkpoint to points");
  std::string export_map, export_out = "points.ply";
  export_cmd->add_option("--map", export_map, "checkpoint (.gmap)")->required();
  export_cmd->add_option("--out", export_out, "output PLY");
  add_common(export_cmd, common);

  auto* eo_cmd = app.add_subcommand("eval-odom", "trajectory metrics");
  std::string eo_est, eo_gt, eo_mode = "framewise", eo_csv;
  bool eo_interp = false;
  eo_cmd->add_option("--est", eo_est, "estimated KITTI trajectory")->required();
  eo_cmd->add_option("--gt", eo_gt, "ground-truth KITTI trajectory")->required();
  eo_cmd->add_option("--mode", eo_mode, "kitti|framewise");
  eo_cmd->add_flag("--interp", eo_interp, "interpolate gt onto est timestamps");
  eo_cmd->add_option("--csv", eo_csv, "also write CSV");
  add_common(eo_cmd, common);

  auto* em_cmd = app.add_subcommand("eval-map", "point map metrics");
  std::string em_est, em_gt, em_csv;
  double em_thr = -1.0;
  em_cmd->add_option("--est", em_est, "estimated map PLY")->required();
  em_cmd->add_option("--gt", em_gt, "ground-truth map PLY")->required();
  em_cmd->add_option("--thr", em_thr, "F-score distance threshold (m)");
  em_cmd->add_option("--csv", em_csv, "also write CSV");
  add_common(em_cmd, common);

  auto* pipe_cmd = app.add_subcommand("pipeline", "full simulate->odom->map->optimize->eval run");
  std::string pipe_out = "run", pipe_dataset, pipe_stages;
  pipe_cmd->add_option("--out", pipe_out, "output directory");
  pipe_cmd->add_option("--dataset", pipe_dataset, "existing dataset (skips simulate)");
  pipe_cmd->add_option("--stages", pipe_stages, "comma-separated stage subset");
  add_common(pipe_cmd, common);

  CLI11_PARSE(app, argc, argv);

  if (show_version) {
    std::cout << "gmap format version " << radmap::kGmapVersion << "\n";
    return 0;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(common, scene_path, traj_path, sim_out);
    if (odom_cmd->parsed()) return cmd_odom(common, odom_in, odom_out, odom_diag);
    if (score_cmd->parsed()) return cmd_score(common, score_src, score_tgt, score_pose);
    if (map_cmd->parsed()) return cmd_map_build(common, map_in, map_traj, map_out);
    if (gs_cmd->parsed()) return cmd_gs_optimize(common, gs_map, gs_views, gs_iters, gs_out);
    if (render_cmd->parsed()) return cmd_render(common, render_map, render_cam, render_pose, render_out);
    if (export_cmd->parsed()) return cmd_export_points(common, export_map, export_out);
    if (eo_cmd->parsed()) return cmd_eval_odom(common, eo_est, eo_gt, eo_mode, eo_interp, eo_csv);
    if (em_cmd->parsed()) return cmd_eval_map(common, em_est, em_gt, em_thr, em_csv);
    if (pipe_cmd->parsed()) return cmd_pipeline(common, pipe_out, pipe_dataset, pipe_stages);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
