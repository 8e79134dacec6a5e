#include "radmap/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "radmap/checkpoint.hpp"
#include "radmap/errors.hpp"
#include "radmap/image_ops.hpp"
#include "radmap/kitti.hpp"
#include "radmap/odometry.hpp"
#include "radmap/se3.hpp"

namespace radmap {

namespace fs = std::filesystem;

namespace {

Se3Pose pose_from_12(const std::vector<TomlValue>& arr, const std::string& what) {
  if (arr.size() != 12) throw ConfigError(what + ": expected 12 numbers");
  Se3Pose pose;
  pose.rotation << arr[0].number, arr[1].number, arr[2].number, arr[4].number, arr[5].number,
      arr[6].number, arr[8].number, arr[9].number, arr[10].number;
  pose.translation = Vec3(arr[3].number, arr[7].number, arr[11].number);
  pose.rotation = orthonormalize(pose.rotation);
  return pose;
}

std::string fmt_csv(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::vector<OptimizeView> load_views(const std::string& views_path, std::vector<double>* times) {
  const TomlDoc doc = parse_toml_file(views_path);
  const auto it = doc.table_arrays.find("view");
  if (it == doc.table_arrays.end()) throw ConfigError(views_path + ": no [[view]] tables");
  const fs::path base = fs::path(views_path).parent_path();

  std::vector<OptimizeView> views;
  for (const TomlTable& table : it->second) {
    OptimizeView view;
    const auto& intr = table.at("intrinsics").array;
    const auto& size = table.at("size").array;
    if (intr.size() != 4 || size.size() != 2) {
      throw ConfigError(views_path + ": bad intrinsics/size");
    }
    view.camera.fx = intr[0].number;
    view.camera.fy = intr[1].number;
    view.camera.cx = intr[2].number;
    view.camera.cy = intr[3].number;
    view.camera.width = static_cast<int>(size[0].number);
    view.camera.height = static_cast<int>(size[1].number);
    view.camera.world_to_camera = pose_from_12(table.at("world_to_camera").array, views_path);
    view.priors.image = read_ppm((base / table.at("image").str).string());
    view.priors.depth_prior = read_pfm_gray((base / table.at("depth").str).string());
    view.priors.normal_prior = read_pfm_rgb((base / table.at("normal").str).string());
    view.priors.sky2d = read_pgm_mask((base / table.at("sky").str).string());
    views.push_back(std::move(view));
    if (times != nullptr) times->push_back(table.number("time", table.number("frame", 0.0)));
  }
  return views;
}

Dataset load_dataset(const std::string& dir) {
  Dataset data;
  const fs::path root(dir);
  if (!fs::exists(root / "frames")) throw IoError("dataset: missing frames/ in " + dir);

  std::vector<fs::path> frame_files;
  for (const auto& entry : fs::directory_iterator(root / "frames")) {
    if (entry.path().extension() == ".ply") frame_files.push_back(entry.path());
  }
  std::sort(frame_files.begin(), frame_files.end());
  for (const fs::path& p : frame_files) data.frames.push_back(read_radar_ply(p.string()));

  if (fs::exists(root / "gt" / "poses.kitti")) {
    data.gt = read_kitti_trajectory((root / "gt" / "poses.kitti").string(),
                                    (root / "gt" / "times.txt").string());
    for (std::size_t i = 0; i < data.frames.size() && i < data.gt.poses.size(); ++i) {
      data.frames[i].timestamp = data.gt.poses[i].timestamp;
    }
  } else {
    for (std::size_t i = 0; i < data.frames.size(); ++i) {
      data.frames[i].timestamp = static_cast<double>(i) * 0.1;
    }
  }

  if (fs::exists(root / "views.toml")) {
    std::vector<double> frame_ids;
    data.views = load_views((root / "views.toml").string(), &frame_ids);
    for (double fid : frame_ids) {
      const std::size_t k = static_cast<std::size_t>(fid);
      data.view_times.push_back(k < data.frames.size() ? data.frames[k].timestamp : fid);
    }
  }
  if (fs::exists(root / "gt" / "reference.ply")) {
    data.reference = read_colored_ply((root / "gt" / "reference.ply").string());
  }
  return data;
}

ColoredCloud map_build(const std::vector<RadarFrame>& frames, const Trajectory& trajectory,
                       const std::vector<OptimizeView>& views,
                       const std::vector<double>& view_times) {
  if (frames.size() > trajectory.poses.size()) {
    throw Error("map_build: trajectory does not cover the frames");
  }
  ColoredCloud cloud;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Se3Pose& pose = trajectory.poses[k].pose;
    int view_idx = -1;
    if (!views.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < views.size(); ++v) {
        const double dt = std::abs(view_times[v] - frames[k].timestamp);
        if (dt < best) {
          best = dt;
          view_idx = static_cast<int>(v);
        }
      }
    }
    for (const RadarPoint& p : frames[k].points) {
      const Vec3 world = pose.apply(p.position);
      std::array<std::uint8_t, 3> color = {128, 128, 128};
      if (view_idx >= 0) {
        const OptimizeView& view = views[static_cast<std::size_t>(view_idx)];
        const Vec3 pc = view.camera.to_camera(world);
        if (pc.z() > 0.01) {
          const Vec2 px = view.camera.project_camera(pc);
          const int u = static_cast<int>(std::floor(px.x()));
          const int v = static_cast<int>(std::floor(px.y()));
          if (u >= 0 && u < view.camera.width && v >= 0 && v < view.camera.height) {
            for (int c = 0; c < 3; ++c) {
              color[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(
                  std::lround(255.0 * view.priors.image.at(u, v, c)));
            }
          }
        }
      }
      cloud.points.push_back(world);
      cloud.colors.push_back(color);
    }
  }
  return cloud;
}

namespace {

struct StageTimer {
  PipelineSummary& summary;
  std::string name;
  std::chrono::steady_clock::time_point start;

  StageTimer(PipelineSummary& s, std::string n)
      : summary(s), name(std::move(n)), start(std::chrono::steady_clock::now()) {}

  void done(bool ok, const std::string& error = "") {
    StageReport report;
    report.name = name;
    report.ok = ok;
    report.ran = true;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.error = error;
    summary.stages.push_back(report);
    if (!ok) summary.ok = false;
  }
};

bool stage_enabled(const PipelineOptions& options, const std::string& name) {
  if (options.stages.empty()) return true;
  return std::find(options.stages.begin(), options.stages.end(), name) != options.stages.end();
}

std::vector<Vec3> cloud_points(const ColoredCloud& cloud) { return cloud.points; }

}  // namespace

std::string PipelineSummary::csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "t_rel," << fmt_csv(odom.t_rel) << "\n";
  out << "r_rel," << fmt_csv(odom.r_rel) << "\n";
  out << "rpe_trans," << fmt_csv(odom.rpe_trans) << "\n";
  out << "rpe_rot," << fmt_csv(odom.rpe_rot) << "\n";
  out << "ate," << fmt_csv(odom.ate) << "\n";
  out << "path_length," << fmt_csv(path_length) << "\n";
  out << "chamfer_initial," << fmt_csv(map_initial.chamfer_l1) << "\n";
  out << "mhd_initial," << fmt_csv(map_initial.mhd) << "\n";
  out << "fscore_initial," << fmt_csv(map_initial.fscore) << "\n";
  out << "psnr_initial," << fmt_csv(map_initial.psnr) << "\n";
  out << "ssim_initial," << fmt_csv(map_initial.ssim) << "\n";
  out << "chamfer_optimized," << fmt_csv(map_optimized.chamfer_l1) << "\n";
  out << "mhd_optimized," << fmt_csv(map_optimized.mhd) << "\n";
  out << "fscore_optimized," << fmt_csv(map_optimized.fscore) << "\n";
  out << "psnr_optimized," << fmt_csv(map_optimized.psnr) << "\n";
  out << "ssim_optimized," << fmt_csv(map_optimized.ssim) << "\n";
  out << "gaussians_before," << gaussians_before << "\n";
  out << "gaussians_after," << gaussians_after << "\n";
  return out.str();
}

std::string PipelineSummary::text() const {
  std::ostringstream out;
  out << "pipeline " << (ok ? "succeeded" : "FAILED") << "\n";
  for (const StageReport& s : stages) {
    out << "  stage " << s.name << ": " << (s.ok ? "ok" : "failed") << " ("
        << fmt_csv(s.seconds) << " s)";
    if (!s.error.empty()) out << " — " << s.error;
    out << "\n";
  }
  out << "odometry: t_rel=" << fmt_csv(odom.t_rel) << " m/m, r_rel=" << fmt_csv(odom.r_rel)
      << " deg/m, rpe=" << fmt_csv(odom.rpe_trans) << " m / " << fmt_csv(odom.rpe_rot)
      << " deg, ate=" << fmt_csv(odom.ate) << " m over " << fmt_csv(path_length) << " m\n";
  out << "map: fscore " << fmt_csv(map_initial.fscore) << " -> " << fmt_csv(map_optimized.fscore)
      << ", chamfer " << fmt_csv(map_initial.chamfer_l1) << " -> "
      << fmt_csv(map_optimized.chamfer_l1) << ", psnr " << fmt_csv(map_initial.psnr) << " -> "
      << fmt_csv(map_optimized.psnr) << " dB\n";
  out << "gaussians: " << gaussians_before << " -> " << gaussians_after << "\n";
  return out.str();
}

PipelineSummary run_pipeline(const PipelineOptions& options) {
  PipelineSummary summary;
  options.config.validate();
  omp_set_num_threads(options.config.pipeline.threads);

  const fs::path out_root(options.out_dir);
  fs::create_directories(out_root);
  const std::string dataset_dir =
      options.dataset_dir.empty() ? (out_root / "dataset").string() : options.dataset_dir;

  if (stage_enabled(options, "simulate")) {
    StageTimer timer(summary, "simulate");
    try {
      sim::SequenceConfig seq;
      seq.scene = sim::default_scene();
      seq.trajectory = sim::default_trajectory();
      seq.radar = options.config.radar_model();
      seq.camera = sim::default_camera();
      seq.keyframe_stride = options.config.pipeline.keyframe_stride;
      seq.seed = options.config.pipeline.seed;
      generate_sequence(seq, dataset_dir);

      // Dense reference cloud for map evaluation.
      const auto scene = sim::build_scene(seq.scene);
      ColoredCloud reference;
      for (const auto& sp : scene) {
        reference.points.push_back(sp.position);
        reference.colors.push_back({static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.x())),
                                    static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.y())),
                                    static_cast<std::uint8_t>(std::lround(255.0 * sp.albedo.z()))});
      }
      write_colored_ply((fs::path(dataset_dir) / "gt" / "reference.ply").string(), reference);
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
      return summary;
    }
  }

  Dataset data;
  try {
    data = load_dataset(dataset_dir);
  } catch (const std::exception& e) {
    StageReport report;
    report.name = "load-dataset";
    report.ok = false;
    report.ran = true;
    report.error = e.what();
    summary.stages.push_back(report);
    summary.ok = false;
    return summary;
  }

  Trajectory est = data.gt;  // stages may run standalone from gt poses
  const std::string est_path = (out_root / "traj_est.kitti").string();
  const std::string est_times = (out_root / "traj_est_times.txt").string();
  if (stage_enabled(options, "odom")) {
    StageTimer timer(summary, "odom");
    try {
      const OdometryResult result = run_odometry(data.frames, options.config.odometry_config());
      est = result.trajectory;
      write_kitti_trajectory(est_path, est_times, est);
      std::ofstream diag(out_root / "diag.csv");
      diag << "frame,refined,cs_div,cwd,occ,motion\n";
      for (const FrameDiag& d : result.diags) {
        diag << d.frame << ',' << (d.refined ? 1 : 0) << ',' << fmt_csv(d.cs_div) << ','
             << fmt_csv(d.cwd) << ',' << fmt_csv(d.occ) << ',' << fmt_csv(d.motion) << "\n";
      }
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
      est = data.gt;
    }
  } else if (fs::exists(est_path)) {
    est = read_kitti_trajectory(est_path, est_times);
  }

  ColoredCloud initial_map;
  const std::string map_init_path = (out_root / "map_init.ply").string();
  if (stage_enabled(options, "map-build")) {
    StageTimer timer(summary, "map-build");
    try {
      initial_map = map_build(data.frames, est, data.views, data.view_times);
      write_colored_ply(map_init_path, initial_map);
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
    }
  } else if (fs::exists(map_init_path)) {
    initial_map = read_colored_ply(map_init_path);
  }

  GaussianMap optimized;
  const std::string gmap_path = (out_root / "map.gmap").string();
  if (stage_enabled(options, "gs-optimize") && !initial_map.points.empty() &&
      !data.views.empty()) {
    StageTimer timer(summary, "gs-optimize");
    try {
      std::vector<Vec3> colors;
      colors.reserve(initial_map.points.size());
      for (const auto& c : initial_map.colors) {
        colors.emplace_back(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0);
      }
      const GaussianMap init = init_from_points(initial_map.points, colors);
      summary.gaussians_before = init.size();
      const OptimizeResult result = optimize(init, data.views, options.config.optimize_schedule());
      optimized = result.map;
      summary.gaussians_after = optimized.size();
      save_gmap(gmap_path, optimized);

      const ExportedPoints exported =
          export_points(optimized, options.config.gaussmap.export_opacity);
      ColoredCloud export_cloud;
      export_cloud.points = exported.points;
      for (const Vec3& c : exported.colors) {
        export_cloud.colors.push_back(
            {static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.x(), 0.0, 1.0))),
             static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.y(), 0.0, 1.0))),
             static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c.z(), 0.0, 1.0)))});
      }
      write_colored_ply((out_root / "map_points.ply").string(), export_cloud);
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
    }
  } else if (fs::exists(gmap_path)) {
    optimized = load_gmap(gmap_path);
    summary.gaussians_after = optimized.size();
  }

  if (stage_enabled(options, "eval-odom") && !data.gt.poses.empty() && !est.poses.empty()) {
    StageTimer timer(summary, "eval-odom");
    try {
      AssociationOptions assoc;
      assoc.max_skew = options.config.metrics.max_skew;
      for (std::size_t i = 1; i < data.gt.poses.size(); ++i) {
        summary.path_length += (data.gt.poses[i].pose.translation -
                                data.gt.poses[i - 1].pose.translation).norm();
      }
      try {
        const auto [t_rel, r_rel] = rpe_kitti(est, data.gt, assoc);
        summary.odom.t_rel = t_rel;
        summary.odom.r_rel = r_rel;
      } catch (const TooShort&) {
        // short sequences only report framewise numbers
      }
      const auto [rpe_t, rpe_r] = rpe_framewise(est, data.gt, assoc);
      summary.odom.rpe_trans = rpe_t;
      summary.odom.rpe_rot = rpe_r;
      summary.odom.ate = ate(est, data.gt, options.config.metrics.ate_align, assoc);
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
    }
  }

  if (stage_enabled(options, "eval-map") && !data.reference.points.empty()) {
    StageTimer timer(summary, "eval-map");
    try {
      const std::vector<Vec3> reference = cloud_points(data.reference);
      if (!initial_map.points.empty()) {
        summary.map_initial.chamfer_l1 = chamfer_l1(initial_map.points, reference);
        summary.map_initial.mhd = mhd(initial_map.points, reference);
        summary.map_initial.fscore =
            fscore(initial_map.points, reference, options.config.metrics.fscore_thr);
      }
      if (!optimized.empty()) {
        const ExportedPoints exported =
            export_points(optimized, options.config.gaussmap.export_opacity);
        if (!exported.points.empty()) {
          summary.map_optimized.chamfer_l1 = chamfer_l1(exported.points, reference);
          summary.map_optimized.mhd = mhd(exported.points, reference);
          summary.map_optimized.fscore =
              fscore(exported.points, reference, options.config.metrics.fscore_thr);
        }
      }
      if (!data.views.empty()) {
        const ImageRGB& truth = data.views.front().priors.image;
        if (!initial_map.points.empty()) {
          std::vector<Vec3> colors;
          for (const auto& c : initial_map.colors) {
            colors.emplace_back(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0);
          }
          const RenderBuffers initial_render =
              render(init_from_points(initial_map.points, colors), data.views.front().camera);
          summary.map_initial.psnr = psnr(initial_render.color_image(), truth);
          summary.map_initial.ssim = ssim(initial_render.color_image(), truth);
        }
        if (!optimized.empty()) {
          const RenderBuffers final_render = render(optimized, data.views.front().camera);
          summary.map_optimized.psnr = psnr(final_render.color_image(), truth);
          summary.map_optimized.ssim = ssim(final_render.color_image(), truth);
        }
      }
      timer.done(true);
    } catch (const std::exception& e) {
      timer.done(false, e.what());
    }
  }

  std::ofstream csv(out_root / "summary.csv");
  csv << summary.csv();
  std::ofstream txt(out_root / "summary.txt");
  txt << summary.text();
  return summary;
}

}  // namespace radmap
