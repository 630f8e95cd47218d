// SPDX-License-Identifier: Apache-2.0
#include "voxcap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "voxcap/image_io.hpp"
#include "voxcap/metrics.hpp"
#include "voxcap/plot.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace voxcap {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = 180.0 / kPi;

// Master-seed stream tags; every consumer forks its own stream so adding a
// consumer never shifts another one's draws.
constexpr std::uint64_t kSeedTrain = 1;
constexpr std::uint64_t kSeedPlanner = 2;
constexpr std::uint64_t kSeedValidationFull = 3;
constexpr std::uint64_t kSeedValidationBottom = 4;
constexpr std::uint64_t kSeedSurface = 5;
constexpr std::uint64_t kSeedFlip = 6;
constexpr std::uint64_t kSeedProbes = 7;
constexpr std::uint64_t kSeedBaseline = 8;

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

Pose shell_pose(const ShellSpec& shell, double az, double el, double r) {
  const double ce = std::cos(el);
  const Vec3 dir{ce * std::cos(az), ce * std::sin(az), std::sin(el)};
  const Vec3 up = std::abs(dir.z) > 0.999 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  return look_at(shell.center + dir * r, shell.center, up);
}

void shell_coords(const ShellSpec& shell, const Pose& pose, double* az, double* el,
                  double* r) {
  const Vec3 d = pose.r - shell.center;
  *r = d.norm();
  *el = std::asin(std::clamp(d.z / std::max(*r, 1e-12), -1.0, 1.0));
  *az = std::atan2(d.y, d.x);
}

ordered_json pose_json(const Pose& p) {
  ordered_json j;
  j["px"] = p.r.x;
  j["py"] = p.r.y;
  j["pz"] = p.r.z;
  j["qw"] = p.q.w;
  j["qx"] = p.q.x;
  j["qy"] = p.q.y;
  j["qz"] = p.q.z;
  return j;
}

void write_view_png(const std::string& path, const ViewSample& view) {
  write_png_rgb8(path, view.intr.width, view.intr.height, to_rgb8(view.image));
}

}  // namespace

ObjectKind parse_scene_kind(const std::string& name) {
  if (name == "sphere") return ObjectKind::Sphere;
  if (name == "box") return ObjectKind::Box;
  if (name == "capsule") return ObjectKind::Capsule;
  if (name == "composite") return ObjectKind::CompositeCavity;
  throw ConfigError("unknown scene kind: " + name);
}

const char* scene_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Sphere: return "sphere";
    case ObjectKind::Box: return "box";
    case ObjectKind::Capsule: return "capsule";
    case ObjectKind::CompositeCavity: return "composite";
  }
  throw ConfigError("unknown scene kind");
}

RunMode parse_mode(const std::string& name) {
  if (name == "ours") return RunMode::Ours;
  if (name == "ours-no-flip") return RunMode::OursNoFlip;
  if (name == "random-view") return RunMode::RandomView;
  if (name == "furthest-view") return RunMode::FurthestView;
  throw ConfigError("unknown mode: " + name);
}

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Ours: return "ours";
    case RunMode::OursNoFlip: return "ours-no-flip";
    case RunMode::RandomView: return "random-view";
    case RunMode::FurthestView: return "furthest-view";
  }
  throw ConfigError("unknown mode");
}

RunConfig run_config_from(const Config& file) {
  RunConfig rc;
  rc.flip_noise = {0.06, 0.004, 0.0};

  rc.mode = parse_mode(file.get_str("run.mode", mode_name(rc.mode)));
  rc.master_seed = file.get_u64("run.seed", rc.master_seed);
  rc.out_dir = file.get_str("run.out", rc.out_dir);
  rc.budget_total = file.get_real("run.budget", rc.budget_total);
  rc.max_iterations = static_cast<int>(file.get_int("run.max_iterations", rc.max_iterations));
  rc.bootstrap_views = static_cast<int>(file.get_int("run.bootstrap_views", rc.bootstrap_views));
  rc.post_flip_views = static_cast<int>(file.get_int("run.post_flip_views", rc.post_flip_views));
  rc.n_validation = static_cast<int>(file.get_int("run.n_validation", rc.n_validation));
  rc.n_probes = static_cast<int>(file.get_int("run.n_probes", rc.n_probes));
  rc.n_surface_points =
      static_cast<int>(file.get_int("run.n_surface_points", rc.n_surface_points));
  rc.fscore_threshold = file.get_real("run.fscore_threshold", rc.fscore_threshold);
  rc.mesh_iso = file.get_real("run.mesh_iso", rc.mesh_iso);
  rc.ssd_stride = static_cast<int>(file.get_int("run.ssd_stride", rc.ssd_stride));
  rc.enable_repose = file.get_bool("run.enable_repose", rc.enable_repose);
  rc.save_images = file.get_bool("run.save_images", rc.save_images);
  rc.grid_res = static_cast<int>(file.get_int("run.grid_res", rc.grid_res));
  rc.oracle_res = static_cast<int>(file.get_int("run.oracle_res", rc.oracle_res));
  rc.reach_elev_min_rad =
      file.get_real("run.reach_elev_min_deg", rc.reach_elev_min_rad * kDeg) / kDeg;

  rc.scene.kind = parse_scene_kind(file.get_str("scene.kind", scene_kind_name(rc.scene.kind)));
  rc.scene.density = file.get_real("scene.density", rc.scene.density);
  rc.scene.sphere_radius = file.get_real("scene.sphere_radius", rc.scene.sphere_radius);
  rc.scene.box_half.x = file.get_real("scene.box_half_x", rc.scene.box_half.x);
  rc.scene.box_half.y = file.get_real("scene.box_half_y", rc.scene.box_half.y);
  rc.scene.box_half.z = file.get_real("scene.box_half_z", rc.scene.box_half.z);
  rc.scene.capsule_radius = file.get_real("scene.capsule_radius", rc.scene.capsule_radius);
  rc.scene.capsule_half_len =
      file.get_real("scene.capsule_half_len", rc.scene.capsule_half_len);
  rc.scene.cavity_outer_half.x =
      file.get_real("scene.cavity_outer_x", rc.scene.cavity_outer_half.x);
  rc.scene.cavity_outer_half.y =
      file.get_real("scene.cavity_outer_y", rc.scene.cavity_outer_half.y);
  rc.scene.cavity_outer_half.z =
      file.get_real("scene.cavity_outer_z", rc.scene.cavity_outer_half.z);
  rc.scene.cavity_pocket_half.x =
      file.get_real("scene.cavity_pocket_x", rc.scene.cavity_pocket_half.x);
  rc.scene.cavity_pocket_half.y =
      file.get_real("scene.cavity_pocket_y", rc.scene.cavity_pocket_half.y);
  rc.scene.cavity_pocket_half.z =
      file.get_real("scene.cavity_pocket_z", rc.scene.cavity_pocket_half.z);

  const double half = file.get_real("workspace.half_extent", rc.bounds.hi.x);
  rc.bounds = Aabb{{-half, -half, -half}, {half, half, half}};
  rc.shell.r_min = file.get_real("workspace.shell_r_min", rc.shell.r_min);
  rc.shell.r_max = file.get_real("workspace.shell_r_max", rc.shell.r_max);

  rc.capture_intr.width = static_cast<int>(file.get_int("camera.width", rc.capture_intr.width));
  rc.capture_intr.height =
      static_cast<int>(file.get_int("camera.height", rc.capture_intr.height));
  rc.capture_intr.fx = file.get_real("camera.fx", rc.capture_intr.fx);
  rc.capture_intr.fy = file.get_real("camera.fy", rc.capture_intr.fy);
  rc.capture_intr.cx = file.get_real("camera.cx", rc.capture_intr.cx);
  rc.capture_intr.cy = file.get_real("camera.cy", rc.capture_intr.cy);
  rc.eval_intr.width = static_cast<int>(file.get_int("camera.eval_width", rc.eval_intr.width));
  rc.eval_intr.height =
      static_cast<int>(file.get_int("camera.eval_height", rc.eval_intr.height));
  rc.eval_intr.fx = file.get_real("camera.eval_fx", rc.eval_intr.fx);
  rc.eval_intr.fy = file.get_real("camera.eval_fy", rc.eval_intr.fy);
  rc.eval_intr.cx = file.get_real("camera.eval_cx", rc.eval_intr.cx);
  rc.eval_intr.cy = file.get_real("camera.eval_cy", rc.eval_intr.cy);
  rc.render_spec.n_samples =
      static_cast<int>(file.get_int("camera.n_samples", rc.render_spec.n_samples));

  rc.train.members = static_cast<int>(file.get_int("train.members", rc.train.members));
  rc.train.steps = static_cast<int>(file.get_int("train.steps", rc.train.steps));
  rc.train.batch_rays = static_cast<int>(file.get_int("train.batch_rays", rc.train.batch_rays));
  rc.train.lr = file.get_real("train.lr", rc.train.lr);
  rc.train.init_scale = file.get_real("train.init_scale", rc.train.init_scale);
  rc.train.spec.n_samples =
      static_cast<int>(file.get_int("train.n_samples", rc.train.spec.n_samples));
  rc.train.warm_start = file.get_bool("train.warm_start", rc.train.warm_start);

  rc.planner.n_random = static_cast<int>(file.get_int("planner.n_random", rc.planner.n_random));
  rc.planner.k_subset = static_cast<int>(file.get_int("planner.k_subset", rc.planner.k_subset));
  rc.planner.refine_iters =
      static_cast<int>(file.get_int("planner.refine_iters", rc.planner.refine_iters));
  rc.planner.step_r = file.get_real("planner.step_r", rc.planner.step_r);
  rc.planner.step_ang = file.get_real("planner.step_ang", rc.planner.step_ang);
  rc.planner.diversity_w = file.get_real("planner.diversity_w", rc.planner.diversity_w);
  rc.planner.use_fd_gradient =
      file.get_bool("planner.use_fd_gradient", rc.planner.use_fd_gradient);

  rc.cost.lambda = file.get_real("cost.lambda", rc.cost.lambda);
  rc.cost.alpha1 = file.get_real("cost.alpha1", rc.cost.alpha1);
  rc.cost.alpha2 = file.get_real("cost.alpha2", rc.cost.alpha2);
  rc.cost.alpha3 = file.get_real("cost.alpha3", rc.cost.alpha3);

  rc.grasp.n_views = static_cast<int>(file.get_int("grasp.n_views", rc.grasp.n_views));
  rc.grasp.opacity_threshold =
      file.get_real("grasp.opacity_threshold", rc.grasp.opacity_threshold);
  rc.grasp.patch_half = static_cast<int>(file.get_int("grasp.patch_half", rc.grasp.patch_half));
  rc.grasp.min_width = file.get_real("grasp.min_width", rc.grasp.min_width);
  rc.grasp.max_width = file.get_real("grasp.max_width", rc.grasp.max_width);
  rc.grasp.width_tol = file.get_real("grasp.width_tol", rc.grasp.width_tol);
  rc.grasp.max_per_view =
      static_cast<int>(file.get_int("grasp.max_per_view", rc.grasp.max_per_view));
  rc.grasp.nms_rows = static_cast<int>(file.get_int("grasp.nms_rows", rc.grasp.nms_rows));
  rc.grasp.normal_neighbors_min =
      static_cast<int>(file.get_int("grasp.normal_neighbors_min", rc.grasp.normal_neighbors_min));
  rc.grasp.normal_radius = file.get_real("grasp.normal_radius", rc.grasp.normal_radius);
  rc.grasp.max_center_dist = file.get_real("grasp.max_center_dist", rc.grasp.max_center_dist);
  rc.grasp.max_theta = file.get_real("grasp.max_theta", rc.grasp.max_theta);
  rc.grasp.min_patch_opacity =
      file.get_real("grasp.min_patch_opacity", rc.grasp.min_patch_opacity);
  rc.grasp.depth_var_floor = file.get_real("grasp.depth_var_floor", rc.grasp.depth_var_floor);
  rc.grasp.feasible_threshold =
      file.get_real("grasp.feasible_threshold", rc.grasp.feasible_threshold);

  rc.repose.opt.max_evals =
      static_cast<int>(file.get_int("repose.max_evals", rc.repose.opt.max_evals));
  rc.repose.opt.x_tol = file.get_real("repose.x_tol", rc.repose.opt.x_tol);
  rc.repose.opt.init_step = file.get_real("repose.init_step", rc.repose.opt.init_step);
  rc.repose.reject_ssd_per_pixel =
      file.get_real("repose.reject_ssd_per_pixel", rc.repose.reject_ssd_per_pixel);

  rc.flip_noise.rot_std = file.get_real("flip.rot_std", rc.flip_noise.rot_std);
  rc.flip_noise.trans_std = file.get_real("flip.trans_std", rc.flip_noise.trans_std);
  rc.flip_noise.topple_prob = file.get_real("flip.topple_prob", rc.flip_noise.topple_prob);

  return rc;
}

Config resolved_config(const RunConfig& rc) {
  Config c;
  c.set("run.mode", mode_name(rc.mode));
  c.set_u64("run.seed", rc.master_seed);
  c.set("run.out", rc.out_dir);
  c.set_real("run.budget", rc.budget_total);
  c.set_int("run.max_iterations", rc.max_iterations);
  c.set_int("run.bootstrap_views", rc.bootstrap_views);
  c.set_int("run.post_flip_views", rc.post_flip_views);
  c.set_int("run.n_validation", rc.n_validation);
  c.set_int("run.n_probes", rc.n_probes);
  c.set_int("run.n_surface_points", rc.n_surface_points);
  c.set_real("run.fscore_threshold", rc.fscore_threshold);
  c.set_real("run.mesh_iso", rc.mesh_iso);
  c.set_int("run.ssd_stride", rc.ssd_stride);
  c.set_bool("run.enable_repose", rc.enable_repose);
  c.set_bool("run.save_images", rc.save_images);
  c.set_int("run.grid_res", rc.grid_res);
  c.set_int("run.oracle_res", rc.oracle_res);
  c.set_real("run.reach_elev_min_deg", rc.reach_elev_min_rad * kDeg);

  c.set("scene.kind", scene_kind_name(rc.scene.kind));
  c.set_real("scene.density", rc.scene.density);
  c.set_real("scene.sphere_radius", rc.scene.sphere_radius);
  c.set_real("scene.box_half_x", rc.scene.box_half.x);
  c.set_real("scene.box_half_y", rc.scene.box_half.y);
  c.set_real("scene.box_half_z", rc.scene.box_half.z);
  c.set_real("scene.capsule_radius", rc.scene.capsule_radius);
  c.set_real("scene.capsule_half_len", rc.scene.capsule_half_len);
  c.set_real("scene.cavity_outer_x", rc.scene.cavity_outer_half.x);
  c.set_real("scene.cavity_outer_y", rc.scene.cavity_outer_half.y);
  c.set_real("scene.cavity_outer_z", rc.scene.cavity_outer_half.z);
  c.set_real("scene.cavity_pocket_x", rc.scene.cavity_pocket_half.x);
  c.set_real("scene.cavity_pocket_y", rc.scene.cavity_pocket_half.y);
  c.set_real("scene.cavity_pocket_z", rc.scene.cavity_pocket_half.z);

  c.set_real("workspace.half_extent", rc.bounds.hi.x);
  c.set_real("workspace.shell_r_min", rc.shell.r_min);
  c.set_real("workspace.shell_r_max", rc.shell.r_max);

  c.set_int("camera.width", rc.capture_intr.width);
  c.set_int("camera.height", rc.capture_intr.height);
  c.set_real("camera.fx", rc.capture_intr.fx);
  c.set_real("camera.fy", rc.capture_intr.fy);
  c.set_real("camera.cx", rc.capture_intr.cx);
  c.set_real("camera.cy", rc.capture_intr.cy);
  c.set_int("camera.eval_width", rc.eval_intr.width);
  c.set_int("camera.eval_height", rc.eval_intr.height);
  c.set_real("camera.eval_fx", rc.eval_intr.fx);
  c.set_real("camera.eval_fy", rc.eval_intr.fy);
  c.set_real("camera.eval_cx", rc.eval_intr.cx);
  c.set_real("camera.eval_cy", rc.eval_intr.cy);
  c.set_int("camera.n_samples", rc.render_spec.n_samples);

  c.set_int("train.members", rc.train.members);
  c.set_int("train.steps", rc.train.steps);
  c.set_int("train.batch_rays", rc.train.batch_rays);
  c.set_real("train.lr", rc.train.lr);
  c.set_real("train.init_scale", rc.train.init_scale);
  c.set_int("train.n_samples", rc.train.spec.n_samples);
  c.set_bool("train.warm_start", rc.train.warm_start);

  c.set_int("planner.n_random", rc.planner.n_random);
  c.set_int("planner.k_subset", rc.planner.k_subset);
  c.set_int("planner.refine_iters", rc.planner.refine_iters);
  c.set_real("planner.step_r", rc.planner.step_r);
  c.set_real("planner.step_ang", rc.planner.step_ang);
  c.set_real("planner.diversity_w", rc.planner.diversity_w);
  c.set_bool("planner.use_fd_gradient", rc.planner.use_fd_gradient);

  c.set_real("cost.lambda", rc.cost.lambda);
  c.set_real("cost.alpha1", rc.cost.alpha1);
  c.set_real("cost.alpha2", rc.cost.alpha2);
  c.set_real("cost.alpha3", rc.cost.alpha3);

  c.set_int("grasp.n_views", rc.grasp.n_views);
  c.set_real("grasp.opacity_threshold", rc.grasp.opacity_threshold);
  c.set_int("grasp.patch_half", rc.grasp.patch_half);
  c.set_real("grasp.min_width", rc.grasp.min_width);
  c.set_real("grasp.max_width", rc.grasp.max_width);
  c.set_real("grasp.width_tol", rc.grasp.width_tol);
  c.set_int("grasp.max_per_view", rc.grasp.max_per_view);
  c.set_int("grasp.nms_rows", rc.grasp.nms_rows);
  c.set_int("grasp.normal_neighbors_min", rc.grasp.normal_neighbors_min);
  c.set_real("grasp.normal_radius", rc.grasp.normal_radius);
  c.set_real("grasp.max_center_dist", rc.grasp.max_center_dist);
  c.set_real("grasp.max_theta", rc.grasp.max_theta);
  c.set_real("grasp.min_patch_opacity", rc.grasp.min_patch_opacity);
  c.set_real("grasp.depth_var_floor", rc.grasp.depth_var_floor);
  c.set_real("grasp.feasible_threshold", rc.grasp.feasible_threshold);

  c.set_int("repose.max_evals", rc.repose.opt.max_evals);
  c.set_real("repose.x_tol", rc.repose.opt.x_tol);
  c.set_real("repose.init_step", rc.repose.opt.init_step);
  c.set_real("repose.reject_ssd_per_pixel", rc.repose.reject_ssd_per_pixel);

  c.set_real("flip.rot_std", rc.flip_noise.rot_std);
  c.set_real("flip.trans_std", rc.flip_noise.trans_std);
  c.set_real("flip.topple_prob", rc.flip_noise.topple_prob);
  return c;
}

bool pose_reachable(const Pose& pose, const ShellSpec& shell, double elev_min_rad) {
  const Vec3 d = pose.r - shell.center;
  const double r = d.norm();
  if (r < shell.r_min - 1e-9 || r > shell.r_max + 1e-9) return false;
  const double el = std::asin(std::clamp(d.z / std::max(r, 1e-12), -1.0, 1.0));
  return el >= elev_min_rad - 1e-12;
}

Pose flip_command(const GraspCandidate& grasp, const Vec3& model_centroid,
                  const Pose& model_to_world) {
  Vec3 axis = model_to_world.rotate_dir(grasp.closing_axis);
  axis.z = 0.0;  // flips happen about a horizontal axis
  if (axis.norm() < 1e-9) axis = {1, 0, 0};
  axis = axis.normalized();
  const Vec3 pivot = model_to_world.apply(model_centroid);
  const Quat q = Quat::axis_angle(axis, kPi);
  return Pose{pivot - q.rotate(pivot), q};
}

double pooled_psnr(const Ensemble& ensemble, const std::vector<ViewSample>& references,
                   const SampleSpec& spec) {
  if (references.empty()) throw DegenerateInput("pooled_psnr needs at least one view");
  std::vector<Vec3> test, ref;
  for (const ViewSample& view : references) {
    const RenderOutput render = render_mean(ensemble, view.pose, view.intr, spec);
    test.insert(test.end(), render.color.begin(), render.color.end());
    ref.insert(ref.end(), view.image.begin(), view.image.end());
  }
  return psnr(test, ref);
}

namespace {

struct FlipRecord {
  int iteration = 0;
  bool rejected = false;
  double rot_err_deg = 0.0;
  double trans_err_m = 0.0;
  double ssd_per_pixel = 0.0;
  int winner = -1;
  bool retried = false;
};

// Everything the loop mutates, bundled so the per-mode policies stay small.
struct LoopState {
  RunConfig cfg;
  fs::path dir;
  OracleWorld world;
  Ensemble ensemble;
  std::vector<ViewSample> dataset;        // poses in the model frame
  std::vector<Pose> dataset_world_poses;  // matching world-frame capture poses
  Pose e_hat;                             // estimated model -> world
  Pose current_pose;                      // world frame
  Budget budget;
  TruthAudit audit;
  TrainReport last_report;
  int captures_written = 0;
  int flips = 0;
  ordered_json capture_index = ordered_json::array();
  ordered_json grasp_records = ordered_json::array();
  std::vector<FlipRecord> flip_records;
  std::vector<std::pair<int, std::vector<TraceRow>>> planner_traces;

  LoopState(const RunConfig& cfg_)
      : cfg(cfg_),
        dir(cfg_.out_dir),
        world(cfg_.scene, cfg_.bounds, cfg_.oracle_res),
        budget{cfg_.budget_total, 0.0} {}
};

void add_capture(LoopState& st, const Pose& world_pose) {
  const ViewSample raw = st.world.capture(world_pose, st.cfg.capture_intr,
                                          st.cfg.render_spec);
  ViewSample fused = raw;
  fused.pose = st.e_hat.inverse().compose(world_pose);
  st.dataset.push_back(fused);
  st.dataset_world_poses.push_back(world_pose);

  char name[32];
  std::snprintf(name, sizeof(name), "cap_%03d.png", st.captures_written);
  if (st.cfg.save_images) write_view_png((st.dir / "captures" / name).string(), raw);
  ordered_json entry;
  entry["index"] = st.captures_written;
  entry["file"] = std::string("captures/") + name;
  entry["world_pose"] = pose_json(world_pose);
  entry["model_pose"] = pose_json(fused.pose);
  st.capture_index.push_back(entry);
  ++st.captures_written;
}

// Post-flip captures are re-fused later, once the recovered delta is known;
// this returns the raw captures alongside their world poses.
std::vector<ViewSample> capture_raw(LoopState& st, const std::vector<Pose>& world_poses) {
  std::vector<ViewSample> views;
  for (const Pose& p : world_poses) {
    views.push_back(st.world.capture(p, st.cfg.capture_intr, st.cfg.render_spec));
    views.back().pose = p;  // world pose; caller re-maps
    char name[32];
    std::snprintf(name, sizeof(name), "cap_%03d.png", st.captures_written);
    if (st.cfg.save_images) {
      write_view_png((st.dir / "captures" / name).string(), views.back());
    }
    ordered_json entry;
    entry["index"] = st.captures_written;
    entry["file"] = std::string("captures/") + name;
    entry["world_pose"] = pose_json(p);
    st.capture_index.push_back(entry);
    ++st.captures_written;
  }
  return views;
}

void refit(LoopState& st) {
  if (!st.cfg.train.warm_start || st.ensemble.members.empty()) {
    st.ensemble = init_ensemble(st.cfg.train, st.cfg.grid_res, st.cfg.grid_res,
                                st.cfg.grid_res, st.cfg.bounds,
                                Rng::mix(st.cfg.master_seed, kSeedTrain));
  }
  st.last_report = fit(st.ensemble, st.dataset);
}

struct IterationAssets {
  NormalizationContext norm;
  std::optional<ScoredGrasp> grasp;
  bool feasible = false;
  int n_candidates = 0;
  int n_pruned = 0;
};

IterationAssets build_assets(LoopState& st, int iteration, bool want_grasp) {
  IterationAssets a;
  const Pose model_frame = st.e_hat.inverse();
  ShellSpec model_shell = st.cfg.shell;
  model_shell.center = model_frame.apply(st.cfg.shell.center);
  a.norm = build_normalization(st.ensemble, st.cfg.eval_intr, st.cfg.render_spec,
                               model_shell, st.cfg.n_probes,
                               Rng::mix(st.cfg.master_seed, kSeedProbes));
  if (want_grasp) {
    try {
      const CandidateSet set = generate_candidates(st.ensemble, st.cfg.capture_intr,
                                                   st.cfg.render_spec, model_shell,
                                                   st.cfg.grasp);
      const std::vector<GraspCandidate> pruned = prune_candidates(set, st.cfg.grasp);
      a.n_candidates = static_cast<int>(set.candidates.size());
      a.n_pruned = static_cast<int>(pruned.size());
      a.grasp = score_and_select(st.ensemble, pruned, st.cfg.capture_intr,
                                 st.cfg.render_spec, st.cfg.grasp);
      a.feasible = a.grasp && grasp_feasible(a.grasp->score, st.cfg.grasp);
    } catch (const EmptyModel&) {
      // Nothing opaque to grasp yet; feasibility stays false.
    }
  }
  ordered_json rec;
  rec["iteration"] = iteration;
  rec["candidates"] = a.n_candidates;
  rec["pruned"] = a.n_pruned;
  if (a.grasp) {
    ordered_json g;
    g["score"] = a.grasp->score.total;
    g["theta"] = a.grasp->score.theta;
    g["depth_variance"] = a.grasp->score.depth_variance;
    g["width"] = a.grasp->candidate.width;
    g["view_index"] = a.grasp->candidate.view_index;
    g["gripper_pose"] = pose_json(a.grasp->candidate.gripper_pose);
    rec["best"] = g;
  } else {
    rec["best"] = nullptr;
  }
  rec["feasible"] = a.feasible;
  st.grasp_records.push_back(rec);
  return a;
}

// Spread the post-flip captures (and the rejection-retry extra) around the
// primary view's azimuth at its elevation and radius.
std::vector<Pose> post_flip_poses(const LoopState& st, const Pose& primary, int count) {
  double az, el, r;
  shell_coords(st.cfg.shell, primary, &az, &el, &r);
  std::vector<Pose> poses{primary};
  for (int i = 1; i < count; ++i) {
    poses.push_back(shell_pose(st.cfg.shell, az + 2.0 * kPi * i / count, el, r));
  }
  return poses;
}

struct FlipExecution {
  double rot_err_deg = 0.0;
  double trans_err_m = 0.0;
  bool rejected = false;
  bool aborted = false;  // actuation refused (would leave the workspace)
};

FlipExecution execute_flip_action(LoopState& st, int iteration, const ScoredGrasp& grasp,
                                  const Pose& post_view) {
  FlipExecution out;
  const Pose e_old = st.e_hat;
  const Vec3 centroid = density_centroid(st.ensemble);
  const Pose cmd = flip_command(grasp.candidate, centroid, e_old);

  FlipOutcome outcome;
  try {
    outcome = st.world.execute_flip(
        cmd, st.cfg.flip_noise,
        Rng::mix(st.cfg.master_seed, Rng::mix(kSeedFlip, st.flips + 1)));
  } catch (const DegenerateInput&) {
    // A wildly wrong model can command a flip that leaves the workspace; the
    // actuator refuses, the budget is already spent, nothing moves.
    out.aborted = true;
    return out;
  }
  ++st.flips;

  std::vector<Pose> world_poses = post_flip_poses(st, post_view, st.cfg.post_flip_views);
  std::vector<ViewSample> raw = capture_raw(st, world_poses);

  FlipRecord rec;
  rec.iteration = iteration;
  const Pose prior = e_old.inverse().compose(cmd).compose(e_old);
  Pose delta_model;  // applied on top of e_old when fusing

  if (!st.cfg.enable_repose) {
    // Ablation: fuse as if the object had not moved at all.
    delta_model = Pose::identity();
  } else {
    const auto premap = [&](const std::vector<ViewSample>& views) {
      std::vector<ViewSample> mapped = views;
      for (ViewSample& v : mapped) v.pose = e_old.inverse().compose(v.pose);
      return mapped;
    };
    SsdObjective objective(&st.ensemble, premap(raw), prior, centroid, st.cfg.render_spec,
                           0.05, st.cfg.ssd_stride);
    ReacquireResult res = reacquire_pose(objective, st.cfg.repose);
    if (res.rejected) {
      rec.retried = true;
      double az, el, r;
      shell_coords(st.cfg.shell, post_view, &az, &el, &r);
      const Pose extra = shell_pose(st.cfg.shell, az + kPi / 3.0, el, r);
      std::vector<ViewSample> more = capture_raw(st, {extra});
      raw.push_back(more[0]);
      world_poses.push_back(extra);
      SsdObjective retry(&st.ensemble, premap(raw), prior, centroid, st.cfg.render_spec,
                         0.05, st.cfg.ssd_stride);
      res = reacquire_pose(retry, st.cfg.repose);
    }
    rec.ssd_per_pixel = res.ssd_per_pixel;
    rec.winner = res.winner;
    if (res.rejected) {
      rec.rejected = true;
      out.rejected = true;
      delta_model = prior;  // trust the commanded flip, fuse nothing
    } else {
      delta_model = res.recovered;
    }
  }

  st.e_hat = e_old.compose(delta_model);
  const bool fuse = !st.cfg.enable_repose || !rec.rejected;
  if (fuse) {
    const Pose to_model = st.e_hat.inverse();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      ViewSample fused = raw[i];
      fused.pose = to_model.compose(world_poses[i]);
      st.dataset.push_back(fused);
      st.dataset_world_poses.push_back(world_poses[i]);
    }
  }

  {
    // Truth is only consulted for logging, inside an audited metrics scope.
    TruthAudit::MetricsScope scope(st.audit);
    const Pose& true_delta = outcome.true_delta.reveal(st.audit);
    const Pose est_delta = st.e_hat.compose(e_old.inverse());
    rec.rot_err_deg = rotation_between(est_delta, true_delta) * kDeg;
    rec.trans_err_m = translation_between(est_delta, true_delta);
  }
  out.rot_err_deg = rec.rot_err_deg;
  out.trans_err_m = rec.trans_err_m;
  st.flip_records.push_back(rec);
  st.current_pose = world_poses.back();
  return out;
}

void write_iterations_csv(const fs::path& path, const std::vector<IterationLog>& logs) {
  std::ostringstream out;
  out << "iteration,action,gamma,utility,cumulative_cost,psnr,fscore,flipped,"
         "repose_rejected,repose_rot_err_deg,repose_trans_err_m\n";
  for (const IterationLog& log : logs) {
    out << log.iteration << "," << log.action << "," << fmtg(log.gamma) << ","
        << fmtg(log.utility) << "," << fmtg(log.cumulative_cost) << "," << fmtg(log.psnr)
        << "," << fmtg(log.fscore) << "," << (log.flipped ? 1 : 0) << ","
        << (log.repose_rejected ? 1 : 0) << "," << fmtg(log.repose_rot_err_deg) << ","
        << fmtg(log.repose_trans_err_m) << "\n";
  }
  write_text(path.string(), out.str());
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("output directory not set");
  if (cfg.budget_total < 0.0) throw ConfigError("budget must be nonnegative");
  if (cfg.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  if (cfg.bootstrap_views < 1) throw ConfigError("need at least one bootstrap view");
  cfg.capture_intr.validate();
  cfg.eval_intr.validate();

  LoopState st(cfg);
  fs::create_directories(st.dir / "captures");
  if (cfg.save_images) fs::create_directories(st.dir / "renders");
  write_text((st.dir / "config.txt").string(), resolved_config(cfg).dump());

  // Ground-truth references, frozen before any interaction so the model frame
  // (the pre-flip world) is also the reference frame.
  const std::vector<ViewSample> val_full =
      st.world.validation_set(cfg.n_validation, Rng::mix(cfg.master_seed, kSeedValidationFull),
                              cfg.shell, cfg.capture_intr, cfg.render_spec, 0);
  const std::vector<ViewSample> val_bottom =
      st.world.validation_set(cfg.n_validation,
                              Rng::mix(cfg.master_seed, kSeedValidationBottom), cfg.shell,
                              cfg.capture_intr, cfg.render_spec, -1);
  const std::vector<Vec3> gt_points =
      st.world.surface_points(cfg.n_surface_points, Rng::mix(cfg.master_seed, kSeedSurface));

  const double mid_r = 0.5 * (cfg.shell.r_min + cfg.shell.r_max);
  const double boot_el = 35.0 / kDeg;
  for (int i = 0; i < cfg.bootstrap_views; ++i) {
    const Pose p = shell_pose(cfg.shell, 2.0 * kPi * i / cfg.bootstrap_views, boot_el, mid_r);
    add_capture(st, p);
    st.current_pose = p;
  }

  const auto reachable = [&cfg](const Pose& p) {
    return pose_reachable(p, cfg.shell, cfg.reach_elev_min_rad);
  };

  const double fs_threshold = cfg.fscore_threshold > 0.0
                                  ? cfg.fscore_threshold
                                  : cfg.bounds.extent().x / (cfg.grid_res - 1);

  // Surface quality against the sampled ground-truth shell. The auto iso level
  // tracks the trained field's own peak rather than any fixed constant; a
  // partially converged model never reaches the analytic density, and a fixed
  // level above its peak would always produce an empty mesh.
  const auto surface_mesh = [&](const Ensemble& ens) {
    const std::vector<double> field = mean_density_field(ens);
    double iso = cfg.mesh_iso;
    if (iso <= 0.0) {
      double peak = 0.0;
      for (double d : field) peak = std::max(peak, d);
      iso = 0.5 * peak;
    }
    if (iso <= 0.0) return TriMesh{};
    return marching_cubes(field, cfg.grid_res, cfg.grid_res, cfg.grid_res, cfg.bounds, iso);
  };
  const auto surface_fscore = [&](const Ensemble& ens) {
    const TriMesh mesh = surface_mesh(ens);
    return mesh.vertices.empty() ? 0.0
                                 : fscore(mesh.vertices, gt_points, fs_threshold).fscore;
  };

  RunResult result;
  result.mode = cfg.mode;
  result.run_dir = cfg.out_dir;

  const bool planning_mode = cfg.mode == RunMode::Ours || cfg.mode == RunMode::OursNoFlip;
  const bool flips_allowed = cfg.mode != RunMode::OursNoFlip;
  bool baseline_flipped = false;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    refit(st);

    IterationLog log;
    log.iteration = iter;
    log.psnr = pooled_psnr(st.ensemble, val_full, cfg.render_spec);
    log.fscore = surface_fscore(st.ensemble);
    log.repose_rot_err_deg = std::numeric_limits<double>::quiet_NaN();
    log.repose_trans_err_m = std::numeric_limits<double>::quiet_NaN();

    const bool want_grasp =
        flips_allowed && !(planning_mode ? false : baseline_flipped) &&
        st.budget.remaining() + 1e-12 >= cfg.cost.alpha3;
    IterationAssets assets = build_assets(st, iter, want_grasp);

    const Pose model_frame = st.e_hat.inverse();
    EvalContext ctx{&st.ensemble, &assets.norm, cfg.eval_intr, cfg.render_spec, model_frame};

    Action action;
    std::optional<Pose> flip_post_view;
    std::optional<ScoredGrasp> flip_grasp;

    if (planning_mode) {
      PlannerConfig pc = cfg.planner;
      pc.seed = Rng::mix(Rng::mix(cfg.master_seed, kSeedPlanner), iter);
      pc.flip_enabled = flips_allowed;
      std::optional<EvalContext> flipped_ctx;
      if (flips_allowed && assets.feasible) {
        const Vec3 centroid = density_centroid(st.ensemble);
        const Pose cmd = flip_command(assets.grasp->candidate, centroid, st.e_hat);
        flipped_ctx = EvalContext{&st.ensemble, &assets.norm, cfg.eval_intr,
                                  cfg.render_spec, cmd.compose(st.e_hat).inverse()};
      }
      Plan plan = plan_with_flip(ctx, flipped_ctx, st.current_pose, cfg.shell, cfg.cost,
                                 pc, reachable);
      st.planner_traces.emplace_back(iter, std::move(plan.trace));
      action = plan.action;
      flip_post_view = plan.post_flip_view;
      if (action.kind == ActionKind::Flip) flip_grasp = assets.grasp;
    } else {
      Rng rng(Rng::mix(Rng::mix(cfg.master_seed, kSeedBaseline), iter));
      Pose view;
      if (cfg.mode == RunMode::RandomView) {
        bool found = false;
        for (int tries = 0; tries < 50 * cfg.planner.n_random && !found; ++tries) {
          view = sample_shell_pose(rng, cfg.shell);
          found = reachable(view);
        }
        if (!found) throw NoReachablePose("no reachable random view");
      } else {
        double best_score = -1.0;
        for (int i = 0; i < cfg.planner.n_random; ++i) {
          const Pose p = sample_shell_pose(rng, cfg.shell);
          if (!reachable(p)) continue;
          double score = 0.0;
          for (const Pose& mp : st.dataset_world_poses) {
            score += (p.r - mp.r).norm() +
                     cfg.planner.diversity_w * (1.0 - quat_distance(p.q, mp.q));
          }
          if (score > best_score) {
            best_score = score;
            view = p;
          }
        }
        if (best_score < 0.0) throw NoReachablePose("no reachable candidate view");
      }
      action.view = view;
      action.utility = normalized_uncertainty(
          assets.norm, pose_uncertainty(st.ensemble, model_frame.compose(view),
                                        cfg.eval_intr, cfg.render_spec));
      if (assets.feasible && !baseline_flipped) {
        action.kind = ActionKind::Flip;
        action.cost = cfg.cost.alpha3 +
                      action_cost(ActionKind::Move, st.current_pose, view, cfg.cost);
        flip_post_view = view;
        flip_grasp = assets.grasp;
      } else {
        action.kind = ActionKind::Move;
        action.cost = action_cost(ActionKind::Move, st.current_pose, view, cfg.cost);
      }
      action.loss = cfg.cost.lambda * action.cost - action.utility;
    }

    try {
      st.budget.charge(action.cost);
    } catch (const BudgetExhausted&) {
      result.budget_exhausted_early = true;
      break;
    }

    log.gamma = action.cost;
    log.utility = action.utility;
    log.cumulative_cost = st.budget.spent;

    if (action.kind == ActionKind::Flip) {
      log.action = "flip";
      log.flipped = true;
      if (cfg.mode != RunMode::OursNoFlip) baseline_flipped = true;
      const FlipExecution fx =
          execute_flip_action(st, iter, *flip_grasp, *flip_post_view);
      if (fx.aborted) {
        log.action = "flip-aborted";
        log.flipped = false;
      } else {
        log.repose_rejected = fx.rejected;
        log.repose_rot_err_deg = fx.rot_err_deg;
        log.repose_trans_err_m = fx.trans_err_m;
      }
    } else {
      log.action = "move";
      add_capture(st, action.view);
      st.current_pose = action.view;
    }

    if (cfg.save_images) {
      const UncertaintyMap umap = pose_uncertainty_map(
          st.ensemble, model_frame.compose(action.view), cfg.eval_intr, cfg.render_spec);
      char name[48], sidecar[48];
      std::snprintf(name, sizeof(name), "renders/unc_iter_%03d.png", iter);
      std::snprintf(sidecar, sizeof(sidecar), "renders/unc_iter_%03d.json", iter);
      write_uncertainty_png(umap, (st.dir / name).string(), (st.dir / sidecar).string());
    }

    result.logs.push_back(log);
  }

  // Final fit so the last captures contribute to the reported model.
  refit(st);
  result.final_psnr = pooled_psnr(st.ensemble, val_full, cfg.render_spec);
  result.final_psnr_bottom = pooled_psnr(st.ensemble, val_bottom, cfg.render_spec);
  result.final_fscore = surface_fscore(st.ensemble);
  result.spent = st.budget.spent;
  result.flips = st.flips;
  result.denied_truth_reads = st.audit.denied_reads();
  result.exit_code = result.budget_exhausted_early ? 3 : 0;

  // The model, the mesh, and every CSV/JSON log are part of the run record
  // regardless of save_images; the flag only gates PNG output.
  write_stl(surface_mesh(st.ensemble), (st.dir / "mesh.stl").string());
  save_ensemble(st.ensemble, (st.dir / "ensemble").string());
  if (cfg.save_images) {
    for (int k = 0; k < static_cast<int>(val_full.size()); ++k) {
      const RenderOutput render =
          render_mean(st.ensemble, val_full[k].pose, val_full[k].intr, cfg.render_spec);
      char name[48];
      std::snprintf(name, sizeof(name), "renders/val_%02d_render.png", k);
      write_render_png((st.dir / name).string(), render);
      std::snprintf(name, sizeof(name), "renders/val_%02d_ref.png", k);
      write_view_png((st.dir / name).string(), val_full[k]);
    }
  }

  st.last_report.write_csv((st.dir / "train_log.csv").string());
  write_iterations_csv(st.dir / "iterations.csv", result.logs);
  if (planning_mode) {
    write_planner_trace_csv((st.dir / "planner_trace.csv").string(), st.planner_traces);
  }
  write_text((st.dir / "grasps.json").string(), st.grasp_records.dump(2) + "\n");
  write_text((st.dir / "captures" / "poses.json").string(),
             st.capture_index.dump(2) + "\n");

  ordered_json summary;
  summary["mode"] = mode_name(cfg.mode);
  summary["master_seed"] = cfg.master_seed;
  summary["budget_total"] = cfg.budget_total;
  summary["budget_spent"] = st.budget.spent;
  summary["budget_exhausted_early"] = result.budget_exhausted_early;
  summary["iterations"] = static_cast<int>(result.logs.size());
  summary["captures"] = st.captures_written;
  summary["flips"] = st.flips;
  ordered_json fin;
  fin["psnr"] = result.final_psnr;
  fin["psnr_bottom"] = result.final_psnr_bottom;
  fin["fscore"] = result.final_fscore;
  summary["final"] = fin;
  ordered_json reposes = ordered_json::array();
  for (const FlipRecord& fr : st.flip_records) {
    ordered_json r;
    r["iteration"] = fr.iteration;
    r["rejected"] = fr.rejected;
    r["retried"] = fr.retried;
    r["rot_err_deg"] = fr.rot_err_deg;
    r["trans_err_m"] = fr.trans_err_m;
    r["ssd_per_pixel"] = fr.ssd_per_pixel;
    r["winner"] = fr.winner;
    reposes.push_back(r);
  }
  summary["repose"] = reposes;
  summary["denied_truth_reads"] = st.audit.denied_reads();
  write_text((st.dir / "summary.json").string(), summary.dump(2) + "\n");

  return result;
}

namespace {

struct LoadedRun {
  std::string label;
  std::string mode;
  std::uint64_t seed = 0;
  double spent = 0.0;
  double final_psnr = 0.0;
  double final_psnr_bottom = 0.0;
  double final_fscore = 0.0;
  std::vector<int> iterations;
  std::vector<double> psnr;
  std::vector<double> fscore;
};

LoadedRun load_run(const std::string& dir) {
  const fs::path p(dir);
  if (!fs::exists(p / "summary.json") || !fs::exists(p / "iterations.csv")) {
    throw IoError("not a run directory (missing summary.json/iterations.csv): " + dir);
  }
  LoadedRun run;
  {
    fs::path norm = p;
    norm.make_preferred();
    std::string base = norm.filename().string();
    if (base.empty()) base = norm.parent_path().filename().string();
    run.label = base.empty() ? dir : base;
  }
  std::ifstream sj(p / "summary.json");
  const ordered_json summary = ordered_json::parse(sj);
  run.mode = summary.at("mode").get<std::string>();
  run.seed = summary.at("master_seed").get<std::uint64_t>();
  run.spent = summary.at("budget_spent").get<double>();
  run.final_psnr = summary.at("final").at("psnr").get<double>();
  run.final_psnr_bottom = summary.at("final").at("psnr_bottom").get<double>();
  run.final_fscore = summary.at("final").at("fscore").get<double>();

  std::ifstream in(p / "iterations.csv");
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw IoError("iterations.csv missing column " + name);
    return static_cast<int>(it - cols.begin());
  };
  const int c_iter = col("iteration"), c_psnr = col("psnr"), c_fscore = col("fscore");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    run.iterations.push_back(std::stoi(fields.at(c_iter)));
    run.psnr.push_back(std::stod(fields.at(c_psnr)));
    run.fscore.push_back(std::stod(fields.at(c_fscore)));
  }
  return run;
}

const std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
    {{31, 119, 180}},
    {{255, 127, 14}},
    {{44, 160, 44}},
    {{214, 39, 40}},
    {{148, 103, 189}},
    {{140, 86, 75}},
    {{227, 119, 194}},
    {{127, 127, 127}},
}};

}  // namespace

int compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two runs");
  std::vector<LoadedRun> runs;
  for (const std::string& dir : run_dirs) runs.push_back(load_run(dir));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string base = runs[i].label;
    int suffix = 1;
    const auto taken = [&](const std::string& name) {
      for (std::size_t j = 0; j < i; ++j) {
        if (runs[j].label == name) return true;
      }
      return false;
    };
    while (taken(runs[i].label)) runs[i].label = base + "_" + std::to_string(++suffix);
  }
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  int max_iter = -1;
  for (const LoadedRun& run : runs) {
    for (int it : run.iterations) max_iter = std::max(max_iter, it);
  }

  {
    std::ostringstream csv;
    csv << "iteration";
    for (const LoadedRun& run : runs) {
      csv << ",psnr_" << run.label << ",fscore_" << run.label;
    }
    csv << "\n";
    for (int it = 0; it <= max_iter; ++it) {
      csv << it;
      for (const LoadedRun& run : runs) {
        const auto pos = std::find(run.iterations.begin(), run.iterations.end(), it);
        if (pos == run.iterations.end()) {
          csv << ",nan,nan";
        } else {
          const std::size_t i = pos - run.iterations.begin();
          csv << "," << fmtg(run.psnr[i]) << "," << fmtg(run.fscore[i]);
        }
      }
      csv << "\n";
    }
    write_text((out / "per_iteration.csv").string(), csv.str());
  }

  {
    std::ostringstream csv;
    csv << "run,mode,master_seed,budget_spent,final_psnr,final_psnr_bottom,final_fscore,"
           "delta_psnr_vs_first,delta_fscore_vs_first\n";
    for (const LoadedRun& run : runs) {
      csv << run.label << "," << run.mode << "," << run.seed << "," << fmtg(run.spent)
          << "," << fmtg(run.final_psnr) << "," << fmtg(run.final_psnr_bottom) << ","
          << fmtg(run.final_fscore) << "," << fmtg(run.final_psnr - runs[0].final_psnr)
          << "," << fmtg(run.final_fscore - runs[0].final_fscore) << "\n";
    }
    write_text((out / "final.csv").string(), csv.str());
  }

  std::vector<PlotSeries> psnr_series, fscore_series;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    PlotSeries ps;
    ps.label = runs[i].label;
    ps.color = kPalette[i % kPalette.size()];
    for (std::size_t k = 0; k < runs[i].iterations.size(); ++k) {
      ps.xs.push_back(runs[i].iterations[k]);
      ps.ys.push_back(runs[i].psnr[k]);
    }
    PlotSeries fsr = ps;
    fsr.ys.clear();
    for (double v : runs[i].fscore) fsr.ys.push_back(v);
    psnr_series.push_back(std::move(ps));
    fscore_series.push_back(std::move(fsr));
  }
  write_line_chart((out / "psnr.png").string(), "PSNR by iteration", "iteration", "dB",
                   psnr_series);
  write_line_chart((out / "fscore.png").string(), "F-score by iteration", "iteration",
                   "F", fscore_series);
  return static_cast<int>(runs.size());
}

std::vector<ReposeBenchTrial> repose_bench(const ReposeBenchConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be positive");
  if (cfg.view_counts.empty()) throw ConfigError("view_counts must not be empty");
  cfg.intr.validate();
  int max_views = 1;
  for (int vc : cfg.view_counts) {
    if (vc < 1) throw ConfigError("view counts must be positive");
    max_views = std::max(max_views, vc);
  }

  // The model is the pre-move scene's own bake, wrapped as a one-member
  // ensemble so recovery quality is isolated from training error.
  OracleWorld model_world(cfg.scene, cfg.bounds, cfg.grid_res);
  Ensemble model;
  model.config.members = 1;
  model.base_seed = cfg.seed;
  model.members.push_back(model_world.ground_truth());

  const Vec3 pivot = density_centroid(model);
  const Quat q_nom = Quat::axis_angle({1, 0, 0}, kPi);
  const Pose f_nom{pivot - q_nom.rotate(pivot), q_nom};

  const double el = 35.0 / kDeg;
  const double ring_r = 0.5 * (cfg.shell.r_min + cfg.shell.r_max);

  std::vector<ReposeBenchTrial> rows;
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng(Rng::mix(cfg.seed, 0x7ebe5e + static_cast<std::uint64_t>(t)));
    Vec3 axis;
    do {
      axis = {rng.normal(), rng.normal(), rng.normal()};
    } while (axis.norm() < 1e-6);
    axis = axis.normalized();
    const double angle = rng.uniform(0.0, cfg.max_rot_deg / kDeg);
    Vec3 dt;
    do {
      dt = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    } while (dt.norm2() > 1.0);
    dt = dt * cfg.max_trans_m;
    // Perturbation composed so the prior-to-true gap is exactly (angle, |dt|).
    const Pose delta_true{f_nom.r + dt, Quat::axis_angle(axis, angle) * f_nom.q};

    SceneSpec moved = cfg.scene;
    moved.object_pose = delta_true.compose(cfg.scene.object_pose);
    OracleWorld world(moved, cfg.bounds, cfg.oracle_res);

    const double az0 = rng.uniform(0.0, 2.0 * kPi);
    std::vector<ViewSample> caps;
    for (int k = 0; k < max_views; ++k) {
      const Pose p = shell_pose(cfg.shell, az0 + 2.0 * kPi * k / max_views, el, ring_r);
      caps.push_back(world.capture(p, cfg.intr, cfg.spec));
      caps.back().pose = p;
    }

    for (int vc : cfg.view_counts) {
      const std::vector<ViewSample> views(caps.begin(), caps.begin() + vc);
      SsdObjective objective(&model, views, f_nom, pivot, cfg.spec, cfg.trans_scale,
                             cfg.ssd_stride);
      const ReacquireResult res = reacquire_pose(objective, cfg.reacquire);

      ReposeBenchTrial row;
      row.trial = t;
      row.n_views = vc;
      row.prior_rot_err_deg = angle * kDeg;
      row.prior_trans_err_m = dt.norm();
      const Pose& est = res.rejected ? f_nom : res.recovered;
      row.rot_err_deg = rotation_between(est, delta_true) * kDeg;
      row.trans_err_m = translation_between(est, delta_true);
      row.ssd_per_pixel = res.ssd_per_pixel;
      row.rejected = res.rejected;
      row.success = !res.rejected && row.rot_err_deg <= cfg.success_rot_deg &&
                    row.trans_err_m <= cfg.success_trans_m;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_repose_bench_csv(const std::string& path,
                            const std::vector<ReposeBenchTrial>& rows) {
  std::ostringstream out;
  out << "trial,n_views,prior_rot_err_deg,prior_trans_err_m,rot_err_deg,trans_err_m,"
         "ssd_per_pixel,rejected,success\n";
  for (const ReposeBenchTrial& row : rows) {
    out << row.trial << "," << row.n_views << "," << fmtg(row.prior_rot_err_deg) << ","
        << fmtg(row.prior_trans_err_m) << "," << fmtg(row.rot_err_deg) << ","
        << fmtg(row.trans_err_m) << "," << fmtg(row.ssd_per_pixel) << ","
        << (row.rejected ? 1 : 0) << "," << (row.success ? 1 : 0) << "\n";
  }
  write_text(path, out.str());
}

}  // namespace voxcap
