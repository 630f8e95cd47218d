// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxcap/config.hpp"
#include "voxcap/grasping.hpp"
#include "voxcap/oracle_sim.hpp"
#include "voxcap/planner.hpp"
#include "voxcap/repose.hpp"
#include "voxcap/trainer.hpp"

namespace voxcap {

enum class RunMode { Ours, OursNoFlip, RandomView, FurthestView };

RunMode parse_mode(const std::string& name);  // ConfigError on unknown name
const char* mode_name(RunMode mode);

// Full experiment description. Every field has a workable desk-scale default
// and a config-file key; a run directory always receives the resolved dump.
struct RunConfig {
  SceneSpec scene;
  TrainConfig train;
  PlannerConfig planner;
  CostParams cost;
  GraspConfig grasp;
  ReacquireConfig repose;
  FlipNoise flip_noise;

  Aabb bounds{{-0.16, -0.16, -0.16}, {0.16, 0.16, 0.16}};
  ShellSpec shell{{0, 0, 0}, 0.28, 0.42};
  CameraIntrinsics capture_intr{64, 64, 80.0, 80.0, 32.0, 32.0};
  CameraIntrinsics eval_intr{24, 24, 30.0, 30.0, 12.0, 12.0};
  SampleSpec render_spec{64, false, 0};  // captures, evals, metrics

  int grid_res = 64;
  int oracle_res = 128;
  double reach_elev_min_rad = 0.1745329251994330;  // 10 degrees

  RunMode mode = RunMode::Ours;
  double budget_total = 3.0;
  int max_iterations = 20;
  int bootstrap_views = 3;
  int post_flip_views = 3;
  int n_validation = 10;
  int n_probes = 16;
  int n_surface_points = 2048;
  double fscore_threshold = 0.0;  // 0 selects one voxel size
  double mesh_iso = 0.0;          // 0 selects half the scene density
  int ssd_stride = 2;
  bool enable_repose = true;
  bool save_images = true;

  std::uint64_t master_seed = 0;
  std::string out_dir;
};

RunConfig run_config_from(const Config& file);  // overrides applied onto defaults
Config resolved_config(const RunConfig& rc);

struct IterationLog {
  int iteration = 0;
  std::string action;  // "move" or "flip"
  double gamma = 0.0;
  double utility = 0.0;  // normalized uncertainty of the chosen view
  double cumulative_cost = 0.0;
  double psnr = 0.0;    // full-sphere validation, model fitted this iteration
  double fscore = 0.0;
  bool flipped = false;
  bool repose_rejected = false;
  // Simulator-truth errors of the recovered flip delta; NaN outside flips.
  double repose_rot_err_deg = 0.0;
  double repose_trans_err_m = 0.0;
};

struct RunResult {
  std::string run_dir;
  RunMode mode = RunMode::Ours;
  std::vector<IterationLog> logs;
  double final_psnr = 0.0;
  double final_psnr_bottom = 0.0;
  double final_fscore = 0.0;
  double spent = 0.0;
  int flips = 0;
  bool budget_exhausted_early = false;  // stopped by the budget, not by max_iterations
  int denied_truth_reads = 0;
  int exit_code = 0;  // 0, or 3 when budget_exhausted_early
};

// Runs the active loop (ours / ours-no-flip) or a baseline policy
// (random-view / furthest-view) per cfg.mode, writing all artifacts into
// cfg.out_dir. Identical configs produce byte-identical artifacts.
RunResult run_experiment(const RunConfig& cfg);

// Reachability standing in for a dual-arm setup: poses on the shell with
// elevation at least elev_min above the horizon.
bool pose_reachable(const Pose& pose, const ShellSpec& shell, double elev_min_rad);

// World-frame flip command for a grasp: 180 degrees about the horizontalized
// closing axis through the model centroid, both mapped by the current
// model-to-world estimate.
Pose flip_command(const GraspCandidate& grasp, const Vec3& model_centroid,
                  const Pose& model_to_world);

// One PSNR over the pooled pixels of every view (test rendered by the model).
double pooled_psnr(const Ensemble& ensemble, const std::vector<ViewSample>& references,
                   const SampleSpec& spec);

// Aligned per-iteration tables, a final table with deltas against the first
// run, and PSNR / F-score line charts. Returns the number of runs compared.
int compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir);

ObjectKind parse_scene_kind(const std::string& name);  // sphere/box/capsule/composite
const char* scene_kind_name(ObjectKind kind);

// One standalone pose-recovery trial: the object moves by a bounded random
// delta around a nominal half-turn flip, captures of the moved object are
// matched against the pre-move model, and the recovered delta is compared to
// the known one.
struct ReposeBenchTrial {
  int trial = 0;
  int n_views = 0;
  double prior_rot_err_deg = 0.0;  // perturbation magnitude, rotation
  double prior_trans_err_m = 0.0;  // perturbation magnitude, translation
  double rot_err_deg = 0.0;
  double trans_err_m = 0.0;
  double ssd_per_pixel = 0.0;
  bool rejected = false;
  bool success = false;  // not rejected and within the success thresholds
};

struct ReposeBenchConfig {
  SceneSpec scene;
  Aabb bounds{{-0.16, -0.16, -0.16}, {0.16, 0.16, 0.16}};
  ShellSpec shell{{0, 0, 0}, 0.28, 0.42};
  CameraIntrinsics intr{64, 64, 80.0, 80.0, 32.0, 32.0};
  SampleSpec spec{64, false, 0};
  int grid_res = 64;    // model bake resolution
  int oracle_res = 128; // capture bake resolution
  int trials = 25;
  std::vector<int> view_counts{1, 3};  // evaluated on shared perturbations
  double max_rot_deg = 10.0;   // perturbation bounds around the nominal flip
  double max_trans_m = 0.02;
  double success_rot_deg = 1.0;
  double success_trans_m = 0.002;
  ReacquireConfig reacquire;
  double trans_scale = 0.05;
  int ssd_stride = 2;
  std::uint64_t seed = 0;
};

// Runs cfg.trials independent trials; each perturbation is evaluated once per
// entry of cfg.view_counts, so paired comparisons across view counts see the
// same deltas. Rows are ordered trial-major, view-count-minor.
std::vector<ReposeBenchTrial> repose_bench(const ReposeBenchConfig& cfg);

void write_repose_bench_csv(const std::string& path,
                            const std::vector<ReposeBenchTrial>& rows);

}  // namespace voxcap
