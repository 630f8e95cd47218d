// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voxcap/harness.hpp"
#include "voxcap/image_io.hpp"
#include "voxcap/uncertainty.hpp"

namespace {

using namespace voxcap;

constexpr double kPi = 3.14159265358979323846;

Pose orbit_pose(const Vec3& center, double az_deg, double el_deg, double radius) {
  const double az = az_deg * kPi / 180.0;
  const double el = el_deg * kPi / 180.0;
  const double ce = std::cos(el);
  const Vec3 dir{ce * std::cos(az), ce * std::sin(az), std::sin(el)};
  const Vec3 up = std::abs(dir.z) > 0.999 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  return look_at(center + dir * radius, center, up);
}

struct RunArgs {
  std::string config, mode, out;
  std::uint64_t seed = 0;
};

struct CompareArgs {
  std::vector<std::string> runs;
  std::string out;
};

struct RenderArgs {
  std::string ensemble, out, uncertainty_out;
  double az = 45.0, el = 30.0, radius = 0.35;
  int width = 128, height = 128, n_samples = 64;
};

struct BenchArgs {
  std::string out, scene = "composite";
  int trials = 25;
  std::vector<int> views{1, 3};
  int grid_res = 96, oracle_res = 128;
  double max_rot_deg = 10.0, max_trans_m = 0.02;
  int stride = 2;
  std::uint64_t seed = 0;
};

int do_run(const CLI::App& cmd, const RunArgs& args) {
  Config file;
  if (!args.config.empty()) file = Config::load(args.config);
  if (cmd.count("--mode") > 0) file.set("run.mode", args.mode);
  if (cmd.count("--seed") > 0) file.set_u64("run.seed", args.seed);
  if (cmd.count("--out") > 0) file.set("run.out", args.out);
  const RunConfig rc = run_config_from(file);
  const RunResult result = run_experiment(rc);
  std::printf("run %s: mode=%s iterations=%zu spent=%.6g flips=%d psnr=%.4f "
              "psnr_bottom=%.4f fscore=%.4f%s\n",
              result.run_dir.c_str(), mode_name(result.mode), result.logs.size(),
              result.spent, result.flips, result.final_psnr, result.final_psnr_bottom,
              result.final_fscore,
              result.budget_exhausted_early ? " (budget exhausted)" : "");
  return result.exit_code;
}

int do_compare(const CompareArgs& args) {
  const int n = compare_runs(args.runs, args.out);
  std::printf("compared %d runs -> %s\n", n, args.out.c_str());
  return 0;
}

int do_render(const CLI::App& cmd, const RenderArgs& args) {
  const Ensemble ensemble = load_ensemble(args.ensemble);
  CameraIntrinsics intr;
  intr.width = args.width;
  intr.height = args.height;
  intr.fx = 1.25 * args.width;
  intr.fy = 1.25 * args.width;
  intr.cx = 0.5 * args.width;
  intr.cy = 0.5 * args.height;
  SampleSpec spec;
  spec.n_samples = args.n_samples;
  const Vec3 center = ensemble.bounds().center();
  const Pose pose = orbit_pose(center, args.az, args.el, args.radius);
  write_render_png(args.out, render_mean(ensemble, pose, intr, spec));
  std::printf("rendered %s\n", args.out.c_str());
  if (cmd.count("--uncertainty") > 0) {
    const UncertaintyMap umap = pose_uncertainty_map(ensemble, pose, intr, spec);
    write_uncertainty_png(umap, args.uncertainty_out, args.uncertainty_out + ".json");
    std::printf("uncertainty %s (total %.6g)\n", args.uncertainty_out.c_str(),
                umap.total);
  }
  return 0;
}

int do_bench(const BenchArgs& args) {
  ReposeBenchConfig cfg;
  cfg.scene.kind = parse_scene_kind(args.scene);
  cfg.trials = args.trials;
  cfg.view_counts = args.views;
  cfg.grid_res = args.grid_res;
  cfg.oracle_res = args.oracle_res;
  cfg.max_rot_deg = args.max_rot_deg;
  cfg.max_trans_m = args.max_trans_m;
  cfg.ssd_stride = args.stride;
  cfg.seed = args.seed;

  const std::vector<ReposeBenchTrial> rows = repose_bench(cfg);
  std::filesystem::create_directories(args.out);
  write_repose_bench_csv(
      (std::filesystem::path(args.out) / "repose_bench.csv").string(), rows);

  std::map<int, std::vector<const ReposeBenchTrial*>> by_views;
  for (const ReposeBenchTrial& row : rows) by_views[row.n_views].push_back(&row);
  for (const auto& [views, group] : by_views) {
    double rot = 0.0, trans = 0.0;
    int ok = 0;
    for (const ReposeBenchTrial* row : group) {
      rot += row->rot_err_deg;
      trans += row->trans_err_m;
      ok += row->success ? 1 : 0;
    }
    const double n = static_cast<double>(group.size());
    std::printf("views=%d trials=%zu mean_rot_err=%.4f deg mean_trans_err=%.5f m "
                "success=%d/%zu\n",
                views, group.size(), rot / n, trans / n, ok, group.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active object capture with a voxel ensemble"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "execute an active capture run");
  run_cmd->add_option("--config", run_args.config, "key-value config file");
  run_cmd->add_option("--mode", run_args.mode,
                      "ours | ours-no-flip | random-view | furthest-view");
  run_cmd->add_option("--seed", run_args.seed, "master seed");
  run_cmd->add_option("--out", run_args.out, "run output directory");

  CompareArgs cmp_args;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "tabulate and plot finished runs");
  cmp_cmd->add_option("--runs", cmp_args.runs, "run directories")
      ->required()
      ->expected(-2);
  cmp_cmd->add_option("--out", cmp_args.out, "comparison output directory")->required();

  RenderArgs render_args;
  CLI::App* render_cmd =
      app.add_subcommand("render", "render a saved ensemble from an orbit pose");
  render_cmd->add_option("--ensemble", render_args.ensemble, "saved ensemble directory")
      ->required();
  render_cmd->add_option("--out", render_args.out, "output PNG path")->required();
  render_cmd->add_option("--az", render_args.az, "azimuth, degrees");
  render_cmd->add_option("--el", render_args.el, "elevation, degrees");
  render_cmd->add_option("--radius", render_args.radius, "orbit radius, meters");
  render_cmd->add_option("--width", render_args.width, "image width");
  render_cmd->add_option("--height", render_args.height, "image height");
  render_cmd->add_option("--samples", render_args.n_samples, "samples per ray");
  render_cmd->add_option("--uncertainty", render_args.uncertainty_out,
                         "also write the ensemble uncertainty map to this PNG");

  BenchArgs bench_args;
  CLI::App* bench_cmd =
      app.add_subcommand("repose-bench", "standalone pose-recovery trials");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();
  bench_cmd->add_option("--scene", bench_args.scene, "sphere | box | capsule | composite");
  bench_cmd->add_option("--trials", bench_args.trials, "number of trials");
  bench_cmd->add_option("--views", bench_args.views, "view counts to evaluate");
  bench_cmd->add_option("--grid-res", bench_args.grid_res, "model bake resolution");
  bench_cmd->add_option("--oracle-res", bench_args.oracle_res, "capture bake resolution");
  bench_cmd->add_option("--max-rot-deg", bench_args.max_rot_deg, "perturbation bound");
  bench_cmd->add_option("--max-trans", bench_args.max_trans_m, "perturbation bound, m");
  bench_cmd->add_option("--stride", bench_args.stride, "pixel stride for the objective");
  bench_cmd->add_option("--seed", bench_args.seed, "bench seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(*run_cmd, run_args);
    if (cmp_cmd->parsed()) return do_compare(cmp_args);
    if (render_cmd->parsed()) return do_render(*render_cmd, render_args);
    if (bench_cmd->parsed()) return do_bench(bench_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const BudgetExhausted& e) {
    std::fprintf(stderr, "budget exhausted: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
