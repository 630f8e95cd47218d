// SPDX-License-Identifier: Apache-2.0
// Microbenchmarks for the hot paths: quadrature rendering, gradient
// accumulation, uncertainty maps, surface extraction, and pose-delta SSD.
#include <benchmark/benchmark.h>

#include "voxcap/grasping.hpp"
#include "voxcap/metrics.hpp"
#include "voxcap/oracle_sim.hpp"
#include "voxcap/repose.hpp"
#include "voxcap/rng.hpp"
#include "voxcap/trainer.hpp"
#include "voxcap/uncertainty.hpp"

namespace {

using namespace voxcap;

const Aabb kBounds{{-0.16, -0.16, -0.16}, {0.16, 0.16, 0.16}};

RadianceGrid random_grid(int res, std::uint64_t seed) {
  RadianceGrid grid(res, res, res, kBounds);
  Rng rng(seed);
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    grid.set_density_raw(i, rng.normal(0.0, 1.0));
    for (int ch = 0; ch < 3; ++ch) grid.set_color_raw(i, ch, rng.normal(0.0, 0.5));
  }
  return grid;
}

Ensemble random_ensemble(int members, int res, std::uint64_t seed) {
  Ensemble ensemble;
  ensemble.config.members = members;
  ensemble.base_seed = seed;
  for (int m = 0; m < members; ++m) {
    ensemble.members.push_back(random_grid(res, Rng::mix(seed, m + 1)));
  }
  return ensemble;
}

CameraIntrinsics small_intr(int side) {
  CameraIntrinsics intr;
  intr.width = side;
  intr.height = side;
  intr.fx = 1.25 * side;
  intr.fy = 1.25 * side;
  intr.cx = 0.5 * side;
  intr.cy = 0.5 * side;
  return intr;
}

Pose orbit_pose() { return look_at({0.3, 0.12, 0.14}, {0, 0, 0}); }

void BM_RenderRay(benchmark::State& state) {
  const RadianceGrid grid = random_grid(32, 11);
  const Ray ray{{0.3, 0.0, 0.05}, Vec3{-1, 0, -0.15}.normalized(), 0.05, 0.6};
  SampleSpec spec;
  spec.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_ray(grid, ray, spec));
  }
}
BENCHMARK(BM_RenderRay)->Arg(32)->Arg(64)->Arg(256);

void BM_RenderImage(benchmark::State& state) {
  const RadianceGrid grid = random_grid(32, 12);
  const CameraIntrinsics intr = small_intr(static_cast<int>(state.range(0)));
  SampleSpec spec;
  spec.n_samples = 64;
  const Pose pose = orbit_pose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_image(grid, pose, intr, spec));
  }
}
BENCHMARK(BM_RenderImage)->Arg(32)->Arg(64);

void BM_PhotometricGrad(benchmark::State& state) {
  const RadianceGrid grid = random_grid(24, 13);
  const CameraIntrinsics intr = small_intr(32);
  SampleSpec spec;
  spec.n_samples = 32;
  const Pose pose = orbit_pose();
  const std::vector<Ray> rays = generate_rays(pose, intr, kBounds);
  const std::vector<Vec3> targets(rays.size(), Vec3{0.4, 0.5, 0.6});
  PhotometricGrad grad;
  for (auto _ : state) {
    backprop_photometric(grid, rays, targets, spec, grad);
    benchmark::DoNotOptimize(grad.loss);
  }
}
BENCHMARK(BM_PhotometricGrad);

void BM_PoseUncertainty(benchmark::State& state) {
  const Ensemble ensemble = random_ensemble(5, 24, 14);
  const CameraIntrinsics intr = small_intr(24);
  SampleSpec spec;
  spec.n_samples = 64;
  const Pose pose = orbit_pose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pose_uncertainty(ensemble, pose, intr, spec));
  }
}
BENCHMARK(BM_PoseUncertainty);

void BM_MarchingCubes(benchmark::State& state) {
  SceneSpec scene;
  scene.kind = ObjectKind::CompositeCavity;
  const OracleWorld world(scene, kBounds, 64);
  const std::vector<double>& field = world.ground_truth().activated_density_data();
  for (auto _ : state) {
    benchmark::DoNotOptimize(marching_cubes(field, 64, 64, 64, kBounds, 25.0));
  }
}
BENCHMARK(BM_MarchingCubes);

void BM_SsdObjective(benchmark::State& state) {
  SceneSpec scene;
  scene.kind = ObjectKind::Box;
  OracleWorld world(scene, kBounds, 64);
  Ensemble model;
  model.config.members = 1;
  model.members.push_back(world.ground_truth());
  const CameraIntrinsics intr = small_intr(48);
  SampleSpec spec;
  spec.n_samples = 64;
  std::vector<ViewSample> views{world.capture(orbit_pose(), intr, spec)};
  views[0].pose = orbit_pose();
  SsdObjective objective(&model, views, Pose::identity(), {0, 0, 0}, spec, 0.05, 2);
  const std::vector<double> x{0.01, -0.02, 0.03, 0.1, -0.1, 0.05};
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective.evaluate(x));
  }
}
BENCHMARK(BM_SsdObjective);

}  // namespace

BENCHMARK_MAIN();
