// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxcap/radiance_field.hpp"

namespace voxcap {

// One posed RGB capture. The mask marks object pixels (opacity > 0.5 at
// capture time) and is used by masked metrics, not by training: background
// pixels supervise free space exactly like any other pixel.
struct ViewSample {
  std::vector<Vec3> image;
  std::vector<std::uint8_t> mask;
  Pose pose;
  CameraIntrinsics intr;
};

struct TrainConfig {
  int members = 5;
  int steps = 320;
  int batch_rays = 1024;
  double lr = 0.15;
  double init_scale = 0.1;
  SampleSpec spec{32, true, 0};
  // Consumed by the capture loop: false retrains every iteration from a fresh
  // init, true fine-tunes the previous iteration's parameters.
  bool warm_start = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainReport {
  std::vector<std::vector<double>> loss;  // [member][step]

  int members() const { return static_cast<int>(loss.size()); }
  double final_mean_loss() const;
  void write_csv(const std::string& path) const;
};

struct Ensemble {
  TrainConfig config;
  std::uint64_t base_seed = 0;
  std::vector<RadianceGrid> members;

  int size() const { return static_cast<int>(members.size()); }
  const Aabb& bounds() const { return members.at(0).bounds(); }
};

// Member k draws its parameters uniformly from [-init_scale, init_scale]
// with seed base_seed + k, so members differ only by seed.
Ensemble init_ensemble(const TrainConfig& config, int nx, int ny, int nz,
                       const Aabb& bounds, std::uint64_t base_seed);

// Trains every member independently on the same view set (Adam on the
// photometric loss, minibatches of batch_rays pixel rays per step). Identical
// seeds and inputs give identical parameters.
TrainReport fit(Ensemble& ensemble, const std::vector<ViewSample>& views);

RayShade render_mean_ray(const Ensemble& ensemble, const Ray& ray, const SampleSpec& spec,
                         std::uint64_t pixel_stream = 0);
RenderOutput render_mean(const Ensemble& ensemble, const Pose& pose,
                         const CameraIntrinsics& intr, const SampleSpec& spec);

// Mean-density-weighted centroid of the node lattice; the model's notion of
// where the object is. Throws EmptyModel when total density is numerically 0.
Vec3 density_centroid(const Ensemble& ensemble);

// meta.json plus one grid file per member; loads back bit-exactly.
void save_ensemble(const Ensemble& ensemble, const std::string& dir);
Ensemble load_ensemble(const std::string& dir);

}  // namespace voxcap
