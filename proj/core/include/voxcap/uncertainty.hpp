// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxcap/trainer.hpp"

namespace voxcap {

// Per-pixel ensemble disagreement for one view; total is the sum over pixels.
struct UncertaintyMap {
  int width = 0, height = 0;
  std::vector<double> var;
  Pose pose;
  double total = 0.0;

  double max_value() const;
};

// Population variance of the member colors (1/M, summed over RGB):
// (1/M) sum_k ||mean - C_k||^2.
double ray_variance(const Ensemble& ensemble, const Ray& ray, const SampleSpec& spec);

UncertaintyMap pose_uncertainty_map(const Ensemble& ensemble, const Pose& pose,
                                    const CameraIntrinsics& intr, const SampleSpec& spec);

double pose_uncertainty(const Ensemble& ensemble, const Pose& pose,
                        const CameraIntrinsics& intr, const SampleSpec& spec);

// Mean pose uncertainty over probe poses drawn uniformly from the shell.
// Dividing by this mean makes uncertainties comparable across models and
// training stages regardless of their absolute disagreement scale.
struct NormalizationContext {
  double mean_uncertainty = 0.0;
  int n_probes = 0;
  std::uint64_t seed = 0;
  ShellSpec shell;
};

NormalizationContext build_normalization(const Ensemble& ensemble,
                                         const CameraIntrinsics& intr,
                                         const SampleSpec& spec, const ShellSpec& shell,
                                         int n_probes, std::uint64_t seed);

inline double normalized_uncertainty(const NormalizationContext& ctx, double raw) {
  return raw / ctx.mean_uncertainty;
}

// Occlusion-style epistemic score: sum over mask pixels of (1 - mean opacity).
// Pixels outside the mask contribute nothing.
double masked_epistemic(const Ensemble& ensemble, const Pose& pose,
                        const CameraIntrinsics& intr, const SampleSpec& spec,
                        const std::vector<std::uint8_t>& mask);

// 8-bit grayscale heatmap (scaled by the map max) plus a JSON sidecar holding
// the max, total, and pose so absolute values survive quantization.
void write_uncertainty_png(const UncertaintyMap& map, const std::string& png_path,
                           const std::string& sidecar_path);

}  // namespace voxcap
