// SPDX-License-Identifier: Apache-2.0
#include "voxcap/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "voxcap/image_io.hpp"

namespace voxcap {

double UncertaintyMap::max_value() const {
  double m = 0.0;
  for (double v : var) m = std::max(m, v);
  return m;
}

double ray_variance(const Ensemble& ensemble, const Ray& ray, const SampleSpec& spec) {
  const int m = ensemble.size();
  thread_local std::vector<Vec3> colors;
  colors.clear();
  Vec3 mean;
  for (const RadianceGrid& grid : ensemble.members) {
    const Vec3 c = render_ray(grid, ray, spec).color;
    colors.push_back(c);
    mean += c;
  }
  // True division: identical members yield an exactly zero variance, which
  // reciprocal multiplication misses for member counts like 3.
  mean = mean / m;
  double acc = 0.0;
  for (const Vec3& c : colors) acc += (mean - c).norm2();
  return acc / m;
}

UncertaintyMap pose_uncertainty_map(const Ensemble& ensemble, const Pose& pose,
                                    const CameraIntrinsics& intr, const SampleSpec& spec) {
  const int m = ensemble.size();
  std::vector<RenderOutput> renders;
  renders.reserve(m);
  for (const RadianceGrid& grid : ensemble.members) {
    renders.push_back(render_image(grid, pose, intr, spec));
  }
  UncertaintyMap map;
  map.width = intr.width;
  map.height = intr.height;
  map.pose = pose;
  const std::size_t n = renders[0].n_pixels();
  map.var.resize(n);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    Vec3 mean;
    for (const RenderOutput& r : renders) mean += r.color[p];
    mean = mean / m;
    double acc = 0.0;
    for (const RenderOutput& r : renders) acc += (mean - r.color[p]).norm2();
    map.var[p] = acc / m;
    total += map.var[p];
  }
  map.total = total;
  return map;
}

double pose_uncertainty(const Ensemble& ensemble, const Pose& pose,
                        const CameraIntrinsics& intr, const SampleSpec& spec) {
  return pose_uncertainty_map(ensemble, pose, intr, spec).total;
}

NormalizationContext build_normalization(const Ensemble& ensemble,
                                         const CameraIntrinsics& intr,
                                         const SampleSpec& spec, const ShellSpec& shell,
                                         int n_probes, std::uint64_t seed) {
  if (n_probes < 8) throw ConfigError("normalization needs at least 8 probe poses");
  Rng rng(seed);
  double acc = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    acc += pose_uncertainty(ensemble, sample_shell_pose(rng, shell), intr, spec);
  }
  NormalizationContext ctx;
  ctx.mean_uncertainty = acc / n_probes;
  ctx.n_probes = n_probes;
  ctx.seed = seed;
  ctx.shell = shell;
  if (!(ctx.mean_uncertainty > 0.0)) {
    throw NumericalError("probe uncertainty mean is zero; cannot normalize");
  }
  return ctx;
}

double masked_epistemic(const Ensemble& ensemble, const Pose& pose,
                        const CameraIntrinsics& intr, const SampleSpec& spec,
                        const std::vector<std::uint8_t>& mask) {
  const std::size_t n = static_cast<std::size_t>(intr.width) * intr.height;
  if (mask.size() != n) throw DegenerateInput("mask size mismatch");
  const RenderOutput mean = render_mean(ensemble, pose, intr, spec);
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (mask[p]) acc += 1.0 - std::clamp(mean.opacity[p], 0.0, 1.0);
  }
  return acc;
}

void write_uncertainty_png(const UncertaintyMap& map, const std::string& png_path,
                           const std::string& sidecar_path) {
  const double vmax = map.max_value();
  std::vector<std::uint8_t> gray(map.var.size());
  for (std::size_t p = 0; p < map.var.size(); ++p) {
    const double v = vmax > 0.0 ? map.var[p] / vmax : 0.0;
    gray[p] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  write_png_gray8(png_path, map.width, map.height, gray);

  nlohmann::json meta;
  meta["width"] = map.width;
  meta["height"] = map.height;
  meta["max"] = vmax;
  meta["total"] = map.total;
  meta["pose"] = {{"r", {map.pose.r.x, map.pose.r.y, map.pose.r.z}},
                  {"q", {map.pose.q.w, map.pose.q.x, map.pose.q.y, map.pose.q.z}}};
  std::ofstream out(sidecar_path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + sidecar_path + " for writing");
  out << meta.dump(2) << "\n";
}

}  // namespace voxcap
