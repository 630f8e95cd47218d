// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voxcap/optim.hpp"
#include "voxcap/trainer.hpp"

namespace voxcap {

// Small rigid perturbation: translation in meters, rotation vector in radians.
struct PoseDelta {
  std::array<double, 6> v{};  // tx, ty, tz, rx, ry, rz

  Vec3 translation() const { return {v[0], v[1], v[2]}; }
  Vec3 rotvec() const { return {v[3], v[4], v[5]}; }
  double translation_norm() const { return translation().norm(); }
  double rotation_angle() const { return rotvec().norm(); }
  Pose to_pose() const { return {translation(), Quat::from_rotvec(rotvec())}; }
};

// Relative transform between two rigid transforms, as a chart-free delta:
// d = a * b^-1 (the transform taking b to a), reported as rotation angle and
// translation distance.
double rotation_between(const Pose& a, const Pose& b);
double translation_between(const Pose& a, const Pose& b);

// Photometric re-acquisition objective. Candidate object transforms D are
// parameterized about a prior (the nominal flip) as
//   D(x) = T(pivot) exp(x) T(-pivot) * prior,
// and scored by the sum of squared color differences between the captured
// views and the ensemble mean rendered from D^-1-adjusted cameras. Only
// in-mask pixels are compared, subsampled by pixel_stride. Translation
// components of x are scaled by trans_scale so one optimizer unit is a few
// centimeters, matching the rotation scale in radians.
class SsdObjective {
 public:
  SsdObjective(const Ensemble* ensemble, std::vector<ViewSample> views, Pose prior,
               Vec3 pivot, SampleSpec spec, double trans_scale = 0.05,
               int pixel_stride = 1);

  Pose compose(const std::vector<double>& x) const;
  double evaluate(const std::vector<double>& x) const;
  double evaluate(const PoseDelta& delta) const;  // unscaled chart
  PoseDelta unscale(const std::vector<double>& x) const;

  std::size_t compared_pixels() const { return compared_pixels_; }
  const Pose& prior() const { return prior_; }
  int n_views() const { return static_cast<int>(views_.size()); }

 private:
  const Ensemble* ensemble_;
  std::vector<ViewSample> views_;
  Pose prior_;
  Vec3 pivot_;
  SampleSpec spec_;
  double trans_scale_;
  int pixel_stride_;
  std::size_t compared_pixels_ = 0;
  std::vector<std::vector<std::size_t>> selected_;  // per view, strided in-mask pixels
};

double ssd(const SsdObjective& objective, const PoseDelta& delta);

struct ReacquireConfig {
  OptimConfig opt{300, 1e-7, 0.0, 0.25};
  // Mean per-pixel SSD above this means the model never matched the captures.
  double reject_ssd_per_pixel = 0.05;
};

struct MethodOutcome {
  const char* name = "";
  double ssd = 0.0;
  int evals = 0;
  PoseDelta delta;
};

struct ReacquireResult {
  Pose recovered;   // winning object transform D-hat
  PoseDelta delta;  // winning chart solution (meters / radians)
  double ssd = 0.0;
  double ssd_per_pixel = 0.0;
  int winner = -1;  // index into methods
  std::array<MethodOutcome, 3> methods;
  bool rejected = false;
};

// Runs nelder_mead, powell, and cobyla_like from the prior on independent
// copies of the objective and keeps the lowest-SSD solution.
ReacquireResult reacquire_pose(const SsdObjective& objective, const ReacquireConfig& cfg);

}  // namespace voxcap
