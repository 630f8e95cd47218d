// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "voxcap/common.hpp"

namespace voxcap {

struct OptimConfig {
  int max_evals = 2000;
  double x_tol = 1e-9;    // step / simplex-size convergence threshold
  double f_tol = 0.0;     // relative f spread threshold; 0 disables
  double init_step = 0.25;
};

struct OptimResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// All three minimizers are deterministic, derivative-free, and return the best
// point they evaluated; they never exceed max_evals objective calls.

// Downhill simplex: reflection/expansion/contraction/shrink.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const OptimConfig& cfg);

// Direction-set method with parabolic (Brent) line minimization and the
// classic largest-decrease direction replacement rule.
OptimResult powell(const Objective& f, std::vector<double> x0, const OptimConfig& cfg);

// Linear-model trust region: keeps n+1 points, fits a linear model by
// interpolation, steps to the model minimizer on the trust-region boundary,
// and adapts the radius from the agreement ratio.
OptimResult cobyla_like(const Objective& f, std::vector<double> x0, const OptimConfig& cfg);

}  // namespace voxcap
