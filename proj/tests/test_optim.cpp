// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "voxcap/optim.hpp"

using namespace voxcap;

namespace {

using Method = OptimResult (*)(const Objective&, std::vector<double>, const OptimConfig&);

struct Named {
  const char* name;
  Method run;
};

const Named kMethods[] = {
    {"nelder_mead", &nelder_mead},
    {"powell", &powell},
    {"cobyla_like", &cobyla_like},
};

double sq(double v) { return v * v; }

}  // namespace

TEST_CASE("minimizers solve a shifted quadratic bowl") {
  const std::vector<double> target{0.3, -1.2, 0.45};
  const Objective f = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += sq(x[i] - target[i]);
    return s;
  };
  OptimConfig cfg;
  cfg.max_evals = 2000;
  cfg.x_tol = 1e-10;
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    const OptimResult res = m.run(f, {0, 0, 0}, cfg);
    REQUIRE(res.x.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(res.x[i] == doctest::Approx(target[i]).epsilon(1e-4));
    CHECK(res.f < 1e-8);
    CHECK(res.evals <= cfg.max_evals);
    CHECK(res.evals > 0);
  }
}

TEST_CASE("minimizers handle anisotropic curvature") {
  // Narrow valley: curvatures 100:1 across axes.
  const Objective f = [](const std::vector<double>& x) {
    return 100.0 * sq(x[0] - 1.0) + sq(x[1] + 2.0);
  };
  OptimConfig cfg;
  cfg.max_evals = 4000;
  cfg.x_tol = 1e-11;
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    const OptimResult res = m.run(f, {0, 0}, cfg);
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(res.x[1] == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(res.f < 1e-5);
  }
}

TEST_CASE("minimizers respect the evaluation budget") {
  int calls = 0;
  const Objective f = [&](const std::vector<double>& x) {
    ++calls;
    return sq(x[0] - 5.0) + sq(x[1]) + sq(x[2]) + sq(x[3]);
  };
  OptimConfig cfg;
  cfg.max_evals = 40;
  cfg.x_tol = 0.0;  // never converge on step size; budget is the only stop
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    calls = 0;
    const OptimResult res = m.run(f, {0, 0, 0, 0}, cfg);
    CHECK(calls <= 40);
    CHECK(res.evals == calls);
    // Returned value is the best point seen, re-checkable against f.
    CHECK(res.f == doctest::Approx(f(res.x)).epsilon(1e-15));
  }
}

TEST_CASE("minimizers return the best evaluated point on rough terrain") {
  // Non-convex with a known global structure near the origin basin.
  const Objective f = [](const std::vector<double>& x) {
    return sq(x[0]) + sq(x[1]) + 0.3 * std::sin(17.0 * x[0]) * std::sin(13.0 * x[1]);
  };
  OptimConfig cfg;
  cfg.max_evals = 800;
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    const OptimResult res = m.run(f, {0.8, -0.6}, cfg);
    // Must not regress past the start.
    CHECK(res.f <= f({0.8, -0.6}));
    CHECK(res.f == doctest::Approx(f(res.x)).epsilon(1e-15));
  }
}

TEST_CASE("minimizers are deterministic") {
  const Objective f = [](const std::vector<double>& x) {
    return sq(x[0] - 0.2) + 3.0 * sq(x[1] - 0.1) + 0.5 * sq(x[0] * x[1]);
  };
  OptimConfig cfg;
  cfg.max_evals = 500;
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    const OptimResult a = m.run(f, {1, 1}, cfg);
    const OptimResult b = m.run(f, {1, 1}, cfg);
    CHECK(a.f == b.f);
    CHECK(a.evals == b.evals);
    REQUIRE(a.x.size() == b.x.size());
    for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
  }
}

TEST_CASE("one-dimensional minimization works") {
  const Objective f = [](const std::vector<double>& x) { return sq(x[0] + 3.0) + 2.0; };
  OptimConfig cfg;
  for (const auto& m : kMethods) {
    CAPTURE(m.name);
    const OptimResult res = m.run(f, {10.0}, cfg);
    CHECK(res.x[0] == doctest::Approx(-3.0).epsilon(1e-4));
    CHECK(res.f == doctest::Approx(2.0).epsilon(1e-7));
  }
}
