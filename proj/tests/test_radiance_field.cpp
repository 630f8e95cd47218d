// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"
#include "voxcap/radiance_field.hpp"
#include "voxcap/rng.hpp"

using namespace voxcap;

namespace {

// Grid whose activated density is sigma0 everywhere and color c0 everywhere.
RadianceGrid uniform_grid(int res, double sigma0, const Vec3& c0,
                          const Aabb& bounds = testutil::kBounds) {
  RadianceGrid grid(res, res, res, bounds);
  grid.fill_density_raw(RadianceGrid::softplus_inv(sigma0));
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    grid.set_color_raw(i, 0, RadianceGrid::logit(c0.x));
    grid.set_color_raw(i, 1, RadianceGrid::logit(c0.y));
    grid.set_color_raw(i, 2, RadianceGrid::logit(c0.z));
  }
  return grid;
}

Ray axis_ray(const Aabb& bounds) {
  Ray ray;
  ray.o = {bounds.lo.x - 0.1, 0.0, 0.0};
  ray.d = {1, 0, 0};
  double t0 = 0, t1 = 0;
  REQUIRE(bounds.intersect(ray.o, ray.d, t0, t1));
  ray.t_near = t0;
  ray.t_far = t1;
  return ray;
}

}  // namespace

TEST_CASE("activation helpers invert each other") {
  for (double y : {1e-6, 0.01, 0.7, 3.0, 40.0}) {
    CHECK(RadianceGrid::softplus(RadianceGrid::softplus_inv(y)) ==
          doctest::Approx(y).epsilon(1e-9));
  }
  for (double p : {1e-6, 0.25, 0.5, 0.999}) {
    CHECK(RadianceGrid::sigmoid(RadianceGrid::logit(p)) ==
          doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(RadianceGrid::softplus(-60.0) >= 0.0);
  CHECK(RadianceGrid::softplus(60.0) == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("homogeneous slab opacity matches the closed form") {
  // Constant sigma over a slab of length L. Midpoint samples with the last
  // segment clipped to t_far cover L - L/(2n) of optical path, so the exact
  // discrete answer is 1 - exp(-sigma (L - L/2n)); it converges to the
  // continuous 1 - exp(-sigma L) as n grows.
  const Aabb bounds = testutil::kBounds;
  const double length = bounds.extent().x;
  const double sigma0 = 1.0 / length;  // sigma * L = 1
  const RadianceGrid grid = uniform_grid(8, sigma0, {0.8, 0.4, 0.2}, bounds);
  const Ray ray = axis_ray(bounds);

  for (int n : {4, 16, 64, 256}) {
    SampleSpec spec;
    spec.n_samples = n;
    const RayShade shade = render_ray(grid, ray, spec);
    const double covered = length - length / (2.0 * n);
    CHECK(shade.opacity ==
          doctest::Approx(1.0 - std::exp(-sigma0 * covered)).epsilon(1e-12));
    // Uniform color: rendered color = opacity * c0.
    CHECK(shade.color.x == doctest::Approx(shade.opacity * 0.8).epsilon(1e-9));
    CHECK(shade.color.y == doctest::Approx(shade.opacity * 0.4).epsilon(1e-9));
    CHECK(shade.color.z == doctest::Approx(shade.opacity * 0.2).epsilon(1e-9));
  }

  // 1 - exp(-1) = 0.632120558828558 to full precision; the 256-sample
  // quadrature lands within 1e-3 of it.
  SampleSpec spec;
  spec.n_samples = 256;
  const RayShade fine = render_ray(grid, ray, spec);
  CHECK(std::abs(fine.opacity - 0.632120558828558) < 1e-3);
}

TEST_CASE("quadrature matches a hand-rolled reference") {
  const RadianceGrid grid = testutil::random_grid(6, 31);
  const Ray ray = axis_ray(grid.bounds());
  SampleSpec spec;
  spec.n_samples = 32;
  const RayShade shade = render_ray(grid, ray, spec);

  // Same stratified midpoints, accumulated with explicit transmittance.
  const double dt = (ray.t_far - ray.t_near) / spec.n_samples;
  double tau = 0.0;
  Vec3 color{0, 0, 0};
  double opacity = 0.0, depth = 0.0;
  for (int i = 0; i < spec.n_samples; ++i) {
    const double t = ray.t_near + (i + 0.5) * dt;
    const double delta = (i + 1 == spec.n_samples) ? ray.t_far - t : dt;
    double sigma;
    Vec3 rgb;
    grid.sample(ray.at(t), sigma, rgb);
    const double trans = std::exp(-tau);
    const double alpha = trans * (1.0 - std::exp(-sigma * delta));
    color += rgb * alpha;
    depth += t * alpha;
    opacity += alpha;
    tau += sigma * delta;
  }
  CHECK(shade.opacity == doctest::Approx(opacity).epsilon(1e-10));
  CHECK(shade.color.x == doctest::Approx(color.x).epsilon(1e-10));
  CHECK(shade.color.y == doctest::Approx(color.y).epsilon(1e-10));
  CHECK(shade.color.z == doctest::Approx(color.z).epsilon(1e-10));
  CHECK(shade.depth == doctest::Approx(depth).epsilon(1e-10));
  // Telescoping: opacity equals 1 - exp(-total optical depth).
  CHECK(shade.opacity == doctest::Approx(1.0 - std::exp(-tau)).epsilon(1e-10));
}

TEST_CASE("rendered values stay in physical ranges") {
  const RadianceGrid grid = testutil::random_grid(5, 77);
  Rng rng(5);
  SampleSpec spec;
  spec.n_samples = 24;
  for (int i = 0; i < 100; ++i) {
    Ray ray;
    ray.o = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -0.5};
    ray.d = Vec3{rng.normal(), rng.normal(), std::abs(rng.normal()) + 0.1}.normalized();
    double t0 = 0, t1 = 0;
    if (!grid.bounds().intersect(ray.o, ray.d, t0, t1)) continue;
    ray.t_near = std::max(t0, 0.0);
    ray.t_far = t1;
    if (ray.empty()) continue;
    const RayShade shade = render_ray(grid, ray, spec);
    CHECK(shade.opacity >= 0.0);
    CHECK(shade.opacity <= 1.0 + 1e-12);
    for (int ch = 0; ch < 3; ++ch) {
      CHECK(shade.color[ch] >= -1e-12);
      CHECK(shade.color[ch] <= shade.opacity + 1e-12);
    }
  }
}

TEST_CASE("empty rays shade to zero") {
  const RadianceGrid grid = uniform_grid(4, 5.0, {0.5, 0.5, 0.5});
  Ray miss;
  miss.o = {0, 0, 0};
  miss.d = {1, 0, 0};
  miss.t_near = 1.0;
  miss.t_far = 1.0;  // empty interval
  const RayShade shade = render_ray(grid, miss, SampleSpec{});
  CHECK(shade.opacity == 0.0);
  CHECK(shade.color.norm() == 0.0);
}

TEST_CASE("jittered rendering is seeded per pixel") {
  const RadianceGrid grid = testutil::random_grid(5, 3);
  const Ray ray = axis_ray(grid.bounds());
  SampleSpec spec;
  spec.n_samples = 16;
  spec.jitter = true;
  spec.seed = 42;
  const RayShade a = render_ray(grid, ray, spec, 7);
  const RayShade b = render_ray(grid, ray, spec, 7);
  const RayShade c = render_ray(grid, ray, spec, 8);
  CHECK(a.color.x == b.color.x);
  CHECK(a.depth == b.depth);
  CHECK(a.color.x != c.color.x);
}

TEST_CASE("render_image shades every pixel in row-major order") {
  const RadianceGrid grid = testutil::random_grid(5, 9);
  const CameraIntrinsics intr = testutil::square_intr(6);
  const Pose pose = look_at({0.4, 0.1, 0.2}, grid.bounds().center());
  SampleSpec spec;
  spec.n_samples = 16;
  const RenderOutput out = render_image(grid, pose, intr, spec);
  REQUIRE(out.width == 6);
  REQUIRE(out.height == 6);
  REQUIRE(out.n_pixels() == 36);
  const auto rays = generate_rays(pose, intr, grid.bounds());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RayShade shade = render_ray(grid, rays[i], spec);
    CHECK(out.color[i].x == doctest::Approx(shade.color.x).epsilon(1e-12));
    CHECK(out.opacity[i] == doctest::Approx(shade.opacity).epsilon(1e-12));
  }
}

TEST_CASE("photometric gradients match finite differences") {
  // Small grid so central differences over every parameter stay cheap.
  RadianceGrid grid = testutil::random_grid(3, 1234);
  const CameraIntrinsics intr = testutil::square_intr(4);
  const Pose pose = look_at({0.4, 0.05, 0.1}, grid.bounds().center());
  auto rays = generate_rays(pose, intr, grid.bounds());
  std::vector<Vec3> targets(rays.size());
  Rng rng(8);
  for (auto& t : targets) t = {rng.uniform(), rng.uniform(), rng.uniform()};
  SampleSpec spec;
  spec.n_samples = 12;

  PhotometricGrad grad;
  backprop_photometric(grid, rays, targets, spec, grad);
  REQUIRE(grad.d_density_raw.size() == grid.n_nodes());
  REQUIRE(grad.d_color_raw.size() == 3 * grid.n_nodes());

  auto loss_of = [&](RadianceGrid& g) {
    PhotometricGrad tmp;
    backprop_photometric(g, rays, targets, spec, tmp);
    return tmp.loss;
  };

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    const double v = grid.density_raw(i);
    grid.set_density_raw(i, v + h);
    const double lp = loss_of(grid);
    grid.set_density_raw(i, v - h);
    const double lm = loss_of(grid);
    grid.set_density_raw(i, v);
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(grad.d_density_raw[i] - fd) /
                       std::max({1.0, std::abs(fd), std::abs(grad.d_density_raw[i])});
    max_rel = std::max(max_rel, rel);
  }
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v = grid.color_raw(i, ch);
      grid.set_color_raw(i, ch, v + h);
      const double lp = loss_of(grid);
      grid.set_color_raw(i, ch, v - h);
      const double lm = loss_of(grid);
      grid.set_color_raw(i, ch, v);
      const double fd = (lp - lm) / (2 * h);
      const double rel =
          std::abs(grad.d_color_raw[3 * i + ch] - fd) /
          std::max({1.0, std::abs(fd), std::abs(grad.d_color_raw[3 * i + ch])});
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("photometric loss is the mean squared pixel error") {
  const RadianceGrid grid = testutil::random_grid(3, 55);
  const CameraIntrinsics intr = testutil::square_intr(3);
  const Pose pose = look_at({0.35, -0.1, 0.15}, grid.bounds().center());
  const auto rays = generate_rays(pose, intr, grid.bounds());
  std::vector<Vec3> targets(rays.size(), Vec3{0.2, 0.5, 0.9});
  SampleSpec spec;
  spec.n_samples = 10;
  PhotometricGrad grad;
  backprop_photometric(grid, rays, targets, spec, grad);
  double want = 0.0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RayShade shade = render_ray(grid, rays[i], spec);
    want += (shade.color - targets[i]).norm2();
  }
  want /= static_cast<double>(rays.size());
  CHECK(grad.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("grid save and load round-trip bit-exactly") {
  const RadianceGrid grid = testutil::random_grid(4, 2024);
  const std::string path = testutil::scratch_dir("grid") + "/grid.vxg";
  grid.save(path);
  const RadianceGrid back = RadianceGrid::load(path);
  REQUIRE(back.nx() == grid.nx());
  REQUIRE(back.n_nodes() == grid.n_nodes());
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    CHECK(back.density_raw(i) == grid.density_raw(i));
    for (int ch = 0; ch < 3; ++ch) CHECK(back.color_raw(i, ch) == grid.color_raw(i, ch));
  }
  CHECK(back.bounds().lo.x == grid.bounds().lo.x);
  CHECK(back.bounds().hi.z == grid.bounds().hi.z);
  std::filesystem::remove(path);
}

TEST_CASE("stencil weights are convex and interpolate node values") {
  const RadianceGrid grid = testutil::random_grid(4, 99);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p{rng.uniform(grid.bounds().lo.x, grid.bounds().hi.x),
                 rng.uniform(grid.bounds().lo.y, grid.bounds().hi.y),
                 rng.uniform(grid.bounds().lo.z, grid.bounds().hi.z)};
    const auto st = grid.stencil(p);
    double wsum = 0.0, sigma_manual = 0.0;
    for (int k = 0; k < 8; ++k) {
      CHECK(st.w[k] >= -1e-12);
      wsum += st.w[k];
      sigma_manual += st.w[k] * grid.density_at_node(st.idx[k]);
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(grid.sample_density(p) == doctest::Approx(sigma_manual).epsilon(1e-12));
  }
}
