// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "voxcap/trainer.hpp"

using namespace voxcap;

namespace {

// Views of a known grid, rendered noise-free.
std::vector<ViewSample> synth_views(const RadianceGrid& gt, int n_views, int side) {
  std::vector<ViewSample> views;
  const CameraIntrinsics intr = testutil::square_intr(side);
  SampleSpec spec;
  spec.n_samples = 24;
  for (int i = 0; i < n_views; ++i) {
    const double az = 2.0 * 3.14159265358979323846 * i / n_views;
    const Vec3 eye{0.4 * std::cos(az), 0.4 * std::sin(az), 0.2};
    ViewSample v;
    v.pose = look_at(eye, gt.bounds().center());
    v.intr = intr;
    const RenderOutput out = render_image(gt, v.pose, intr, spec);
    v.image = out.color;
    v.mask.resize(out.n_pixels());
    for (std::size_t p = 0; p < out.n_pixels(); ++p)
      v.mask[p] = out.opacity[p] > 0.5 ? 1 : 0;
    views.push_back(std::move(v));
  }
  return views;
}

RadianceGrid blob_grid(int res) {
  RadianceGrid grid(res, res, res, testutil::kBounds);
  grid.fill_density_raw(RadianceGrid::softplus_inv(1e-4));
  grid.fill_color_raw(RadianceGrid::logit(0.5));
  const Vec3 c = testutil::kBounds.center();
  for (int iz = 0; iz < res; ++iz)
    for (int iy = 0; iy < res; ++iy)
      for (int ix = 0; ix < res; ++ix) {
        const Vec3 p = grid.node_position(ix, iy, iz);
        if ((p - c).norm() < 0.09) {
          const std::size_t i = grid.node_index(ix, iy, iz);
          grid.set_density_raw(i, RadianceGrid::softplus_inv(40.0));
          grid.set_color_raw(i, 0, RadianceGrid::logit(0.9));
          grid.set_color_raw(i, 1, RadianceGrid::logit(0.3));
          grid.set_color_raw(i, 2, RadianceGrid::logit(0.2));
        }
      }
  return grid;
}

}  // namespace

TEST_CASE("ensemble init is deterministic and members differ by seed") {
  TrainConfig cfg;
  cfg.members = 3;
  cfg.init_scale = 0.1;
  const Ensemble a = init_ensemble(cfg, 4, 4, 4, testutil::kBounds, 900);
  const Ensemble b = init_ensemble(cfg, 4, 4, 4, testutil::kBounds, 900);
  REQUIRE(a.size() == 3);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < a.members[k].n_nodes(); ++i) {
      CHECK(a.members[k].density_raw(i) == b.members[k].density_raw(i));
      CHECK(std::abs(a.members[k].density_raw(i)) <= 0.1);
    }
  }
  // Distinct seeds give distinct parameters.
  CHECK(a.members[0].density_raw(0) != a.members[1].density_raw(0));
  // Member k of a run seeded at s equals member 0 of a run seeded at s+k.
  const Ensemble shifted = init_ensemble(cfg, 4, 4, 4, testutil::kBounds, 901);
  CHECK(a.members[1].density_raw(5) == shifted.members[0].density_raw(5));
}

TEST_CASE("mean render averages the members") {
  TrainConfig cfg;
  cfg.members = 3;
  Ensemble ens = init_ensemble(cfg, 4, 4, 4, testutil::kBounds, 17);
  // Spread the members so the average is nontrivial.
  for (int k = 0; k < 3; ++k)
    ens.members[k].fill_density_raw(RadianceGrid::softplus_inv(2.0 + k));
  const Pose pose = look_at({0.4, 0.1, 0.1}, testutil::kBounds.center());
  const CameraIntrinsics intr = testutil::square_intr(4);
  SampleSpec spec;
  spec.n_samples = 16;
  const RenderOutput mean = render_mean(ens, pose, intr, spec);
  std::vector<RenderOutput> singles;
  for (int k = 0; k < 3; ++k) {
    Ensemble one;
    one.config = cfg;
    one.members.push_back(ens.members[k]);
    singles.push_back(render_mean(one, pose, intr, spec));
  }
  for (std::size_t p = 0; p < mean.n_pixels(); ++p) {
    const double want =
        (singles[0].color[p].x + singles[1].color[p].x + singles[2].color[p].x) / 3.0;
    CHECK(mean.color[p].x == doctest::Approx(want).epsilon(1e-12));
    const double want_op =
        (singles[0].opacity[p] + singles[1].opacity[p] + singles[2].opacity[p]) / 3.0;
    CHECK(mean.opacity[p] == doctest::Approx(want_op).epsilon(1e-12));
  }
}

TEST_CASE("density centroid tracks the mass") {
  TrainConfig cfg;
  cfg.members = 1;
  Ensemble ens = init_ensemble(cfg, 5, 5, 5, testutil::kBounds, 3);
  // Uniform density: centroid at the lattice center.
  ens.members[0].fill_density_raw(RadianceGrid::softplus_inv(3.0));
  const Vec3 mid = density_centroid(ens);
  CHECK(mid.x == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(mid.y == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(mid.z == doctest::Approx(0.0).epsilon(1e-10));

  // All mass at one corner node.
  ens.members[0].fill_density_raw(-1000.0);
  const std::size_t corner = ens.members[0].node_index(4, 4, 4);
  ens.members[0].set_density_raw(corner, RadianceGrid::softplus_inv(5.0));
  const Vec3 shifted = density_centroid(ens);
  CHECK(shifted.x == doctest::Approx(0.16).epsilon(1e-9));
  CHECK(shifted.y == doctest::Approx(0.16).epsilon(1e-9));
  CHECK(shifted.z == doctest::Approx(0.16).epsilon(1e-9));

  // Zero mass everywhere is degenerate.
  ens.members[0].fill_density_raw(-1000.0);
  CHECK_THROWS_AS(density_centroid(ens), EmptyModel);
}

TEST_CASE("fit reduces loss and is deterministic") {
  const RadianceGrid gt = blob_grid(8);
  const auto views = synth_views(gt, 3, 8);

  TrainConfig cfg;
  cfg.members = 2;
  cfg.steps = 60;
  cfg.batch_rays = 64;
  cfg.lr = 0.2;
  cfg.spec = SampleSpec{16, true, 0};
  Ensemble a = init_ensemble(cfg, 6, 6, 6, testutil::kBounds, 1001);
  Ensemble b = init_ensemble(cfg, 6, 6, 6, testutil::kBounds, 1001);
  const TrainReport ra = fit(a, views);
  const TrainReport rb = fit(b, views);

  REQUIRE(ra.members() == 2);
  REQUIRE(ra.loss[0].size() == 60);
  for (int k = 0; k < 2; ++k) {
    const double first = ra.loss[k].front();
    const double last = ra.loss[k].back();
    CHECK(last < first);
  }
  CHECK(ra.final_mean_loss() ==
        doctest::Approx((ra.loss[0].back() + ra.loss[1].back()) / 2).epsilon(1e-12));

  // Bitwise reproducible: same seed, same data, same parameters out.
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < a.members[k].n_nodes(); ++i) {
      CHECK(a.members[k].density_raw(i) == b.members[k].density_raw(i));
      CHECK(a.members[k].color_raw(i, 0) == b.members[k].color_raw(i, 0));
    }
  for (int k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < ra.loss[k].size(); ++s)
      CHECK(ra.loss[k][s] == rb.loss[k][s]);
}

TEST_CASE("train report csv has one row per member and step") {
  TrainReport report;
  report.loss = {{0.5, 0.4, 0.3}, {0.6, 0.5, 0.45}};
  const std::string path = testutil::scratch_dir("trainer") + "/train_log.csv";
  report.write_csv(path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!header_seen) {
      CHECK(line == "member,step,loss");
      header_seen = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == 6);  // 2 members x 3 steps
  std::filesystem::remove(path);
}

TEST_CASE("ensemble save and load round-trip bit-exactly") {
  TrainConfig cfg;
  cfg.members = 2;
  cfg.steps = 7;
  cfg.lr = 0.05;
  Ensemble ens = init_ensemble(cfg, 4, 4, 4, testutil::kBounds, 31337);
  const std::string dir = testutil::scratch_dir("ensemble_io");
  save_ensemble(ens, dir);
  const Ensemble back = load_ensemble(dir);
  REQUIRE(back.size() == 2);
  CHECK(back.base_seed == ens.base_seed);
  CHECK(back.config.members == 2);
  for (int k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < ens.members[k].n_nodes(); ++i) {
      CHECK(back.members[k].density_raw(i) == ens.members[k].density_raw(i));
      for (int ch = 0; ch < 3; ++ch)
        CHECK(back.members[k].color_raw(i, ch) == ens.members[k].color_raw(i, ch));
    }
  std::filesystem::remove_all(dir);
}
