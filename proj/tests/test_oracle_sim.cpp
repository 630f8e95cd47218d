// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "voxcap/oracle_sim.hpp"
#include "voxcap/repose.hpp"

using namespace voxcap;

namespace {
constexpr double kPi = 3.14159265358979323846;

SceneSpec scene_of(ObjectKind kind) {
  SceneSpec s;
  s.kind = kind;
  return s;
}

}  // namespace

TEST_CASE("analytic volumes match Monte Carlo integration") {
  Rng rng(404);
  const int n = 200000;
  const Aabb box = testutil::kBounds;
  const double box_vol = box.extent().x * box.extent().y * box.extent().z;
  for (ObjectKind kind : {ObjectKind::Sphere, ObjectKind::Box, ObjectKind::Capsule,
                          ObjectKind::CompositeCavity}) {
    const SceneSpec s = scene_of(kind);
    int inside = 0;
    for (int i = 0; i < n; ++i) {
      const Vec3 p{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
                   rng.uniform(box.lo.z, box.hi.z)};
      if (s.inside_local(p)) ++inside;
    }
    const double mc = box_vol * inside / n;
    const double analytic = s.analytic_volume();
    CHECK(analytic > 0.0);
    // MC standard error at this n is well under 2%.
    CHECK(mc == doctest::Approx(analytic).epsilon(0.03));
  }
}

TEST_CASE("local centroids sit where symmetry puts them") {
  // Sphere, box, capsule are symmetric about the local origin.
  for (ObjectKind kind : {ObjectKind::Sphere, ObjectKind::Box, ObjectKind::Capsule}) {
    const Vec3 c = scene_of(kind).local_centroid();
    CHECK(c.norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  // The pocket removes mass from the bottom, pushing the centroid up.
  const Vec3 cavity = scene_of(ObjectKind::CompositeCavity).local_centroid();
  CHECK(cavity.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cavity.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cavity.z > 1e-4);

  // Monte Carlo cross-check of the cavity centroid height.
  const SceneSpec s = scene_of(ObjectKind::CompositeCavity);
  Rng rng(7);
  Vec3 acc{0, 0, 0};
  int inside = 0;
  for (int i = 0; i < 200000; ++i) {
    const Vec3 p{rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)};
    if (s.inside_local(p)) {
      acc += p;
      ++inside;
    }
  }
  REQUIRE(inside > 0);
  CHECK(acc.z / inside == doctest::Approx(cavity.z).epsilon(0.05));
}

TEST_CASE("captures are deterministic and match the baked grid") {
  const OracleWorld world(scene_of(ObjectKind::Box), testutil::kBounds, 32);
  const CameraIntrinsics intr = testutil::square_intr(8);
  const SampleSpec spec{24, false, 0};
  const Pose pose = look_at({0.35, 0.1, 0.15}, {0, 0, 0});
  const ViewSample a = world.capture(pose, intr, spec);
  const ViewSample b = world.capture(pose, intr, spec);
  REQUIRE(a.image.size() == 64);
  REQUIRE(a.mask.size() == 64);
  for (std::size_t i = 0; i < a.image.size(); ++i) {
    CHECK(a.image[i].x == b.image[i].x);
    CHECK(a.mask[i] == b.mask[i]);
  }
  // Capture equals rendering the published ground-truth grid.
  const RenderOutput ref = render_image(world.ground_truth(), pose, intr, spec);
  for (std::size_t i = 0; i < a.image.size(); ++i) {
    CHECK(a.image[i].x == ref.color[i].x);
    CHECK(a.image[i].y == ref.color[i].y);
    CHECK(a.image[i].z == ref.color[i].z);
    CHECK(a.mask[i] == (ref.opacity[i] > 0.5 ? 1 : 0));
  }
}

TEST_CASE("world construction rejects objects outside the bounds") {
  SceneSpec s = scene_of(ObjectKind::Sphere);
  s.object_pose.r = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(OracleWorld(s, testutil::kBounds, 16), DegenerateInput);
}

TEST_CASE("noise-free flips land exactly on the command") {
  OracleWorld world(scene_of(ObjectKind::Box), testutil::kBounds, 24);
  TruthAudit audit;
  // Half turn about x through the origin.
  Pose cmd;
  cmd.q = Quat::axis_angle({1, 0, 0}, kPi);
  const FlipOutcome out = world.execute_flip(cmd, FlipNoise{}, 5);
  CHECK_FALSE(out.toppled);
  CHECK((out.commanded.r - cmd.r).norm() == doctest::Approx(0.0).epsilon(1e-15));
  {
    TruthAudit::MetricsScope scope(audit);
    const Pose& truth = out.true_delta.reveal(audit);
    CHECK(rotation_between(truth, cmd) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(translation_between(truth, cmd) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(audit.denied_reads() == 0);
  // Object pose advanced by the true delta.
  CHECK(quat_distance(world.scene().object_pose.q, cmd.q) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truth reads outside a metrics scope are denied and counted") {
  OracleWorld world(scene_of(ObjectKind::Box), testutil::kBounds, 24);
  TruthAudit audit;
  Pose cmd;
  cmd.q = Quat::axis_angle({0, 1, 0}, kPi);
  const FlipOutcome out = world.execute_flip(cmd, FlipNoise{}, 9);
  CHECK(audit.in_scope() == false);
  CHECK_THROWS_AS(out.true_delta.reveal(audit), std::logic_error);
  CHECK(audit.denied_reads() == 1);
  CHECK_THROWS_AS(out.true_delta.reveal(audit), std::logic_error);
  CHECK(audit.denied_reads() == 2);
  {
    TruthAudit::MetricsScope scope(audit);
    CHECK(audit.in_scope());
    CHECK_NOTHROW(out.true_delta.reveal(audit));
  }
  CHECK(audit.denied_reads() == 2);
}

TEST_CASE("flip noise statistics match the configured magnitudes") {
  FlipNoise noise;
  noise.rot_std = 0.06;
  noise.trans_std = 0.004;
  TruthAudit audit;
  Pose cmd;
  cmd.q = Quat::axis_angle({1, 0, 0}, kPi);

  const int trials = 200;
  double rot_sq = 0.0, trans_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    OracleWorld world(scene_of(ObjectKind::Sphere), testutil::kBounds, 8);
    const FlipOutcome out = world.execute_flip(cmd, noise, 1000 + t);
    TruthAudit::MetricsScope scope(audit);
    const Pose& truth = out.true_delta.reveal(audit);
    const double rot = rotation_between(truth, cmd);
    const double trans = translation_between(truth, cmd);
    rot_sq += rot * rot;
    trans_sq += trans * trans;
  }
  // Rotation error angle ~ |N(0, rot_std)|, so RMS = rot_std.
  const double rot_rms = std::sqrt(rot_sq / trials);
  CHECK(rot_rms == doctest::Approx(noise.rot_std).epsilon(0.15));
  // Translation is a 3-vector of N(0, trans_std): RMS norm = sqrt(3)*std.
  const double trans_rms = std::sqrt(trans_sq / trials);
  CHECK(trans_rms == doctest::Approx(std::sqrt(3.0) * noise.trans_std).epsilon(0.15));
}

TEST_CASE("topple adds a large extra rotation") {
  FlipNoise noise;
  noise.topple_prob = 1.0;
  TruthAudit audit;
  Pose cmd;
  cmd.q = Quat::axis_angle({1, 0, 0}, kPi);
  OracleWorld world(scene_of(ObjectKind::Sphere), testutil::kBounds, 8);
  const FlipOutcome out = world.execute_flip(cmd, noise, 77);
  CHECK(out.toppled);
  TruthAudit::MetricsScope scope(audit);
  const Pose& truth = out.true_delta.reveal(audit);
  // A quarter-turn tip on top of the command.
  CHECK(rotation_between(truth, cmd) == doctest::Approx(kPi / 2).epsilon(1e-6));
}

TEST_CASE("flips that would leave the workspace are refused before moving anything") {
  OracleWorld world(scene_of(ObjectKind::Box), testutil::kBounds, 24);
  const Pose before = world.scene().object_pose;
  Pose cmd;
  cmd.q = Quat::axis_angle({1, 0, 0}, kPi);
  cmd.r = {1.0, 0.0, 0.0};  // would throw the object far outside
  CHECK_THROWS_AS(world.execute_flip(cmd, FlipNoise{}, 3), DegenerateInput);
  // World state is untouched.
  CHECK((world.scene().object_pose.r - before.r).norm() == 0.0);
  CHECK(quat_distance(world.scene().object_pose.q, before.q) == doctest::Approx(1.0).epsilon(1e-15));
  // A sane flip afterwards still works.
  Pose ok;
  ok.q = Quat::axis_angle({1, 0, 0}, kPi);
  CHECK_NOTHROW(world.execute_flip(ok, FlipNoise{}, 4));
}

TEST_CASE("validation poses respect hemisphere constraints") {
  const OracleWorld world(scene_of(ObjectKind::Box), testutil::kBounds, 16);
  const ShellSpec shell{{0, 0, 0}, 0.28, 0.42};
  const auto everywhere = world.validation_poses(40, 5, shell, 0);
  const auto above = world.validation_poses(40, 5, shell, +1);
  const auto below = world.validation_poses(40, 5, shell, -1);
  REQUIRE(everywhere.size() == 40);
  REQUIRE(above.size() == 40);
  REQUIRE(below.size() == 40);
  bool saw_low = false, saw_high = false;
  for (const Pose& p : everywhere) {
    const double r = (p.r - shell.center).norm();
    CHECK(r >= shell.r_min - 1e-9);
    CHECK(r <= shell.r_max + 1e-9);
    (p.r.z < shell.center.z ? saw_low : saw_high) = true;
  }
  CHECK(saw_low);
  CHECK(saw_high);
  for (const Pose& p : above) CHECK(p.r.z >= shell.center.z - 1e-12);
  for (const Pose& p : below) CHECK(p.r.z <= shell.center.z + 1e-12);
  // Deterministic in the seed.
  const auto again = world.validation_poses(40, 5, shell, -1);
  for (std::size_t i = 0; i < again.size(); ++i)
    CHECK((again[i].r - below[i].r).norm() == 0.0);
}

TEST_CASE("surface points lie on the object surface") {
  SceneSpec s = scene_of(ObjectKind::Sphere);
  s.object_pose.r = {0.02, -0.01, 0.03};
  const OracleWorld world(s, testutil::kBounds, 16);
  const auto pts = world.surface_points(500, 11);
  REQUIRE(pts.size() == 500);
  for (const Vec3& p : pts) {
    const double r = (p - s.object_pose.r).norm();
    CHECK(r == doctest::Approx(s.sphere_radius).epsilon(1e-9));
  }
  // Box surface points satisfy the box boundary equation in the local frame.
  const SceneSpec sb = scene_of(ObjectKind::Box);
  const OracleWorld wb(sb, testutil::kBounds, 16);
  for (const Vec3& p : wb.surface_points(300, 12)) {
    const double fx = std::abs(std::abs(p.x) - sb.box_half.x);
    const double fy = std::abs(std::abs(p.y) - sb.box_half.y);
    const double fz = std::abs(std::abs(p.z) - sb.box_half.z);
    const bool on_face = (fx < 1e-9 && std::abs(p.y) <= sb.box_half.y + 1e-9 &&
                          std::abs(p.z) <= sb.box_half.z + 1e-9) ||
                         (fy < 1e-9 && std::abs(p.x) <= sb.box_half.x + 1e-9 &&
                          std::abs(p.z) <= sb.box_half.z + 1e-9) ||
                         (fz < 1e-9 && std::abs(p.x) <= sb.box_half.x + 1e-9 &&
                          std::abs(p.y) <= sb.box_half.y + 1e-9);
    CHECK(on_face);
  }
}

TEST_CASE("object centroid follows the object pose") {
  SceneSpec s = scene_of(ObjectKind::CompositeCavity);
  const OracleWorld upright(s, testutil::kBounds, 16);
  const Vec3 c0 = upright.object_centroid();
  CHECK(c0.z > 0.0);  // pocket below pushes mass up

  s.object_pose.q = Quat::axis_angle({1, 0, 0}, kPi);
  const OracleWorld flipped(s, testutil::kBounds, 16);
  const Vec3 c1 = flipped.object_centroid();
  CHECK(c1.z == doctest::Approx(-c0.z).epsilon(1e-9));
}
