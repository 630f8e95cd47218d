// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "voxcap/common.hpp"
#include "voxcap/geometry.hpp"
#include "voxcap/rng.hpp"

using namespace voxcap;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("quaternion rotation of basis vectors") {
  const Quat q = Quat::axis_angle({0, 0, 1}, kPi / 2);
  const Vec3 v = q.rotate({1, 0, 0});
  CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.z == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.angle() == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("quaternion rotvec round trip") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Vec3 axis = Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized();
    const double angle = rng.uniform(0.0, kPi - 1e-3);
    const Quat q = Quat::axis_angle(axis, angle);
    const Vec3 r = q.to_rotvec();
    const Quat back = Quat::from_rotvec(r);
    CHECK(quat_distance(q, back) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.norm() == doctest::Approx(angle).epsilon(1e-9));
  }
}

TEST_CASE("quaternion matrix round trip") {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const Vec3 axis = Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized();
    const Quat q = Quat::axis_angle(axis, rng.uniform(0.0, kPi));
    const Quat back = Quat::from_matrix(q.to_matrix());
    CHECK(quat_distance(q, back) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("pose compose and inverse cancel") {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    Pose p;
    p.r = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    p.q = Quat::axis_angle(Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized(),
                           rng.uniform(0.0, kPi));
    const Pose id = p.compose(p.inverse());
    CHECK(id.r.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(quat_distance(id.q, Quat::identity()) == doctest::Approx(1.0).epsilon(1e-12));

    const Vec3 x{0.3, -0.1, 0.7};
    const Vec3 there_and_back = p.inverse().apply(p.apply(x));
    CHECK((there_and_back - x).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("pose composition matches sequential application") {
  Pose a;
  a.r = {0.1, 0.2, 0.3};
  a.q = Quat::axis_angle({0, 1, 0}, 0.4);
  Pose b;
  b.r = {-0.2, 0.05, 0.1};
  b.q = Quat::axis_angle({1, 0, 0}, -0.7);
  const Vec3 x{0.5, -0.3, 0.2};
  const Vec3 via_compose = a.compose(b).apply(x);
  const Vec3 sequential = a.apply(b.apply(x));
  CHECK((via_compose - sequential).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("quat distance extremes") {
  const Quat q = Quat::axis_angle({0, 0, 1}, 0.3);
  CHECK(quat_distance(q, q) == doctest::Approx(1.0).epsilon(1e-14));
  const Quat flipped = Quat::axis_angle({1, 0, 0}, kPi) * q;
  CHECK(quat_distance(q, flipped) == doctest::Approx(0.0).epsilon(1e-12));
  // Sign invariance: q and -q are the same rotation.
  const Quat neg = Quat::from_wxyz(-q.w, -q.x, -q.y, -q.z);
  CHECK(quat_distance(q, neg) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("look_at points the camera at the target") {
  const Vec3 eye{0.4, -0.3, 0.25};
  const Vec3 target{0, 0, 0};
  const Pose pose = look_at(eye, target);
  CHECK((pose.r - eye).norm() == doctest::Approx(0.0).epsilon(1e-14));
  // Camera looks along -z of its own frame.
  const Vec3 fwd = pose.rotate_dir({0, 0, -1});
  const Vec3 want = (target - eye).normalized();
  CHECK((fwd - want).norm() == doctest::Approx(0.0).epsilon(1e-12));
  // Right/up/forward stay orthonormal.
  const Vec3 right = pose.rotate_dir({1, 0, 0});
  const Vec3 up = pose.rotate_dir({0, 1, 0});
  CHECK(right.dot(up) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(right.dot(fwd) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(right.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("look_at rejects degenerate configurations") {
  CHECK_THROWS_AS(look_at({0, 0, 0}, {0, 0, 0}), DegenerateInput);
  // Up parallel to the view direction.
  CHECK_THROWS_AS(look_at({0, 0, 1}, {0, 0, 0}, {0, 0, 1}), DegenerateInput);
}

TEST_CASE("intrinsics validation") {
  CameraIntrinsics good;
  good.width = 8;
  good.height = 8;
  good.fx = 10;
  good.fy = 10;
  good.cx = 4;
  good.cy = 4;
  CHECK_NOTHROW(good.validate());
  CameraIntrinsics bad = good;
  bad.width = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = good;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("aabb slab intersection") {
  const Aabb box{{-1, -1, -1}, {1, 1, 1}};
  double t0 = 0, t1 = 0;
  CHECK(box.intersect({-3, 0, 0}, {1, 0, 0}, t0, t1));
  CHECK(t0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t1 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_FALSE(box.intersect({-3, 5, 0}, {1, 0, 0}, t0, t1));
  // Origin inside: entry clamps to a nonpositive t0.
  CHECK(box.intersect({0, 0, 0}, {0, 1, 0}, t0, t1));
  CHECK(t0 <= 0.0);
  CHECK(t1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pixel rays traverse the bounds and match row-major layout") {
  const Aabb bounds{{-0.16, -0.16, -0.16}, {0.16, 0.16, 0.16}};
  CameraIntrinsics intr;
  intr.width = 4;
  intr.height = 3;
  intr.fx = 5.0;
  intr.fy = 5.0;
  intr.cx = 2.0;
  intr.cy = 1.5;
  const Pose pose = look_at({0.5, 0, 0}, {0, 0, 0});
  const auto rays = generate_rays(pose, intr, bounds);
  REQUIRE(rays.size() == 12);
  for (int py = 0; py < 3; ++py) {
    for (int px = 0; px < 4; ++px) {
      const Ray one = pixel_ray(pose, intr, bounds, px, py);
      const Ray& batch = rays[static_cast<std::size_t>(py) * 4 + px];
      CHECK((one.o - batch.o).norm() == doctest::Approx(0.0).epsilon(1e-15));
      CHECK((one.d - batch.d).norm() == doctest::Approx(0.0).epsilon(1e-15));
      CHECK(one.t_near == doctest::Approx(batch.t_near).epsilon(1e-15));
      CHECK(one.d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // The center pixel ray hits the box; entry point sits on the +x face.
  const Ray center = pixel_ray(pose, intr, bounds, 2, 1);
  REQUIRE_FALSE(center.empty());
  const Vec3 entry = center.at(center.t_near);
  CHECK(entry.x == doctest::Approx(0.16).epsilon(1e-9));
}

TEST_CASE("shell pose sampling respects the shell and is deterministic") {
  const ShellSpec shell{{0.01, -0.02, 0.03}, 0.28, 0.42};
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 200; ++i) {
    const Pose pa = sample_shell_pose(a, shell);
    const Pose pb = sample_shell_pose(b, shell);
    CHECK((pa.r - pb.r).norm() == 0.0);
    CHECK(quat_distance(pa.q, pb.q) == doctest::Approx(1.0).epsilon(1e-15));
    const double r = (pa.r - shell.center).norm();
    CHECK(r >= shell.r_min - 1e-12);
    CHECK(r <= shell.r_max + 1e-12);
    // Camera faces the shell center.
    const Vec3 fwd = pa.rotate_dir({0, 0, -1});
    const Vec3 want = (shell.center - pa.r).normalized();
    CHECK((fwd - want).norm() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("rng streams are deterministic and mix separates tags") {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 1));
  CHECK(Rng::mix(1, 2) != Rng::mix(1, 3));
  Rng base(5);
  Rng f1 = base.fork(1);
  Rng f2 = base.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
}

TEST_CASE("rng uniform and normal land in expected ranges") {
  Rng rng(21);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(2.0, 3.0);
    CHECK(u >= 2.0);
    CHECK(u < 3.0);
    const double g = rng.normal();
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
