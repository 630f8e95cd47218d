// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "voxcap/common.hpp"
#include "voxcap/rng.hpp"

namespace voxcap {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const;

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Unit quaternion, canonicalized so the representation of a rotation is
// unique (w >= 0; ties broken on the first nonzero component).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_wxyz(double w, double x, double y, double z);
  static Quat axis_angle(const Vec3& axis, double angle_rad);
  // rotvec = axis * angle; exp map of so(3)
  static Quat from_rotvec(const Vec3& r);
  static Quat from_matrix(const std::array<double, 9>& m);  // row-major

  Quat operator*(const Quat& o) const;  // composition: rotate by o, then by this
  Quat conjugate() const { return canonical(Quat{w, -x, -y, -z}); }
  Vec3 rotate(const Vec3& v) const;
  Vec3 to_rotvec() const;  // log map, |angle| <= pi
  std::array<double, 9> to_matrix() const;
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double angle() const;  // rotation angle in [0, pi]

 private:
  static Quat canonical(Quat q);
};

// Rigid transform p -> q.rotate(p) + r.
struct Pose {
  Vec3 r;
  Quat q;

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return q.rotate(p) + r; }
  Vec3 rotate_dir(const Vec3& d) const { return q.rotate(d); }

  // this ∘ other: apply `other` first, then this.
  Pose compose(const Pose& other) const {
    return {q.rotate(other.r) + r, q * other.q};
  }
  Pose inverse() const {
    const Quat qi = q.conjugate();
    return {qi.rotate(-r), qi};
  }
};

struct CameraIntrinsics {
  int width = 0, height = 0;
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;

  void validate() const;
};

// t_near < t_far iff the ray intersects the scene bounds; empty() rays carry
// zero radiance and are skipped by the renderer.
struct Ray {
  Vec3 o;
  Vec3 d;  // unit
  double t_near = 0.0;
  double t_far = 0.0;

  bool empty() const { return !(t_near < t_far); }
  Vec3 at(double t) const { return o + d * t; }
};

struct Aabb {
  Vec3 lo, hi;

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return (lo + hi) * 0.5; }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }
  // Slab test; on hit returns [t0, t1] with t0 <= t1.
  bool intersect(const Vec3& o, const Vec3& d, double& t0, double& t1) const;
};

// Spherical shell of viewpoints around a working center; the sampling domain
// shared by the planner, probe normalization, and baseline policies.
struct ShellSpec {
  Vec3 center;
  double r_min = 0.0;
  double r_max = 0.0;
};

// Camera pose at `eye` looking at `target`. Camera frame: x right, y up,
// z backward (looks along -z). Throws DegenerateInput when eye == target or
// up is parallel to the view direction.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0, 0, 1});

// Ray through the center of pixel (px, py), clipped to bounds.
Ray pixel_ray(const Pose& pose, const CameraIntrinsics& intr, const Aabb& bounds,
              int px, int py);

// All pixel rays in row-major order (py * width + px).
std::vector<Ray> generate_rays(const Pose& pose, const CameraIntrinsics& intr,
                               const Aabb& bounds);

// |<q1, q2>|: 1 for identical rotations, 0 for 180 degrees apart. Sign
// invariance makes this a metric on rotations, not on quaternion vectors.
double quat_distance(const Quat& q1, const Quat& q2);

// Uniform view pose on the shell: direction uniform on the sphere, radius
// uniform in [r_min, r_max], camera looking at the center.
Pose sample_shell_pose(Rng& rng, const ShellSpec& shell);

}  // namespace voxcap
