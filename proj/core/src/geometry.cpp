// SPDX-License-Identifier: Apache-2.0
#include "voxcap/geometry.hpp"

#include <algorithm>
#include <limits>

namespace voxcap {

namespace {
constexpr double kTwoPi = 6.283185307179586477;
}

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n < 1e-15) throw DegenerateInput("cannot normalize near-zero vector");
  return *this / n;
}

Quat Quat::canonical(Quat q) {
  const double n = std::sqrt(q.dot(q));
  if (n < 1e-12) throw NumericalError("quaternion norm too small to normalize");
  q.w /= n; q.x /= n; q.y /= n; q.z /= n;
  bool flip = q.w < 0.0;
  if (q.w == 0.0) {
    if (q.x != 0.0) flip = q.x < 0.0;
    else if (q.y != 0.0) flip = q.y < 0.0;
    else flip = q.z < 0.0;
  }
  if (flip) { q.w = -q.w; q.x = -q.x; q.y = -q.y; q.z = -q.z; }
  return q;
}

Quat Quat::from_wxyz(double w, double x, double y, double z) {
  return canonical(Quat{w, x, y, z});
}

Quat Quat::axis_angle(const Vec3& axis, double angle_rad) {
  const Vec3 a = axis.normalized();
  const double h = 0.5 * angle_rad;
  const double s = std::sin(h);
  return canonical(Quat{std::cos(h), a.x * s, a.y * s, a.z * s});
}

Quat Quat::from_rotvec(const Vec3& r) {
  const double theta = r.norm();
  if (theta < 1e-12) {
    return canonical(Quat{1.0, 0.5 * r.x, 0.5 * r.y, 0.5 * r.z});
  }
  return axis_angle(r / theta, theta);
}

Quat Quat::operator*(const Quat& o) const {
  return canonical(Quat{
      w * o.w - x * o.x - y * o.y - z * o.z,
      w * o.x + x * o.w + y * o.z - z * o.y,
      w * o.y - x * o.z + y * o.w + z * o.x,
      w * o.z + x * o.y - y * o.x + z * o.w});
}

Vec3 Quat::rotate(const Vec3& v) const {
  // v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z)
  const Vec3 u{x, y, z};
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * w + u.cross(t);
}

Vec3 Quat::to_rotvec() const {
  const double s = std::sqrt(x * x + y * y + z * z);
  if (s < 1e-12) return Vec3{x, y, z} * 2.0;
  const double angle = 2.0 * std::atan2(s, w);
  return Vec3{x / s, y / s, z / s} * angle;
}

std::array<double, 9> Quat::to_matrix() const {
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  const double wx = w * x, wy = w * y, wz = w * z;
  return {1 - 2 * (yy + zz), 2 * (xy - wz),     2 * (xz + wy),
          2 * (xy + wz),     1 - 2 * (xx + zz), 2 * (yz - wx),
          2 * (xz - wy),     2 * (yz + wx),     1 - 2 * (xx + yy)};
}

Quat Quat::from_matrix(const std::array<double, 9>& m) {
  const double t = m[0] + m[4] + m[8];
  Quat q;
  if (t > 0.0) {
    double s = std::sqrt(t + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (m[7] - m[5]) / s;
    q.y = (m[2] - m[6]) / s;
    q.z = (m[3] - m[1]) / s;
  } else if (m[0] > m[4] && m[0] > m[8]) {
    double s = std::sqrt(1.0 + m[0] - m[4] - m[8]) * 2.0;
    q.w = (m[7] - m[5]) / s;
    q.x = 0.25 * s;
    q.y = (m[1] + m[3]) / s;
    q.z = (m[2] + m[6]) / s;
  } else if (m[4] > m[8]) {
    double s = std::sqrt(1.0 + m[4] - m[0] - m[8]) * 2.0;
    q.w = (m[2] - m[6]) / s;
    q.x = (m[1] + m[3]) / s;
    q.y = 0.25 * s;
    q.z = (m[5] + m[7]) / s;
  } else {
    double s = std::sqrt(1.0 + m[8] - m[0] - m[4]) * 2.0;
    q.w = (m[3] - m[1]) / s;
    q.x = (m[2] + m[6]) / s;
    q.y = (m[5] + m[7]) / s;
    q.z = 0.25 * s;
  }
  return canonical(q);
}

double Quat::angle() const {
  return 2.0 * std::acos(std::clamp(std::abs(w), 0.0, 1.0));
}

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("camera resolution must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw ConfigError("principal point must be finite");
}

bool Aabb::intersect(const Vec3& o, const Vec3& d, double& t0, double& t1) const {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double oi = o[i], di = d[i];
    const double lo_i = lo[i], hi_i = hi[i];
    if (di == 0.0) {
      if (oi < lo_i || oi > hi_i) return false;
      continue;
    }
    double ta = (lo_i - oi) / di;
    double tb = (hi_i - oi) / di;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 back = eye - target;
  if (back.norm() < 1e-12) throw DegenerateInput("look_at: eye equals target");
  const Vec3 z = back.normalized();
  const Vec3 xr = up.cross(z);
  if (xr.norm() < 1e-9 * up.norm()) {
    throw DegenerateInput("look_at: up is parallel to the view direction");
  }
  const Vec3 x = xr.normalized();
  const Vec3 y = z.cross(x);
  return Pose{eye, Quat::from_matrix({x.x, y.x, z.x,
                                      x.y, y.y, z.y,
                                      x.z, y.z, z.z})};
}

Ray pixel_ray(const Pose& pose, const CameraIntrinsics& intr, const Aabb& bounds,
              int px, int py) {
  const double u = (static_cast<double>(px) + 0.5 - intr.cx) / intr.fx;
  const double v = (intr.cy - (static_cast<double>(py) + 0.5)) / intr.fy;
  const Vec3 dir = pose.rotate_dir(Vec3{u, v, -1.0}.normalized());
  Ray ray{pose.r, dir, 0.0, 0.0};
  double t0, t1;
  if (bounds.intersect(ray.o, ray.d, t0, t1)) {
    const double tn = std::max(t0, 0.0);
    if (tn < t1) {
      ray.t_near = tn;
      ray.t_far = t1;
    }
  }
  return ray;
}

std::vector<Ray> generate_rays(const Pose& pose, const CameraIntrinsics& intr,
                               const Aabb& bounds) {
  intr.validate();
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(intr.width) * intr.height);
  for (int py = 0; py < intr.height; ++py) {
    for (int px = 0; px < intr.width; ++px) {
      rays.push_back(pixel_ray(pose, intr, bounds, px, py));
    }
  }
  return rays;
}

double quat_distance(const Quat& q1, const Quat& q2) {
  return std::clamp(std::abs(q1.dot(q2)), 0.0, 1.0);
}

Pose sample_shell_pose(Rng& rng, const ShellSpec& shell) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, kTwoPi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
  const double r = rng.uniform(shell.r_min, shell.r_max);
  const Vec3 up = std::abs(dir.z) > 0.999 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  return look_at(shell.center + dir * r, shell.center, up);
}

}  // namespace voxcap
