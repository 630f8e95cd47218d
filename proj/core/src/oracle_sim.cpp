// SPDX-License-Identifier: Apache-2.0
#include "voxcap/oracle_sim.hpp"

#include <algorithm>
#include <cmath>

namespace voxcap {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01_albedo(double v) { return std::clamp(v, 0.02, 0.98); }

}  // namespace

bool SceneSpec::inside_local(const Vec3& p) const {
  switch (kind) {
    case ObjectKind::Sphere:
      return p.norm2() <= sphere_radius * sphere_radius;
    case ObjectKind::Box:
      return std::abs(p.x) <= box_half.x && std::abs(p.y) <= box_half.y &&
             std::abs(p.z) <= box_half.z;
    case ObjectKind::Capsule: {
      const double ax = std::clamp(p.x, -capsule_half_len, capsule_half_len);
      const Vec3 d{p.x - ax, p.y, p.z};
      return d.norm2() <= capsule_radius * capsule_radius;
    }
    case ObjectKind::CompositeCavity: {
      const Vec3& h = cavity_outer_half;
      const Vec3& c = cavity_pocket_half;
      if (std::abs(p.x) > h.x || std::abs(p.y) > h.y || std::abs(p.z) > h.z) return false;
      const bool in_pocket = std::abs(p.x) < c.x && std::abs(p.y) < c.y &&
                             p.z < -h.z + 2.0 * c.z;
      return !in_pocket;
    }
  }
  return false;
}

Vec3 SceneSpec::albedo_local(const Vec3& p) const {
  switch (kind) {
    case ObjectKind::Sphere: {
      const int octant = (p.x > 0 ? 1 : 0) + (p.y > 0 ? 2 : 0) + (p.z > 0 ? 4 : 0);
      return palette[octant % 6];
    }
    case ObjectKind::Box: {
      const double ax = std::abs(p.x) / box_half.x;
      const double ay = std::abs(p.y) / box_half.y;
      const double az = std::abs(p.z) / box_half.z;
      if (ax >= ay && ax >= az) return palette[p.x >= 0 ? 0 : 1];
      if (ay >= az) return palette[p.y >= 0 ? 2 : 3];
      return palette[p.z >= 0 ? 4 : 5];
    }
    case ObjectKind::Capsule: {
      if (p.x > capsule_half_len) return palette[0];
      if (p.x < -capsule_half_len) return palette[1];
      const double ang = std::atan2(p.z, p.y);  // barrel quadrants
      const int sector = static_cast<int>(std::floor((ang + kPi) / (kPi / 2.0)));
      return palette[2 + std::clamp(sector, 0, 3)];
    }
    case ObjectKind::CompositeCavity: {
      const Vec3& h = cavity_outer_half;
      const Vec3& c = cavity_pocket_half;
      // Pocket interior plus a thin shell of wall around it, so nodes that
      // bound the pocket surface render in the hidden color.
      const double margin = 0.012;
      if (std::abs(p.x) < c.x + margin && std::abs(p.y) < c.y + margin &&
          p.z < -h.z + 2.0 * c.z + margin) {
        return palette[5];
      }
      const double ax = std::abs(p.x) / h.x;
      const double ay = std::abs(p.y) / h.y;
      const double az = std::abs(p.z) / h.z;
      if (ax >= ay && ax >= az) return palette[p.x >= 0 ? 0 : 1];
      if (ay >= az) return palette[p.y >= 0 ? 2 : 3];
      return palette[4];
    }
  }
  return palette[0];
}

double SceneSpec::analytic_volume() const {
  switch (kind) {
    case ObjectKind::Sphere:
      return 4.0 / 3.0 * kPi * sphere_radius * sphere_radius * sphere_radius;
    case ObjectKind::Box:
      return 8.0 * box_half.x * box_half.y * box_half.z;
    case ObjectKind::Capsule:
      return kPi * capsule_radius * capsule_radius * (2.0 * capsule_half_len) +
             4.0 / 3.0 * kPi * capsule_radius * capsule_radius * capsule_radius;
    case ObjectKind::CompositeCavity:
      return 8.0 * cavity_outer_half.x * cavity_outer_half.y * cavity_outer_half.z -
             8.0 * cavity_pocket_half.x * cavity_pocket_half.y * cavity_pocket_half.z;
  }
  return 0.0;
}

Vec3 SceneSpec::local_centroid() const {
  if (kind != ObjectKind::CompositeCavity) return {};
  const double vo = 8.0 * cavity_outer_half.x * cavity_outer_half.y * cavity_outer_half.z;
  const double vp = 8.0 * cavity_pocket_half.x * cavity_pocket_half.y * cavity_pocket_half.z;
  const double pocket_cz = -cavity_outer_half.z + cavity_pocket_half.z;
  return {0.0, 0.0, -vp * pocket_cz / (vo - vp)};
}

double SceneSpec::surface_area() const {
  switch (kind) {
    case ObjectKind::Sphere:
      return 4.0 * kPi * sphere_radius * sphere_radius;
    case ObjectKind::Box:
      return 8.0 * (box_half.x * box_half.y + box_half.y * box_half.z +
                    box_half.x * box_half.z);
    case ObjectKind::Capsule:
      return 2.0 * kPi * capsule_radius * (2.0 * capsule_half_len) +
             4.0 * kPi * capsule_radius * capsule_radius;
    case ObjectKind::CompositeCavity: {
      const Vec3& h = cavity_outer_half;
      const Vec3& c = cavity_pocket_half;
      const double box = 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z);
      const double opening = 4.0 * c.x * c.y;
      const double walls = 2.0 * (2.0 * c.x + 2.0 * c.y) * (2.0 * c.z);
      return box - opening + walls + opening;  // ceiling area equals the opening
    }
  }
  return 0.0;
}

const Pose& TrueDeltaToken::reveal(TruthAudit& audit) const {
  if (!audit.in_scope()) {
    ++audit.denied_;
    throw std::logic_error("true flip delta read outside a metrics scope");
  }
  return value_;
}

OracleWorld::OracleWorld(const SceneSpec& scene, const Aabb& bounds, int resolution)
    : scene_(scene), initial_pose_(scene.object_pose), bounds_(bounds),
      resolution_(resolution), gt_(resolution, resolution, resolution, bounds) {
  if (resolution < 2) throw ConfigError("oracle grid resolution must be >= 2");
  rebake();
}

bool OracleWorld::pose_fits(const Pose& object_pose) const {
  // Conservative fit check: the object's bounding sphere must stay inside.
  double max_r = 0.0;
  switch (scene_.kind) {
    case ObjectKind::Sphere: max_r = scene_.sphere_radius; break;
    case ObjectKind::Box: max_r = scene_.box_half.norm(); break;
    case ObjectKind::Capsule: max_r = scene_.capsule_half_len + scene_.capsule_radius; break;
    case ObjectKind::CompositeCavity: max_r = scene_.cavity_outer_half.norm(); break;
  }
  const Vec3 c = object_pose.r;
  for (int a = 0; a < 3; ++a) {
    if (c[a] - max_r < bounds_.lo[a] || c[a] + max_r > bounds_.hi[a]) return false;
  }
  return true;
}

void OracleWorld::rebake() {
  if (!pose_fits(scene_.object_pose)) {
    throw DegenerateInput("object does not fit inside the ground-truth grid bounds");
  }

  const Pose to_local = scene_.object_pose.inverse();
  const double raw_inside = RadianceGrid::softplus_inv(scene_.density);
  const double raw_outside = RadianceGrid::softplus_inv(0.0);
  for (int iz = 0; iz < gt_.nz(); ++iz) {
    for (int iy = 0; iy < gt_.ny(); ++iy) {
      for (int ix = 0; ix < gt_.nx(); ++ix) {
        const std::size_t i = gt_.node_index(ix, iy, iz);
        const Vec3 local = to_local.apply(gt_.node_position(ix, iy, iz));
        gt_.set_density_raw(i, scene_.inside_local(local) ? raw_inside : raw_outside);
        const Vec3 albedo = scene_.albedo_local(local);
        gt_.set_color_raw(i, 0, RadianceGrid::logit(clamp01_albedo(albedo.x)));
        gt_.set_color_raw(i, 1, RadianceGrid::logit(clamp01_albedo(albedo.y)));
        gt_.set_color_raw(i, 2, RadianceGrid::logit(clamp01_albedo(albedo.z)));
      }
    }
  }
}

ViewSample OracleWorld::capture(const Pose& pose, const CameraIntrinsics& intr,
                                const SampleSpec& spec) const {
  const RenderOutput render = render_image(gt_, pose, intr, spec);
  ViewSample view;
  view.pose = pose;
  view.intr = intr;
  view.image = render.color;
  view.mask.resize(render.n_pixels());
  for (std::size_t p = 0; p < render.n_pixels(); ++p) {
    view.mask[p] = render.opacity[p] > 0.5 ? 1 : 0;
  }
  return view;
}

FlipOutcome OracleWorld::execute_flip(const Pose& commanded_world, const FlipNoise& noise,
                                      std::uint64_t seed) {
  Rng rng(seed);
  // Fixed draw order: axis, angle, translation, topple chance, topple azimuth.
  const double az = rng.uniform(-1.0, 1.0);
  const double aphi = rng.uniform(0.0, 2.0 * kPi);
  const double s = std::sqrt(std::max(0.0, 1.0 - az * az));
  const Vec3 axis{s * std::cos(aphi), s * std::sin(aphi), az};
  const double angle = noise.rot_std > 0.0 ? rng.normal(0.0, noise.rot_std) : (rng.normal(), 0.0);
  Vec3 t_noise;
  if (noise.trans_std > 0.0) {
    t_noise = {rng.normal(0.0, noise.trans_std), rng.normal(0.0, noise.trans_std),
               rng.normal(0.0, noise.trans_std)};
  } else {
    rng.normal(); rng.normal(); rng.normal();
  }
  const bool toppled = rng.uniform() < noise.topple_prob;
  const double topple_phi = rng.uniform(0.0, 2.0 * kPi);

  Quat rot = std::abs(angle) > 0.0 ? Quat::axis_angle(axis, angle) : Quat::identity();
  if (toppled) {
    const Vec3 tip_axis{std::cos(topple_phi), std::sin(topple_phi), 0.0};
    rot = Quat::axis_angle(tip_axis, kPi / 2.0) * rot;
  }

  const Vec3 c_after = commanded_world.apply(object_centroid());
  const Pose perturb{c_after + t_noise - rot.rotate(c_after), rot};
  const Pose true_delta = perturb.compose(commanded_world);

  // Validate before mutating so a rejected flip leaves the world intact.
  const Pose landed = true_delta.compose(scene_.object_pose);
  if (!pose_fits(landed)) {
    throw DegenerateInput("flip would move the object outside the workspace");
  }
  scene_.object_pose = landed;
  rebake();

  FlipOutcome outcome;
  outcome.commanded = commanded_world;
  outcome.true_delta = TrueDeltaToken(true_delta);
  outcome.toppled = toppled;
  return outcome;
}

std::vector<Pose> OracleWorld::validation_poses(int n, std::uint64_t seed,
                                                const ShellSpec& shell, int hemisphere) const {
  Rng rng(seed);
  std::vector<Pose> poses;
  poses.reserve(n);
  int guard = 0;
  while (static_cast<int>(poses.size()) < n) {
    if (++guard > 10000 * std::max(1, n)) {
      throw NumericalError("hemisphere rejection sampling failed to converge");
    }
    const Pose pose = sample_shell_pose(rng, shell);
    const double dz = pose.r.z - shell.center.z;
    if (hemisphere < 0 && !(dz < 0.0)) continue;
    if (hemisphere > 0 && !(dz > 0.0)) continue;
    poses.push_back(pose);
  }
  return poses;
}

std::vector<ViewSample> OracleWorld::validation_set(int n, std::uint64_t seed,
                                                    const ShellSpec& shell,
                                                    const CameraIntrinsics& intr,
                                                    const SampleSpec& spec,
                                                    int hemisphere) const {
  std::vector<ViewSample> views;
  views.reserve(n);
  for (const Pose& pose : validation_poses(n, seed, shell, hemisphere)) {
    views.push_back(capture(pose, intr, spec));
  }
  return views;
}

std::vector<Vec3> OracleWorld::surface_points(int n, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(n);

  auto sphere_dir = [&rng]() {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3{s * std::cos(phi), s * std::sin(phi), z};
  };

  auto box_point = [&rng](const Vec3& h) {
    const double areas[3] = {h.y * h.z, h.x * h.z, h.x * h.y};
    const double total = areas[0] + areas[1] + areas[2];
    double pick = rng.uniform(0.0, total);
    int axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Vec3 p{rng.uniform(-h.x, h.x), rng.uniform(-h.y, h.y), rng.uniform(-h.z, h.z)};
    if (axis == 0) p.x = sign * h.x;
    if (axis == 1) p.y = sign * h.y;
    if (axis == 2) p.z = sign * h.z;
    return p;
  };

  while (static_cast<int>(pts.size()) < n) {
    Vec3 local;
    switch (scene_.kind) {
      case ObjectKind::Sphere:
        local = sphere_dir() * scene_.sphere_radius;
        break;
      case ObjectKind::Box:
        local = box_point(scene_.box_half);
        break;
      case ObjectKind::Capsule: {
        const double side = 2.0 * kPi * scene_.capsule_radius * 2.0 * scene_.capsule_half_len;
        const double caps = 4.0 * kPi * scene_.capsule_radius * scene_.capsule_radius;
        if (rng.uniform(0.0, side + caps) < side) {
          const double x = rng.uniform(-scene_.capsule_half_len, scene_.capsule_half_len);
          const double ang = rng.uniform(0.0, 2.0 * kPi);
          local = {x, scene_.capsule_radius * std::cos(ang),
                   scene_.capsule_radius * std::sin(ang)};
        } else {
          Vec3 d = sphere_dir();
          const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
          d.x = sign * std::abs(d.x);
          local = Vec3{sign * scene_.capsule_half_len, 0, 0} + d * scene_.capsule_radius;
        }
        break;
      }
      case ObjectKind::CompositeCavity: {
        const Vec3& h = scene_.cavity_outer_half;
        const Vec3& c = scene_.cavity_pocket_half;
        const double box_area = 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z);
        const double walls = 2.0 * (2.0 * c.x + 2.0 * c.y) * (2.0 * c.z);
        const double ceiling = 4.0 * c.x * c.y;
        const double pick = rng.uniform(0.0, box_area + walls + ceiling);
        if (pick < box_area) {
          // Outer shell; points inside the bottom opening are re-drawn.
          local = box_point(h);
          if (local.z == -h.z && std::abs(local.x) < c.x && std::abs(local.y) < c.y) continue;
        } else if (pick < box_area + walls) {
          const double u = rng.uniform(0.0, 2.0 * (2.0 * c.x + 2.0 * c.y));
          const double z = rng.uniform(-h.z, -h.z + 2.0 * c.z);
          if (u < 2.0 * c.x) local = {u - c.x, c.y, z};
          else if (u < 4.0 * c.x) local = {u - 2.0 * c.x - c.x, -c.y, z};
          else if (u < 4.0 * c.x + 2.0 * c.y) local = {c.x, u - 4.0 * c.x - c.y, z};
          else local = {-c.x, u - 4.0 * c.x - 2.0 * c.y - c.y, z};
        } else {
          local = {rng.uniform(-c.x, c.x), rng.uniform(-c.y, c.y), -h.z + 2.0 * c.z};
        }
        break;
      }
    }
    pts.push_back(scene_.object_pose.apply(local));
  }
  return pts;
}

Vec3 OracleWorld::object_centroid() const {
  return scene_.object_pose.apply(scene_.local_centroid());
}

}  // namespace voxcap
