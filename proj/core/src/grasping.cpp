// SPDX-License-Identifier: Apache-2.0
#include "voxcap/grasping.hpp"

#include <algorithm>
#include <cmath>

namespace voxcap {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

// Smallest-eigenvalue eigenvector of a 3x3 symmetric matrix by cyclic Jacobi.
Vec3 smallest_eigenvector(double a[3][3]) {
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-18) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-30) continue;
        const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  int smallest = 0;
  if (a[1][1] < a[smallest][smallest]) smallest = 1;
  if (a[2][2] < a[smallest][smallest]) smallest = 2;
  return Vec3{v[0][smallest], v[1][smallest], v[2][smallest]}.normalized();
}

// Contact-normal misalignment: angle between the closing axis and the local
// surface normal, folded to [0, pi/2]. Too-small neighborhoods are treated
// as worst case.
double contact_angle(const std::vector<Vec3>& cloud, const Vec3& contact,
                     const Vec3& closing_axis, const GraspConfig& cfg) {
  thread_local std::vector<const Vec3*> near;
  near.clear();
  const double r2 = cfg.normal_radius * cfg.normal_radius;
  for (const Vec3& p : cloud) {
    if ((p - contact).norm2() <= r2) near.push_back(&p);
  }
  if (static_cast<int>(near.size()) < cfg.normal_neighbors_min) return kHalfPi;
  Vec3 mean;
  for (const Vec3* p : near) mean += *p;
  mean *= 1.0 / static_cast<double>(near.size());
  double cov[3][3] = {};
  for (const Vec3* p : near) {
    const Vec3 d = *p - mean;
    const double dv[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) cov[i][j] += dv[i] * dv[j];
    }
  }
  const Vec3 normal = smallest_eigenvector(cov);
  const double c = std::clamp(std::abs(normal.dot(closing_axis)), 0.0, 1.0);
  return std::acos(c);
}

}  // namespace

CandidateSet generate_candidates(const Ensemble& ensemble, const CameraIntrinsics& intr,
                                 const SampleSpec& spec, const ShellSpec& rig,
                                 const GraspConfig& cfg) {
  intr.validate();
  if (cfg.n_views < 1) throw ConfigError("grasp generation needs at least one view");

  const double radius = 0.5 * (rig.r_min + rig.r_max);
  CandidateSet set;

  struct ViewData {
    Pose pose;
    RenderOutput render;
    std::vector<Ray> rays;
  };
  std::vector<ViewData> views;
  views.reserve(cfg.n_views);
  for (int v = 0; v < cfg.n_views; ++v) {
    const double az = 2.0 * kPi * v / cfg.n_views;
    const Vec3 eye = rig.center + Vec3{radius * std::cos(az), radius * std::sin(az), 0.0};
    ViewData vd;
    vd.pose = look_at(eye, rig.center);
    vd.render = render_mean(ensemble, vd.pose, intr, spec);
    vd.rays = generate_rays(vd.pose, intr, ensemble.bounds());
    views.push_back(std::move(vd));
  }

  // Rendered depth is the alpha-weighted sum, so semi-transparent pixels carry
  // depth scaled by their opacity. Dividing it back out gives the expected hit
  // depth conditioned on hitting, which is what unprojection needs; without it
  // silhouette-edge points float toward the camera.
  const auto hit_point = [](const ViewData& vd, std::size_t p) {
    return vd.rays[p].at(vd.render.depth[p] / vd.render.opacity[p]);
  };

  // Fused point cloud from all opaque pixels.
  std::vector<int> cloud_view;
  for (int v = 0; v < cfg.n_views; ++v) {
    const ViewData& vd = views[v];
    for (std::size_t p = 0; p < vd.render.n_pixels(); ++p) {
      if (vd.render.opacity[p] <= cfg.opacity_threshold || vd.rays[p].empty()) continue;
      set.cloud.push_back(hit_point(vd, p));
      cloud_view.push_back(v);
    }
  }
  if (set.cloud.empty()) throw EmptyModel("no opaque pixels in any grasp view");
  for (const Vec3& p : set.cloud) set.cloud_centroid += p;
  set.cloud_centroid *= 1.0 / static_cast<double>(set.cloud.size());

  for (int v = 0; v < cfg.n_views; ++v) {
    const ViewData& vd = views[v];

    // Silhouette span per scanline; width from the unprojected edge contacts.
    struct Row {
      int y, lx, rx;
      double width;
      Vec3 pl, pr;
    };
    std::vector<Row> rows;
    for (int y = 0; y < intr.height; ++y) {
      int lx = -1, rx = -1;
      for (int x = 0; x < intr.width; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * intr.width + x;
        if (vd.render.opacity[p] > cfg.opacity_threshold && !vd.rays[p].empty()) {
          if (lx < 0) lx = x;
          rx = x;
        }
      }
      if (lx < 0 || rx <= lx) continue;
      const std::size_t pl_i = static_cast<std::size_t>(y) * intr.width + lx;
      const std::size_t pr_i = static_cast<std::size_t>(y) * intr.width + rx;
      const Vec3 pl = hit_point(vd, pl_i);
      const Vec3 pr = hit_point(vd, pr_i);
      rows.push_back({y, lx, rx, (pr - pl).norm(), pl, pr});
    }
    if (rows.size() < 3) continue;

    // Local width minima with plateau slack, then suppression of
    // near-duplicate rows. The slack keeps constant-width silhouettes (box
    // faces) proposing pinches despite sub-millimeter measurement ripple.
    std::vector<int> minima;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
      if (rows[i].width <= rows[i - 1].width + cfg.width_tol &&
          rows[i].width <= rows[i + 1].width + cfg.width_tol) {
        minima.push_back(static_cast<int>(i));
      }
    }
    std::stable_sort(minima.begin(), minima.end(),
                     [&](int a, int b) { return rows[a].width < rows[b].width; });
    std::vector<int> kept;
    for (int i : minima) {
      bool suppressed = false;
      for (int j : kept) {
        if (std::abs(rows[i].y - rows[j].y) <= cfg.nms_rows) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) kept.push_back(i);
      if (static_cast<int>(kept.size()) >= cfg.max_per_view) break;
    }

    for (int i : kept) {
      const Row& row = rows[i];
      if (row.width < cfg.min_width || row.width > cfg.max_width) continue;
      GraspCandidate cand;
      cand.contact_left = row.pl;
      cand.contact_right = row.pr;
      cand.width = row.width;
      cand.closing_axis = (row.pr - row.pl) / row.width;
      cand.approach = vd.pose.rotate_dir({0, 0, -1});
      cand.view_index = v;
      cand.view_pose = vd.pose;
      cand.patch_row = row.y;
      cand.patch_col = (row.lx + row.rx) / 2;

      const Vec3 mid = (row.pl + row.pr) * 0.5;
      Vec3 xg = cand.closing_axis - cand.approach * cand.closing_axis.dot(cand.approach);
      xg = xg.norm() > 1e-9 ? xg.normalized() : Vec3{1, 0, 0};
      const Vec3 zg = cand.approach;
      const Vec3 yg = zg.cross(xg);
      cand.gripper_pose = Pose{mid, Quat::from_matrix({xg.x, yg.x, zg.x,
                                                       xg.y, yg.y, zg.y,
                                                       xg.z, yg.z, zg.z})};

      cand.theta = std::max(contact_angle(set.cloud, row.pl, cand.closing_axis, cfg),
                            contact_angle(set.cloud, row.pr, cand.closing_axis, cfg));

      double opacity_acc = 0.0;
      int opacity_n = 0;
      for (int dy = -cfg.patch_half; dy <= cfg.patch_half; ++dy) {
        for (int dx = -cfg.patch_half; dx <= cfg.patch_half; ++dx) {
          const int px = std::clamp(cand.patch_col + dx, 0, intr.width - 1);
          const int py = std::clamp(cand.patch_row + dy, 0, intr.height - 1);
          opacity_acc += vd.render.opacity[static_cast<std::size_t>(py) * intr.width + px];
          ++opacity_n;
        }
      }
      cand.patch_opacity = opacity_acc / opacity_n;

      set.candidates.push_back(cand);
    }
  }
  return set;
}

std::vector<GraspCandidate> prune_candidates(const CandidateSet& set, const GraspConfig& cfg) {
  std::vector<GraspCandidate> kept;
  for (const GraspCandidate& cand : set.candidates) {
    if ((cand.gripper_pose.r - set.cloud_centroid).norm() > cfg.max_center_dist) continue;
    if (cand.theta > cfg.max_theta) continue;
    if (cand.patch_opacity < cfg.min_patch_opacity) continue;
    kept.push_back(cand);
  }
  return kept;
}

double depth_variance(const Ensemble& ensemble, const std::vector<Ray>& rays,
                      const SampleSpec& spec) {
  if (rays.empty()) throw DegenerateInput("depth_variance needs at least one ray");
  const int m = ensemble.size();
  double acc = 0.0;
  std::vector<double> depths(m);
  for (const Ray& ray : rays) {
    double mean = 0.0;
    for (int k = 0; k < m; ++k) {
      depths[k] = render_ray(ensemble.members[k], ray, spec).depth;
      mean += depths[k];
    }
    mean /= m;
    double var = 0.0;
    for (int k = 0; k < m; ++k) var += (mean - depths[k]) * (mean - depths[k]);
    acc += var / m;
  }
  return acc / static_cast<double>(rays.size());
}

std::vector<Ray> patch_rays(const GraspCandidate& cand, const CameraIntrinsics& intr,
                            const Aabb& bounds, const GraspConfig& cfg) {
  std::vector<Ray> rays;
  rays.reserve((2 * cfg.patch_half + 1) * (2 * cfg.patch_half + 1));
  for (int dy = -cfg.patch_half; dy <= cfg.patch_half; ++dy) {
    for (int dx = -cfg.patch_half; dx <= cfg.patch_half; ++dx) {
      const int px = std::clamp(cand.patch_col + dx, 0, intr.width - 1);
      const int py = std::clamp(cand.patch_row + dy, 0, intr.height - 1);
      rays.push_back(pixel_ray(cand.view_pose, intr, bounds, px, py));
    }
  }
  return rays;
}

std::optional<ScoredGrasp> score_and_select(const Ensemble& ensemble,
                                            const std::vector<GraspCandidate>& candidates,
                                            const CameraIntrinsics& intr,
                                            const SampleSpec& spec, const GraspConfig& cfg) {
  std::optional<ScoredGrasp> best;
  for (const GraspCandidate& cand : candidates) {
    const double ud = depth_variance(ensemble, patch_rays(cand, intr, ensemble.bounds(), cfg),
                                     spec);
    GraspScore score;
    score.theta = cand.theta;
    score.depth_variance = ud;
    score.total = (1.0 - cand.theta) / std::max(ud, cfg.depth_var_floor);
    if (!best || score.total > best->score.total) best = ScoredGrasp{cand, score};
  }
  return best;
}

}  // namespace voxcap
