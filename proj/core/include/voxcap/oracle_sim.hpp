// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxcap/trainer.hpp"

namespace voxcap {

enum class ObjectKind { Sphere, Box, Capsule, CompositeCavity };

// Analytic scene description. All dimensions are half-extents or radii in
// meters, in the object's local frame; object_pose places it in the world.
// CompositeCavity is a box with a rectangular pocket opening through its
// bottom face, so the pocket interior is invisible until the object is
// flipped.
struct SceneSpec {
  ObjectKind kind = ObjectKind::Sphere;
  Pose object_pose;

  double sphere_radius = 0.06;
  Vec3 box_half{0.055, 0.075, 0.045};
  double capsule_radius = 0.035;
  double capsule_half_len = 0.06;  // cylindrical section half-length, local x axis
  Vec3 cavity_outer_half{0.07, 0.06, 0.05};
  Vec3 cavity_pocket_half{0.04, 0.035, 0.03};  // pocket spans bottom face upward

  double density = 50.0;  // activated density inside the object, 1/m
  // Region albedos; every kind partitions space into <= 6 regions.
  std::array<Vec3, 6> palette{
      Vec3{0.85, 0.15, 0.12}, Vec3{0.15, 0.75, 0.20}, Vec3{0.16, 0.30, 0.88},
      Vec3{0.92, 0.80, 0.12}, Vec3{0.80, 0.16, 0.78}, Vec3{0.12, 0.82, 0.85},
  };

  bool inside_local(const Vec3& p) const;
  Vec3 albedo_local(const Vec3& p) const;  // defined everywhere, not just inside
  double analytic_volume() const;
  Vec3 local_centroid() const;  // volume centroid in the local frame
  double surface_area() const;
};

struct FlipNoise {
  double rot_std = 0.0;    // radians; rotation error angle ~ N(0, rot_std)
  double trans_std = 0.0;  // meters per axis
  double topple_prob = 0.0;  // probability of an extra 90-degree tip
};

class TruthAudit;

// The simulator's actual flip transform. Reading it requires an audit in
// metrics scope; any other read throws and is counted, so a run can assert
// the estimation pipeline never peeked at ground truth.
class TrueDeltaToken {
 public:
  TrueDeltaToken() = default;
  const Pose& reveal(TruthAudit& audit) const;

 private:
  friend class OracleWorld;
  explicit TrueDeltaToken(const Pose& value) : value_(value) {}
  Pose value_;
};

class TruthAudit {
 public:
  class MetricsScope {
   public:
    explicit MetricsScope(TruthAudit& audit) : audit_(audit) { ++audit_.depth_; }
    ~MetricsScope() { --audit_.depth_; }
    MetricsScope(const MetricsScope&) = delete;
    MetricsScope& operator=(const MetricsScope&) = delete;

   private:
    TruthAudit& audit_;
  };

  bool in_scope() const { return depth_ > 0; }
  int denied_reads() const { return denied_; }

 private:
  friend class TrueDeltaToken;
  int depth_ = 0;
  mutable int denied_ = 0;
};

struct FlipOutcome {
  Pose commanded;
  TrueDeltaToken true_delta;
  bool toppled = false;
};

// Holds the analytic scene plus its baked ground-truth grid. Captures render
// the baked grid through the shared quadrature, so a capture of the current
// scene and render_image of ground_truth() are bit-identical. execute_flip
// perturbs the commanded transform with settling noise and re-bakes.
class OracleWorld {
 public:
  OracleWorld(const SceneSpec& scene, const Aabb& bounds, int resolution);

  const SceneSpec& scene() const { return scene_; }
  const RadianceGrid& ground_truth() const { return gt_; }
  const Pose& initial_object_pose() const { return initial_pose_; }

  ViewSample capture(const Pose& pose, const CameraIntrinsics& intr,
                     const SampleSpec& spec) const;

  FlipOutcome execute_flip(const Pose& commanded_world, const FlipNoise& noise,
                           std::uint64_t seed);

  // Shell poses looking at the shell center; hemisphere -1 keeps view
  // directions from below the center's horizontal plane, +1 from above,
  // 0 everywhere.
  std::vector<Pose> validation_poses(int n, std::uint64_t seed, const ShellSpec& shell,
                                     int hemisphere = 0) const;
  std::vector<ViewSample> validation_set(int n, std::uint64_t seed, const ShellSpec& shell,
                                         const CameraIntrinsics& intr,
                                         const SampleSpec& spec, int hemisphere = 0) const;

  // Uniform-by-area points on the object surface in the current world frame.
  std::vector<Vec3> surface_points(int n, std::uint64_t seed) const;

  Vec3 object_centroid() const;  // true centroid, current world frame

 private:
  bool pose_fits(const Pose& object_pose) const;
  void rebake();

  SceneSpec scene_;
  Pose initial_pose_;
  Aabb bounds_;
  int resolution_;
  RadianceGrid gt_;
};

}  // namespace voxcap
