// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "voxcap/trainer.hpp"

namespace voxcap {

// Antipodal side-grasp hypothesis extracted from a lateral depth render.
struct GraspCandidate {
  Pose gripper_pose;   // z = approach (camera forward), x = closing axis
  Vec3 contact_left, contact_right;
  Vec3 closing_axis;   // unit, left contact -> right contact
  Vec3 approach;       // unit
  double width = 0.0;  // contact separation, meters
  double theta = 0.0;  // worst contact-normal misalignment, radians
  double patch_opacity = 0.0;  // mean rendered opacity over the contact patch
  int view_index = 0;
  Pose view_pose;
  int patch_row = 0, patch_col = 0;  // patch center pixel in the source view
};

struct GraspConfig {
  int n_views = 8;               // lateral ring cameras
  double opacity_threshold = 0.5;
  int patch_half = 4;            // (2h+1)^2 patch for opacity and depth variance
  double min_width = 0.005;
  double max_width = 0.12;
  double width_tol = 0.002;      // plateau slack when testing local width minima;
                                 // constant-width silhouettes (box faces) must
                                 // still propose pinches
  int max_per_view = 4;
  int nms_rows = 2;              // scanline suppression window
  int normal_neighbors_min = 8;
  double normal_radius = 0.012;  // cloud neighborhood for contact normals
  double max_center_dist = 0.09;
  double max_theta = 0.9;        // keeps 1 - theta positive
  double min_patch_opacity = 0.6;
  double depth_var_floor = 1e-8;
  double feasible_threshold = 1e4;
};

struct GraspScore {
  double total = 0.0;  // (1 - theta) / depth variance
  double theta = 0.0;
  double depth_variance = 0.0;
};

struct ScoredGrasp {
  GraspCandidate candidate;
  GraspScore score;
};

struct CandidateSet {
  std::vector<GraspCandidate> candidates;
  std::vector<Vec3> cloud;
  Vec3 cloud_centroid;
};

// Renders a ring of n_views lateral views of the ensemble mean, unprojects
// opaque pixels into a point cloud, and proposes a grasp at every scanline
// width minimum: contacts at the silhouette edges, closing axis between them,
// approach along the camera forward. Contact angles come from PCA normals of
// the cloud neighborhoods. Throws EmptyModel when no view sees any opaque
// pixel.
CandidateSet generate_candidates(const Ensemble& ensemble, const CameraIntrinsics& intr,
                                 const SampleSpec& spec, const ShellSpec& rig,
                                 const GraspConfig& cfg);

// Keeps candidates that pass all three checks: close enough to the cloud
// centroid, contact angle within max_theta, and patch opacity at least
// min_patch_opacity.
std::vector<GraspCandidate> prune_candidates(const CandidateSet& set, const GraspConfig& cfg);

// Mean over rays of the per-ray ensemble depth variance (1/M convention).
double depth_variance(const Ensemble& ensemble, const std::vector<Ray>& rays,
                      const SampleSpec& spec);

// Rays of the candidate's contact patch in its source view.
std::vector<Ray> patch_rays(const GraspCandidate& cand, const CameraIntrinsics& intr,
                            const Aabb& bounds, const GraspConfig& cfg);

// Scores G = (1 - theta) / max(U_d, floor) and returns the best candidate;
// nullopt when the candidate list is empty.
std::optional<ScoredGrasp> score_and_select(const Ensemble& ensemble,
                                            const std::vector<GraspCandidate>& candidates,
                                            const CameraIntrinsics& intr,
                                            const SampleSpec& spec, const GraspConfig& cfg);

inline bool grasp_feasible(const GraspScore& score, const GraspConfig& cfg) {
  return score.total >= cfg.feasible_threshold;
}

}  // namespace voxcap
