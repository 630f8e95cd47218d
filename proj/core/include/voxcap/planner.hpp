// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "voxcap/common.hpp"
#include "voxcap/geometry.hpp"
#include "voxcap/rng.hpp"
#include "voxcap/trainer.hpp"
#include "voxcap/uncertainty.hpp"

namespace voxcap {

enum class ActionKind { Capture, Move, Flip };

struct Action {
  ActionKind kind = ActionKind::Capture;
  Pose view;              // capture pose reached by the action, world frame
  double cost = 0.0;      // Gamma(a)
  double utility = 0.0;   // normalized uncertainty at `view`
  double loss = 0.0;      // lambda * Gamma - utility
};

struct CostParams {
  double lambda = 1.0;
  double alpha1 = 0.3;  // rotation cost per unit (1 - |<q1,q2>|)
  double alpha2 = 1.0;  // translation cost per meter
  double alpha3 = 1.0;  // flat flip cost
};

struct PlannerConfig {
  int n_random = 256;       // shell samples scored in the coarse pass
  int k_subset = 8;         // diverse seeds refined locally
  int refine_iters = 10;    // local-search iterations per seed
  double step_r = 0.02;     // initial radial step, meters
  double step_ang = 0.2;    // initial azimuth/elevation step, radians
  double diversity_w = 0.35;  // rotation weight in the pose metric; a shell
                              // radius makes one radian comparable to its arc
  bool flip_enabled = true;
  bool use_fd_gradient = false;  // finite-difference descent instead of
                                 // pattern search in the refinement stage
  std::uint64_t seed = 0;
};

// Action budget for one experiment. Overdraft is an error that terminates
// the active loop cleanly.
struct Budget {
  double total = 0.0;
  double spent = 0.0;
  void charge(double cost) {
    if (cost < 0.0) throw ConfigError("action cost must be nonnegative");
    if (spent + cost > total + 1e-9) throw BudgetExhausted("action budget exhausted");
    spent += cost;
  }
  double remaining() const { return total - spent; }
};

double action_cost(ActionKind kind, const Pose& current, const Pose& target,
                   const CostParams& cp);
inline double action_cost(const Action& a, const Pose& current, const CostParams& cp) {
  return action_cost(a.kind, current, a.view, cp);
}

// Everything a view evaluation needs. Candidate poses live in the world
// frame; eval_frame maps them into the ensemble's native frame (the inverse
// of the accumulated object motion, identity while the object sits where it
// was trained).
struct EvalContext {
  const Ensemble* ensemble = nullptr;
  const NormalizationContext* norm = nullptr;
  CameraIntrinsics intr;
  SampleSpec spec;
  Pose eval_frame;
};

// L(a) = lambda * Gamma(a) - U_norm(view). `extra_cost` carries the flip
// surcharge when the move is evaluated inside the flip branch.
double objective(const EvalContext& ctx, const Pose& current, const Pose& view,
                 const CostParams& cp, double extra_cost = 0.0);

// Greedy farthest-point subset under m(p,p') = |r-r'| + w*(1 - |<q,q'>|),
// seeded at the lowest-scoring element. Returns indices into `poses`.
std::vector<int> select_diverse_subset(const std::vector<Pose>& poses,
                                       const std::vector<double>& scores, int k, double w);

struct TraceRow {
  int candidate_id = 0;
  int phase = 0;  // 0 coarse, 1 refine
  Pose view;
  double gamma = 0.0;
  double u_norm = 0.0;
  double loss = 0.0;
  bool selected = false;
};

struct ViewSearchResult {
  Pose view;
  double loss = 0.0;
  double utility = 0.0;
  double gamma = 0.0;
  std::vector<TraceRow> trace;
};

// Best next capture pose on the shell: random scoring pass, diverse subset,
// then local refinement over (radius, azimuth, elevation) around each seed.
// `reachable` may reject poses; NoReachablePose if it rejects every sample.
ViewSearchResult next_best_view(const EvalContext& ctx, const Pose& current,
                                const ShellSpec& shell, const CostParams& cp,
                                const PlannerConfig& pc, double extra_cost = 0.0,
                                const std::function<bool(const Pose&)>& reachable = {});

struct Plan {
  Action action;
  // Set when action.kind == Flip: the first capture to take after flipping.
  std::optional<Pose> post_flip_view;
  std::vector<TraceRow> trace;
};

// Compare the best direct next view against the best view after a flip.
// The flip branch evaluates candidates in the anticipated post-flip frame
// (`flipped_ctx`) and carries the flip cost; it only runs when a feasible
// grasp supplied that context and flips are enabled.
Plan plan_with_flip(const EvalContext& ctx, const std::optional<EvalContext>& flipped_ctx,
                    const Pose& current, const ShellSpec& shell, const CostParams& cp,
                    const PlannerConfig& pc,
                    const std::function<bool(const Pose&)>& reachable = {});

void write_planner_trace_csv(const std::string& path,
                             const std::vector<std::pair<int, std::vector<TraceRow>>>& rows);

}  // namespace voxcap
