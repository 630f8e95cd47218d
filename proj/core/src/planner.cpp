// SPDX-License-Identifier: Apache-2.0
#include "voxcap/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace voxcap {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ShellCoords {
  double r, az, el;
};

ShellCoords to_shell(const Pose& pose, const ShellSpec& shell) {
  const Vec3 d = pose.r - shell.center;
  const double r = d.norm();
  const double el = std::asin(std::clamp(d.z / std::max(r, 1e-12), -1.0, 1.0));
  const double az = std::atan2(d.y, d.x);
  return {r, az, el};
}

Pose from_shell(const ShellCoords& s, const ShellSpec& shell) {
  const double ce = std::cos(s.el);
  const Vec3 dir{ce * std::cos(s.az), ce * std::sin(s.az), std::sin(s.el)};
  const Vec3 up = std::abs(dir.z) > 0.999 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  return look_at(shell.center + dir * s.r, shell.center, up);
}

ShellCoords clamp_to_shell(ShellCoords s, const ShellSpec& shell) {
  // Elevation stays off the poles so look_at keeps a valid up vector;
  // physical elevation limits are the reachability predicate's job.
  constexpr double kElMax = 0.495 * kPi;
  s.r = std::clamp(s.r, shell.r_min, shell.r_max);
  s.el = std::clamp(s.el, -kElMax, kElMax);
  if (s.az > kPi) s.az -= 2.0 * kPi;
  if (s.az < -kPi) s.az += 2.0 * kPi;
  return s;
}

struct Eval {
  double gamma;
  double u_norm;
  double loss;
};

Eval evaluate(const EvalContext& ctx, const Pose& current, const Pose& view,
              const CostParams& cp, double extra_cost) {
  Eval e;
  e.gamma = action_cost(ActionKind::Move, current, view, cp) + extra_cost;
  const Pose model_view = ctx.eval_frame.compose(view);
  e.u_norm = normalized_uncertainty(
      *ctx.norm, pose_uncertainty(*ctx.ensemble, model_view, ctx.intr, ctx.spec));
  e.loss = cp.lambda * e.gamma - e.u_norm;
  return e;
}

}  // namespace

double action_cost(ActionKind kind, const Pose& current, const Pose& target,
                   const CostParams& cp) {
  switch (kind) {
    case ActionKind::Capture:
      return 0.0;
    case ActionKind::Move:
      return cp.alpha1 * (1.0 - quat_distance(current.q, target.q)) +
             cp.alpha2 * (target.r - current.r).norm();
    case ActionKind::Flip:
      return cp.alpha3;
  }
  throw ConfigError("unknown action kind");
}

double objective(const EvalContext& ctx, const Pose& current, const Pose& view,
                 const CostParams& cp, double extra_cost) {
  if (!ctx.ensemble || !ctx.norm) throw ConfigError("planner context not initialized");
  return evaluate(ctx, current, view, cp, extra_cost).loss;
}

std::vector<int> select_diverse_subset(const std::vector<Pose>& poses,
                                       const std::vector<double>& scores, int k, double w) {
  if (poses.empty() || poses.size() != scores.size()) {
    throw DegenerateInput("diverse subset needs matched non-empty poses and scores");
  }
  const int n = static_cast<int>(poses.size());
  k = std::min(k, n);

  const auto dist = [&](int a, int b) {
    return (poses[a].r - poses[b].r).norm() +
           w * (1.0 - quat_distance(poses[a].q, poses[b].q));
  };

  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  std::vector<int> chosen{best};
  std::vector<double> min_dist(n);
  for (int i = 0; i < n; ++i) min_dist[i] = dist(i, best);
  while (static_cast<int>(chosen.size()) < k) {
    int far = -1;
    for (int i = 0; i < n; ++i) {
      if (min_dist[i] <= 0.0) continue;
      if (far < 0 || min_dist[i] > min_dist[far]) far = i;
    }
    if (far < 0) break;  // only exact duplicates remain
    chosen.push_back(far);
    for (int i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], dist(i, far));
  }
  return chosen;
}

ViewSearchResult next_best_view(const EvalContext& ctx, const Pose& current,
                                const ShellSpec& shell, const CostParams& cp,
                                const PlannerConfig& pc, double extra_cost,
                                const std::function<bool(const Pose&)>& reachable) {
  if (!ctx.ensemble || !ctx.norm) throw ConfigError("planner context not initialized");
  if (pc.n_random < 1 || pc.k_subset < 1 || pc.k_subset > pc.n_random) {
    throw ConfigError("planner sample counts must satisfy 1 <= k_subset <= n_random");
  }
  Rng rng(pc.seed);

  ViewSearchResult out;
  std::vector<Pose> poses;
  std::vector<double> losses;
  poses.reserve(pc.n_random);
  int next_id = 0;
  int best_row = -1;

  const auto record = [&](int phase, const Pose& p, const Eval& e) {
    out.trace.push_back({next_id++, phase, p, e.gamma, e.u_norm, e.loss, false});
    return static_cast<int>(out.trace.size()) - 1;
  };

  for (int i = 0; i < pc.n_random; ++i) {
    const Pose p = sample_shell_pose(rng, shell);
    if (reachable && !reachable(p)) continue;
    const Eval e = evaluate(ctx, current, p, cp, extra_cost);
    const int row = record(0, p, e);
    poses.push_back(p);
    losses.push_back(e.loss);
    if (best_row < 0 || e.loss < out.loss) {
      best_row = row;
      out.view = p;
      out.loss = e.loss;
      out.utility = e.u_norm;
      out.gamma = e.gamma;
    }
  }
  if (poses.empty()) throw NoReachablePose("no reachable shell pose among samples");

  const std::vector<int> seeds =
      select_diverse_subset(poses, losses, pc.k_subset, pc.diversity_w);

  for (int s : seeds) {
    ShellCoords x = to_shell(poses[s], shell);
    double fx = losses[s];
    int fx_row = -1;  // seed rows already traced in phase 0
    double step_r = pc.step_r;
    double step_a = pc.step_ang;

    const auto probe_at = [&](ShellCoords c, double* f_out, int* row_out) {
      c = clamp_to_shell(c, shell);
      const Pose p = from_shell(c, shell);
      if (reachable && !reachable(p)) return false;
      const Eval e = evaluate(ctx, current, p, cp, extra_cost);
      *row_out = record(1, p, e);
      *f_out = e.loss;
      return true;
    };

    for (int it = 0; it < pc.refine_iters; ++it) {
      bool improved = false;
      if (pc.use_fd_gradient) {
        // Central differences over the shell parameterization, then one
        // descent probe of the current step length along -g.
        const double h[3] = {0.25 * step_r, 0.25 * step_a, 0.25 * step_a};
        double g[3] = {0, 0, 0};
        for (int axis = 0; axis < 3; ++axis) {
          double fp = fx, fm = fx;
          int row;
          ShellCoords cp_ = x, cm = x;
          (axis == 0 ? cp_.r : axis == 1 ? cp_.az : cp_.el) += h[axis];
          (axis == 0 ? cm.r : axis == 1 ? cm.az : cm.el) -= h[axis];
          probe_at(cp_, &fp, &row);
          probe_at(cm, &fm, &row);
          g[axis] = (fp - fm) / (2.0 * h[axis]);
        }
        const double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        if (gn > 1e-12) {
          ShellCoords c = x;
          c.r -= step_r * g[0] / gn;
          c.az -= step_a * g[1] / gn;
          c.el -= step_a * g[2] / gn;
          double f;
          int row;
          if (probe_at(c, &f, &row) && f < fx) {
            x = clamp_to_shell(c, shell);
            fx = f;
            fx_row = row;
            improved = true;
          }
        }
      } else {
        const double deltas[3] = {step_r, step_a, step_a};
        for (int axis = 0; axis < 3; ++axis) {
          for (int sign = -1; sign <= 1; sign += 2) {
            ShellCoords c = x;
            (axis == 0 ? c.r : axis == 1 ? c.az : c.el) += sign * deltas[axis];
            double f;
            int row;
            if (probe_at(c, &f, &row) && f < fx) {
              x = clamp_to_shell(c, shell);
              fx = f;
              fx_row = row;
              improved = true;
            }
          }
        }
      }
      if (!improved) {
        step_r *= 0.5;
        step_a *= 0.5;
      }
    }
    if (fx < out.loss && fx_row >= 0) {
      best_row = fx_row;
      out.view = out.trace[fx_row].view;
      out.loss = fx;
      out.utility = out.trace[fx_row].u_norm;
      out.gamma = out.trace[fx_row].gamma;
    }
  }

  out.trace[best_row].selected = true;
  return out;
}

Plan plan_with_flip(const EvalContext& ctx, const std::optional<EvalContext>& flipped_ctx,
                    const Pose& current, const ShellSpec& shell, const CostParams& cp,
                    const PlannerConfig& pc,
                    const std::function<bool(const Pose&)>& reachable) {
  ViewSearchResult direct = next_best_view(ctx, current, shell, cp, pc, 0.0, reachable);

  Plan plan;
  plan.action.kind = ActionKind::Move;
  plan.action.view = direct.view;
  plan.action.utility = direct.utility;
  plan.action.loss = direct.loss;
  plan.action.cost = direct.gamma;
  plan.trace = std::move(direct.trace);

  if (pc.flip_enabled && flipped_ctx) {
    ViewSearchResult flipped =
        next_best_view(*flipped_ctx, current, shell, cp, pc, cp.alpha3, reachable);
    const int offset = static_cast<int>(plan.trace.size());
    const bool flip_wins = flipped.loss < plan.action.loss;
    for (TraceRow& row : flipped.trace) {
      row.candidate_id += offset;
      if (!flip_wins) row.selected = false;
      plan.trace.push_back(row);
    }
    if (flip_wins) {
      for (int i = 0; i < offset; ++i) plan.trace[i].selected = false;
      plan.action.kind = ActionKind::Flip;
      plan.action.view = flipped.view;
      plan.action.utility = flipped.utility;
      plan.action.loss = flipped.loss;
      plan.action.cost = flipped.gamma;  // includes the alpha3 surcharge
      plan.post_flip_view = flipped.view;
    }
  }
  return plan;
}

void write_planner_trace_csv(const std::string& path,
                             const std::vector<std::pair<int, std::vector<TraceRow>>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << "iteration,candidate_id,phase,px,py,pz,qw,qx,qy,qz,gamma,u_norm,loss,selected\n";
  char buf[512];
  for (const auto& [iter, trace] : rows) {
    for (const TraceRow& r : trace) {
      std::snprintf(buf, sizeof(buf),
                    "%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n",
                    iter, r.candidate_id, r.phase, r.view.r.x, r.view.r.y, r.view.r.z,
                    r.view.q.w, r.view.q.x, r.view.q.y, r.view.q.z, r.gamma, r.u_norm,
                    r.loss, r.selected ? 1 : 0);
      out << buf;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace voxcap
