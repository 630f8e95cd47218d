// SPDX-License-Identifier: Apache-2.0
#include "voxcap/repose.hpp"

#include <cmath>
#include <future>

namespace voxcap {

double rotation_between(const Pose& a, const Pose& b) {
  return (a.q * b.q.conjugate()).angle();
}

double translation_between(const Pose& a, const Pose& b) {
  return (a.r - b.r).norm();
}

SsdObjective::SsdObjective(const Ensemble* ensemble, std::vector<ViewSample> views,
                           Pose prior, Vec3 pivot, SampleSpec spec, double trans_scale,
                           int pixel_stride)
    : ensemble_(ensemble),
      views_(std::move(views)),
      prior_(prior),
      pivot_(pivot),
      spec_(spec),
      trans_scale_(trans_scale),
      pixel_stride_(std::max(1, pixel_stride)) {
  if (!ensemble_ || ensemble_->members.empty()) throw DegenerateInput("ssd needs an ensemble");
  if (views_.empty()) throw DegenerateInput("ssd needs at least one captured view");
  selected_.resize(views_.size());
  for (std::size_t v = 0; v < views_.size(); ++v) {
    const ViewSample& view = views_[v];
    const std::size_t n = static_cast<std::size_t>(view.intr.width) * view.intr.height;
    if (view.image.size() != n || view.mask.size() != n) {
      throw DegenerateInput("ssd view image/mask size mismatch");
    }
    std::size_t in_mask = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (!view.mask[p]) continue;
      if (in_mask++ % pixel_stride_ == 0) selected_[v].push_back(p);
    }
    compared_pixels_ += selected_[v].size();
  }
  if (compared_pixels_ == 0) throw DegenerateInput("ssd views contain no mask pixels");
}

PoseDelta SsdObjective::unscale(const std::vector<double>& x) const {
  PoseDelta d;
  d.v = {x[0] * trans_scale_, x[1] * trans_scale_, x[2] * trans_scale_, x[3], x[4], x[5]};
  return d;
}

Pose SsdObjective::compose(const std::vector<double>& x) const {
  const PoseDelta d = unscale(x);
  const Quat q = Quat::from_rotvec(d.rotvec());
  // T(pivot) [R|t] T(-pivot): perturbation rotates about the pivot point.
  const Pose perturb{d.translation() + pivot_ - q.rotate(pivot_), q};
  return perturb.compose(prior_);
}

double SsdObjective::evaluate(const std::vector<double>& x) const {
  const Pose candidate = compose(x);
  const Pose inv = candidate.inverse();
  double acc = 0.0;
  for (std::size_t v = 0; v < views_.size(); ++v) {
    const ViewSample& view = views_[v];
    const Pose cam = inv.compose(view.pose);
    for (const std::size_t p : selected_[v]) {
      const int px = static_cast<int>(p) % view.intr.width;
      const int py = static_cast<int>(p) / view.intr.width;
      const Ray ray = pixel_ray(cam, view.intr, ensemble_->bounds(), px, py);
      const RayShade shade = render_mean_ray(*ensemble_, ray, spec_, p);
      acc += (shade.color - view.image[p]).norm2();
    }
  }
  return acc;
}

double SsdObjective::evaluate(const PoseDelta& delta) const {
  const std::vector<double> x{delta.v[0] / trans_scale_, delta.v[1] / trans_scale_,
                              delta.v[2] / trans_scale_, delta.v[3], delta.v[4],
                              delta.v[5]};
  return evaluate(x);
}

double ssd(const SsdObjective& objective, const PoseDelta& delta) {
  return objective.evaluate(delta);
}

ReacquireResult reacquire_pose(const SsdObjective& objective, const ReacquireConfig& cfg) {
  const Objective fn = [&objective](const std::vector<double>& x) {
    return objective.evaluate(x);
  };
  const std::vector<double> x0(6, 0.0);

  auto nm = std::async(std::launch::async, [&] { return nelder_mead(fn, x0, cfg.opt); });
  auto pw = std::async(std::launch::async, [&] { return powell(fn, x0, cfg.opt); });
  auto cb = std::async(std::launch::async, [&] { return cobyla_like(fn, x0, cfg.opt); });
  const OptimResult results[3] = {nm.get(), pw.get(), cb.get()};
  static const char* kNames[3] = {"nelder_mead", "powell", "cobyla_like"};

  ReacquireResult out;
  for (int i = 0; i < 3; ++i) {
    out.methods[i].name = kNames[i];
    out.methods[i].ssd = results[i].f;
    out.methods[i].evals = results[i].evals;
    out.methods[i].delta = objective.unscale(results[i].x);
    if (out.winner < 0 || results[i].f < out.ssd) {
      out.winner = i;
      out.ssd = results[i].f;
    }
  }
  out.delta = out.methods[out.winner].delta;
  out.recovered = objective.compose(results[out.winner].x);
  out.ssd_per_pixel = out.ssd / static_cast<double>(objective.compared_pixels());
  out.rejected = out.ssd_per_pixel > cfg.reject_ssd_per_pixel;
  return out;
}

}  // namespace voxcap
