// SPDX-License-Identifier: Apache-2.0
#include "voxcap/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "voxcap/rng.hpp"

namespace voxcap {

namespace {

constexpr std::uint64_t kBatchStream = 0x5261795f42617463ull;
constexpr std::uint64_t kJitterStream = 0x4a69747465725f53ull;

struct RayPool {
  std::vector<Ray> rays;
  std::vector<Vec3> targets;
};

RayPool build_pool(const std::vector<ViewSample>& views, const Aabb& bounds) {
  RayPool pool;
  for (const ViewSample& view : views) {
    view.intr.validate();
    const std::size_t n = static_cast<std::size_t>(view.intr.width) * view.intr.height;
    if (view.image.size() != n) throw DegenerateInput("view image size mismatch");
    const std::vector<Ray> rays = generate_rays(view.pose, view.intr, bounds);
    for (std::size_t p = 0; p < n; ++p) {
      if (rays[p].empty()) continue;  // renders black regardless of parameters
      pool.rays.push_back(rays[p]);
      pool.targets.push_back(view.image[p]);
    }
  }
  if (pool.rays.empty()) throw DegenerateInput("no training rays intersect the grid bounds");
  return pool;
}

// Adam with lazy (touched-parameter) updates: a parameter's moments advance
// only on steps where its gradient is nonzero. Bias correction uses the
// global step count.
struct AdamState {
  std::vector<double> m, v;

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

template <class Get, class Set>
void adam_apply(const std::vector<double>& grad, AdamState& st, double lr, double beta1,
                double beta2, double eps, int step1, const Get& get, const Set& set) {
  const double bc1 = 1.0 - std::pow(beta1, step1);
  const double bc2 = 1.0 - std::pow(beta2, step1);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    const double m = st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
    const double v = st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
    const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    set(i, get(i) - update);
  }
}

void init_member(RadianceGrid& grid, std::uint64_t seed, double init_scale) {
  Rng rng(seed);
  const std::size_t n = grid.n_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    grid.set_density_raw(i, rng.uniform(-init_scale, init_scale));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      grid.set_color_raw(i, ch, rng.uniform(-init_scale, init_scale));
    }
  }
}

}  // namespace

double TrainReport::final_mean_loss() const {
  if (loss.empty()) return 0.0;
  double s = 0.0;
  int n = 0;
  for (const auto& member : loss) {
    if (member.empty()) continue;
    s += member.back();
    ++n;
  }
  return n == 0 ? 0.0 : s / n;
}

void TrainReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "member,step,loss\n";
  char line[96];
  for (std::size_t k = 0; k < loss.size(); ++k) {
    for (std::size_t s = 0; s < loss[k].size(); ++s) {
      std::snprintf(line, sizeof(line), "%zu,%zu,%.12g\n", k, s, loss[k][s]);
      out << line;
    }
  }
}

Ensemble init_ensemble(const TrainConfig& config, int nx, int ny, int nz,
                       const Aabb& bounds, std::uint64_t base_seed) {
  if (config.members < 1) throw ConfigError("ensemble needs at least one member");
  Ensemble e;
  e.config = config;
  e.base_seed = base_seed;
  e.members.reserve(config.members);
  for (int k = 0; k < config.members; ++k) {
    RadianceGrid grid(nx, ny, nz, bounds);
    init_member(grid, base_seed + static_cast<std::uint64_t>(k), config.init_scale);
    e.members.push_back(std::move(grid));
  }
  return e;
}

TrainReport fit(Ensemble& ensemble, const std::vector<ViewSample>& views) {
  const TrainConfig& cfg = ensemble.config;
  if (views.empty()) throw DegenerateInput("fit requires at least one view");
  if (cfg.steps < 0 || cfg.batch_rays <= 0) throw ConfigError("bad train config");

  const RayPool pool = build_pool(views, ensemble.bounds());
  TrainReport report;
  report.loss.resize(ensemble.members.size());

  PhotometricGrad grad;
  AdamState adam_density, adam_color;
  std::vector<Ray> batch_rays;
  std::vector<Vec3> batch_targets;

  for (int k = 0; k < ensemble.size(); ++k) {
    RadianceGrid& grid = ensemble.members[k];
    const std::uint64_t member_seed = ensemble.base_seed + static_cast<std::uint64_t>(k);
    Rng batch_rng(Rng::mix(member_seed, kBatchStream));
    adam_density.reset(grid.n_nodes());
    adam_color.reset(3 * grid.n_nodes());
    report.loss[k].reserve(cfg.steps);

    for (int step = 0; step < cfg.steps; ++step) {
      batch_rays.clear();
      batch_targets.clear();
      for (int b = 0; b < cfg.batch_rays; ++b) {
        const std::size_t j = batch_rng.below(pool.rays.size());
        batch_rays.push_back(pool.rays[j]);
        batch_targets.push_back(pool.targets[j]);
      }
      SampleSpec spec = cfg.spec;
      spec.seed = Rng::mix(Rng::mix(member_seed, kJitterStream),
                           static_cast<std::uint64_t>(step));
      backprop_photometric(grid, batch_rays, batch_targets, spec, grad);
      report.loss[k].push_back(grad.loss);

      adam_apply(
          grad.d_density_raw, adam_density, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps,
          step + 1, [&](std::size_t i) { return grid.density_raw(i); },
          [&](std::size_t i, double v) { grid.set_density_raw(i, v); });
      adam_apply(
          grad.d_color_raw, adam_color, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps,
          step + 1, [&](std::size_t i) { return grid.color_raw(i / 3, i % 3); },
          [&](std::size_t i, double v) { grid.set_color_raw(i / 3, i % 3, v); });
    }
  }
  return report;
}

RayShade render_mean_ray(const Ensemble& ensemble, const Ray& ray, const SampleSpec& spec,
                         std::uint64_t pixel_stream) {
  RayShade mean;
  for (const RadianceGrid& grid : ensemble.members) {
    const RayShade s = render_ray(grid, ray, spec, pixel_stream);
    mean.color += s.color;
    mean.depth += s.depth;
    mean.opacity += s.opacity;
  }
  const double inv = 1.0 / ensemble.size();
  mean.color *= inv;
  mean.depth *= inv;
  mean.opacity *= inv;
  return mean;
}

RenderOutput render_mean(const Ensemble& ensemble, const Pose& pose,
                         const CameraIntrinsics& intr, const SampleSpec& spec) {
  RenderOutput mean = render_image(ensemble.members[0], pose, intr, spec);
  for (int k = 1; k < ensemble.size(); ++k) {
    const RenderOutput r = render_image(ensemble.members[k], pose, intr, spec);
    for (std::size_t p = 0; p < mean.n_pixels(); ++p) {
      mean.color[p] += r.color[p];
      mean.depth[p] += r.depth[p];
      mean.opacity[p] += r.opacity[p];
    }
  }
  const double inv = 1.0 / ensemble.size();
  for (std::size_t p = 0; p < mean.n_pixels(); ++p) {
    mean.color[p] *= inv;
    mean.depth[p] *= inv;
    mean.opacity[p] *= inv;
  }
  return mean;
}

Vec3 density_centroid(const Ensemble& ensemble) {
  const RadianceGrid& g0 = ensemble.members[0];
  Vec3 acc;
  double total = 0.0;
  for (int iz = 0; iz < g0.nz(); ++iz) {
    for (int iy = 0; iy < g0.ny(); ++iy) {
      for (int ix = 0; ix < g0.nx(); ++ix) {
        const std::size_t i = g0.node_index(ix, iy, iz);
        double sigma = 0.0;
        for (const RadianceGrid& g : ensemble.members) sigma += g.density_at_node(i);
        sigma /= ensemble.size();
        acc += g0.node_position(ix, iy, iz) * sigma;
        total += sigma;
      }
    }
  }
  if (total < 1e-9) throw EmptyModel("density centroid of a numerically empty model");
  return acc / total;
}

void save_ensemble(const Ensemble& ensemble, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["members"] = ensemble.size();
  meta["base_seed"] = ensemble.base_seed;
  meta["resolution"] = {ensemble.members[0].nx(), ensemble.members[0].ny(),
                        ensemble.members[0].nz()};
  std::ofstream out(fs::path(dir) / "meta.json", std::ios::trunc);
  if (!out) throw IoError("cannot write ensemble meta in " + dir);
  out << meta.dump(2) << "\n";
  for (int k = 0; k < ensemble.size(); ++k) {
    ensemble.members[k].save((fs::path(dir) / ("member_" + std::to_string(k) + ".vxg")).string());
  }
}

Ensemble load_ensemble(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw IoError("cannot read ensemble meta in " + dir);
  nlohmann::json meta;
  in >> meta;
  Ensemble e;
  e.base_seed = meta.at("base_seed").get<std::uint64_t>();
  const int members = meta.at("members").get<int>();
  e.config.members = members;
  for (int k = 0; k < members; ++k) {
    e.members.push_back(
        RadianceGrid::load((fs::path(dir) / ("member_" + std::to_string(k) + ".vxg")).string()));
  }
  return e;
}

}  // namespace voxcap
