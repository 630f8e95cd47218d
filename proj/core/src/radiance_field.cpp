// SPDX-License-Identifier: Apache-2.0
#include "voxcap/radiance_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "voxcap/rng.hpp"

namespace voxcap {

namespace {

constexpr char kMagic[8] = {'V', 'X', 'G', 'R', 'I', 'D', '0', '1'};
constexpr std::uint32_t kVersion = 1;
// softplus(-60) ~ 8.8e-27: numerically zero density, still finite raw value.
constexpr double kMinRaw = -60.0;
constexpr double kTransmittanceFloor = 1e-14;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) { put_u64(buf, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw IoError("cannot open " + path);
  }
  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError("truncated grid file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

double RadianceGrid::softplus(double v) {
  if (v > 0.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

double RadianceGrid::softplus_inv(double y) {
  if (!(y > 0.0)) return kMinRaw;
  if (y > 30.0) return y;  // exp(-y) below double epsilon of log1p term
  const double r = y + std::log1p(-std::exp(-y));
  return std::max(r, kMinRaw);
}

double RadianceGrid::sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double RadianceGrid::logit(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DegenerateInput("logit argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

RadianceGrid::RadianceGrid(int nx, int ny, int nz, const Aabb& bounds)
    : nx_(nx), ny_(ny), nz_(nz), bounds_(bounds) {
  if (nx < 2 || ny < 2 || nz < 2) throw ConfigError("grid resolution must be >= 2 per axis");
  const Vec3 ext = bounds.extent();
  if (!(ext.x > 0.0) || !(ext.y > 0.0) || !(ext.z > 0.0)) {
    throw ConfigError("grid bounds must have positive extent");
  }
  cell_ = {ext.x / (nx - 1), ext.y / (ny - 1), ext.z / (nz - 1)};
  const std::size_t n = n_nodes();
  density_raw_.assign(n, 0.0);
  color_raw_.assign(3 * n, 0.0);
  sigma_.assign(n, softplus(0.0));
  col_.assign(3 * n, sigmoid(0.0));
}

Vec3 RadianceGrid::node_position(int ix, int iy, int iz) const {
  return {bounds_.lo.x + cell_.x * ix, bounds_.lo.y + cell_.y * iy,
          bounds_.lo.z + cell_.z * iz};
}

void RadianceGrid::set_density_raw(std::size_t i, double v) {
  density_raw_[i] = v;
  sigma_[i] = softplus(v);
}

void RadianceGrid::set_color_raw(std::size_t i, int ch, double v) {
  color_raw_[3 * i + ch] = v;
  col_[3 * i + ch] = sigmoid(v);
}

void RadianceGrid::fill_density_raw(double v) {
  std::fill(density_raw_.begin(), density_raw_.end(), v);
  std::fill(sigma_.begin(), sigma_.end(), softplus(v));
}

void RadianceGrid::fill_color_raw(double v) {
  std::fill(color_raw_.begin(), color_raw_.end(), v);
  std::fill(col_.begin(), col_.end(), sigmoid(v));
}

RadianceGrid::Stencil RadianceGrid::stencil(const Vec3& p) const {
  double u[3] = {(p.x - bounds_.lo.x) / cell_.x, (p.y - bounds_.lo.y) / cell_.y,
                 (p.z - bounds_.lo.z) / cell_.z};
  int i0[3];
  double f[3];
  const int dims[3] = {nx_, ny_, nz_};
  for (int a = 0; a < 3; ++a) {
    double ua = std::clamp(u[a], 0.0, static_cast<double>(dims[a] - 1));
    int ia = std::min(static_cast<int>(ua), dims[a] - 2);
    i0[a] = ia;
    f[a] = std::clamp(ua - ia, 0.0, 1.0);
  }
  Stencil s;
  const double fx1 = f[0], fy1 = f[1], fz1 = f[2];
  const double fx0 = 1.0 - fx1, fy0 = 1.0 - fy1, fz0 = 1.0 - fz1;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx, ++k) {
        s.idx[k] = node_index(i0[0] + dx, i0[1] + dy, i0[2] + dz);
        s.w[k] = (dx ? fx1 : fx0) * (dy ? fy1 : fy0) * (dz ? fz1 : fz0);
      }
    }
  }
  return s;
}

void RadianceGrid::sample(const Vec3& p, double& sigma, Vec3& rgb) const {
  const Stencil s = stencil(p);
  double sg = 0.0, r = 0.0, g = 0.0, b = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double w = s.w[k];
    const std::size_t i = s.idx[k];
    sg += w * sigma_[i];
    r += w * col_[3 * i];
    g += w * col_[3 * i + 1];
    b += w * col_[3 * i + 2];
  }
  sigma = sg;
  rgb = {r, g, b};
}

double RadianceGrid::sample_density(const Vec3& p) const {
  const Stencil s = stencil(p);
  double sg = 0.0;
  for (int k = 0; k < 8; ++k) sg += s.w[k] * sigma_[s.idx[k]];
  return sg;
}

void RadianceGrid::save(const std::string& path) const {
  std::string buf;
  buf.reserve(80 + 8 * (density_raw_.size() + color_raw_.size()));
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(nx_));
  put_u32(buf, static_cast<std::uint32_t>(ny_));
  put_u32(buf, static_cast<std::uint32_t>(nz_));
  for (double v : {bounds_.lo.x, bounds_.lo.y, bounds_.lo.z, bounds_.hi.x, bounds_.hi.y,
                   bounds_.hi.z}) {
    put_f64(buf, v);
  }
  put_u64(buf, density_raw_.size());
  for (double v : density_raw_) put_f64(buf, v);
  put_u64(buf, color_raw_.size());
  for (double v : color_raw_) put_f64(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path);
}

RadianceGrid RadianceGrid::load(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw IoError(path + ": not a radiance grid file");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError(path + ": unsupported grid version " + std::to_string(version));
  }
  const int nx = static_cast<int>(r.u32());
  const int ny = static_cast<int>(r.u32());
  const int nz = static_cast<int>(r.u32());
  Aabb bounds;
  bounds.lo = {r.f64(), r.f64(), r.f64()};
  bounds.hi = {r.f64(), r.f64(), r.f64()};
  RadianceGrid grid(nx, ny, nz, bounds);
  const std::uint64_t nd = r.u64();
  if (nd != grid.n_nodes()) throw IoError(path + ": density payload size mismatch");
  for (std::uint64_t i = 0; i < nd; ++i) grid.set_density_raw(i, r.f64());
  const std::uint64_t nc = r.u64();
  if (nc != 3 * grid.n_nodes()) throw IoError(path + ": color payload size mismatch");
  for (std::uint64_t i = 0; i < nc; ++i) {
    grid.set_color_raw(i / 3, static_cast<int>(i % 3), r.f64());
  }
  return grid;
}

namespace {

// Stratified sample positions; shared by the forward renderer and backprop so
// both integrate the identical quadrature.
void sample_positions(const Ray& ray, const SampleSpec& spec, std::uint64_t pixel_stream,
                      std::vector<double>& ts) {
  const int n = spec.n_samples;
  ts.resize(n);
  const double dt = (ray.t_far - ray.t_near) / n;
  if (spec.jitter) {
    Rng rng(Rng::mix(spec.seed, pixel_stream));
    for (int i = 0; i < n; ++i) ts[i] = ray.t_near + (i + rng.uniform()) * dt;
  } else {
    for (int i = 0; i < n; ++i) ts[i] = ray.t_near + (i + 0.5) * dt;
  }
}

}  // namespace

RayShade render_ray(const RadianceGrid& grid, const Ray& ray, const SampleSpec& spec,
                    std::uint64_t pixel_stream) {
  RayShade out;
  if (ray.empty()) return out;
  if (spec.n_samples <= 0) throw ConfigError("n_samples must be positive");

  thread_local std::vector<double> ts;
  sample_positions(ray, spec, pixel_stream, ts);

  const int n = spec.n_samples;
  double T = 1.0;
  Vec3 color;
  double depth = 0.0, opacity = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = ts[i];
    const double delta = (i + 1 < n ? ts[i + 1] : ray.t_far) - t;
    double sigma;
    Vec3 c;
    grid.sample(ray.at(t), sigma, c);
    const double e = std::exp(-std::min(sigma * delta, 700.0));
    const double alpha = T * (1.0 - e);
    color += c * alpha;
    depth += t * alpha;
    opacity += alpha;
    T *= e;
    if (T < kTransmittanceFloor) break;
  }
  out.color = color;
  out.depth = depth;
  out.opacity = opacity;
  return out;
}

RenderOutput render_image(const RadianceGrid& grid, const Pose& pose,
                          const CameraIntrinsics& intr, const SampleSpec& spec) {
  intr.validate();
  RenderOutput out;
  out.width = intr.width;
  out.height = intr.height;
  const std::size_t n = static_cast<std::size_t>(intr.width) * intr.height;
  out.color.resize(n);
  out.depth.resize(n);
  out.opacity.resize(n);
  parallel_chunks(n, 2048, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const int px = static_cast<int>(p) % intr.width;
      const int py = static_cast<int>(p) / intr.width;
      const Ray ray = pixel_ray(pose, intr, grid.bounds(), px, py);
      const RayShade shade = render_ray(grid, ray, spec, p);
      out.color[p] = shade.color;
      out.depth[p] = shade.depth;
      out.opacity[p] = shade.opacity;
    }
  });
  return out;
}

void backprop_photometric(const RadianceGrid& grid, const std::vector<Ray>& rays,
                          const std::vector<Vec3>& targets, const SampleSpec& spec,
                          PhotometricGrad& out) {
  if (rays.size() != targets.size()) throw DegenerateInput("rays/targets size mismatch");
  if (spec.n_samples <= 0) throw ConfigError("n_samples must be positive");
  out.loss = 0.0;
  out.d_density_raw.assign(grid.n_nodes(), 0.0);
  out.d_color_raw.assign(3 * grid.n_nodes(), 0.0);
  if (rays.empty()) return;

  struct SampleRec {
    double t, delta, e, alpha, T;
    Vec3 c;
  };
  thread_local std::vector<double> ts;
  thread_local std::vector<SampleRec> recs;

  const double inv_b = 1.0 / static_cast<double>(rays.size());
  for (std::size_t ri = 0; ri < rays.size(); ++ri) {
    const Ray& ray = rays[ri];
    if (ray.empty()) {
      // No samples: the ray renders black and contributes only to the loss.
      out.loss += targets[ri].norm2() * inv_b;
      continue;
    }
    sample_positions(ray, spec, ri, ts);
    const int n = spec.n_samples;
    recs.clear();
    double T = 1.0;
    Vec3 chat;
    for (int i = 0; i < n; ++i) {
      const double t = ts[i];
      const double delta = (i + 1 < n ? ts[i + 1] : ray.t_far) - t;
      double sigma;
      Vec3 c;
      grid.sample(ray.at(t), sigma, c);
      const double e = std::exp(-std::min(sigma * delta, 700.0));
      const double alpha = T * (1.0 - e);
      chat += c * alpha;
      recs.push_back({t, delta, e, alpha, T, c});
      T *= e;
      if (T < kTransmittanceFloor) break;
    }
    const Vec3 res = chat - targets[ri];
    out.loss += res.norm2() * inv_b;
    const Vec3 dLdC = res * (2.0 * inv_b);

    // Suffix accumulation: dL/dsigma_k = delta_k (g_k T_k e_k - A_k) with
    // g_i = <dLdC, c_i>, A_k = sum_{i>k} g_i alpha_i.
    double A = 0.0;
    for (int k = static_cast<int>(recs.size()) - 1; k >= 0; --k) {
      const SampleRec& rec = recs[k];
      const double g = dLdC.dot(rec.c);
      const double dsigma = rec.delta * (g * rec.T * rec.e - A);
      A += g * rec.alpha;

      const RadianceGrid::Stencil s = grid.stencil(ray.at(rec.t));
      for (int j = 0; j < 8; ++j) {
        const std::size_t idx = s.idx[j];
        const double w = s.w[j];
        out.d_density_raw[idx] +=
            w * dsigma * RadianceGrid::softplus_grad(grid.density_raw(idx));
        const Vec3 cn = grid.color_at_node(idx);
        out.d_color_raw[3 * idx + 0] += w * rec.alpha * dLdC.x * cn.x * (1.0 - cn.x);
        out.d_color_raw[3 * idx + 1] += w * rec.alpha * dLdC.y * cn.y * (1.0 - cn.y);
        out.d_color_raw[3 * idx + 2] += w * rec.alpha * dLdC.z * cn.z * (1.0 - cn.z);
      }
    }
  }
}

}  // namespace voxcap
