// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxcap/geometry.hpp"

namespace voxcap {

// Quadrature resolution for one ray. With jitter=false samples sit at segment
// midpoints and rendering is deterministic; with jitter=true sample offsets
// are drawn from a stream derived from (seed, pixel), so a full image is still
// reproducible for a fixed seed.
struct SampleSpec {
  int n_samples = 64;
  bool jitter = false;
  std::uint64_t seed = 0;
};

struct RayShade {
  Vec3 color;
  double depth = 0.0;
  double opacity = 0.0;
};

struct RenderOutput {
  int width = 0, height = 0;
  std::vector<Vec3> color;
  std::vector<double> depth;
  std::vector<double> opacity;

  std::size_t n_pixels() const { return color.size(); }
};

// Dense voxel grid of pre-activation density and color. The continuous field
// is the trilinear interpolation of the activated node values, so
// sigma >= 0 and c in [0,1]^3 hold everywhere by convexity. Activated node
// values are cached and kept in sync with the raw parameters.
class RadianceGrid {
 public:
  RadianceGrid() = default;
  RadianceGrid(int nx, int ny, int nz, const Aabb& bounds);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  const Aabb& bounds() const { return bounds_; }
  std::size_t n_nodes() const { return static_cast<std::size_t>(nx_) * ny_ * nz_; }

  std::size_t node_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * ny_ + iy) * nx_ + ix;
  }
  Vec3 node_position(int ix, int iy, int iz) const;
  Vec3 cell_size() const { return cell_; }

  double density_raw(std::size_t i) const { return density_raw_[i]; }
  double color_raw(std::size_t i, int ch) const { return color_raw_[3 * i + ch]; }
  void set_density_raw(std::size_t i, double v);
  void set_color_raw(std::size_t i, int ch, double v);
  void fill_density_raw(double v);
  void fill_color_raw(double v);

  double density_at_node(std::size_t i) const { return sigma_[i]; }
  Vec3 color_at_node(std::size_t i) const {
    return {col_[3 * i], col_[3 * i + 1], col_[3 * i + 2]};
  }
  const std::vector<double>& density_raw_data() const { return density_raw_; }
  const std::vector<double>& activated_density_data() const { return sigma_; }

  // Activated field at p (clamped to bounds).
  void sample(const Vec3& p, double& sigma, Vec3& rgb) const;
  double sample_density(const Vec3& p) const;

  // Trilinear support of p: node indices and weights, for gradient scatter.
  struct Stencil {
    std::size_t idx[8];
    double w[8];
  };
  Stencil stencil(const Vec3& p) const;

  static double softplus(double v);
  static double softplus_inv(double y);  // y > 0; clamped to keep exp finite
  static double sigmoid(double v);
  static double logit(double p);         // p in (0,1)
  static double softplus_grad(double v) { return sigmoid(v); }

  // Versioned little-endian binary format; round-trips bit-exactly.
  void save(const std::string& path) const;
  static RadianceGrid load(const std::string& path);

 private:
  int nx_ = 0, ny_ = 0, nz_ = 0;
  Aabb bounds_;
  Vec3 cell_;
  std::vector<double> density_raw_;
  std::vector<double> color_raw_;  // rgb interleaved
  std::vector<double> sigma_;      // softplus(density_raw)
  std::vector<double> col_;        // sigmoid(color_raw)
};

// Volume-rendering quadrature along one ray: stratified samples in
// [t_near, t_far], alpha_i = T_i (1 - exp(-sigma_i * delta_i)) with
// T_i = exp(-sum_{j<i} sigma_j delta_j), color/depth/opacity are the
// alpha-weighted sums. The final segment is closed by delta_N = t_far - t_N.
RayShade render_ray(const RadianceGrid& grid, const Ray& ray, const SampleSpec& spec,
                    std::uint64_t pixel_stream = 0);

RenderOutput render_image(const RadianceGrid& grid, const Pose& pose,
                          const CameraIntrinsics& intr, const SampleSpec& spec);

struct PhotometricGrad {
  double loss = 0.0;
  std::vector<double> d_density_raw;
  std::vector<double> d_color_raw;
};

// L = (1/B) sum_rays ||C_hat - target||^2 over the batch, with exact analytic
// gradients w.r.t. every raw parameter (quadrature composed with activations).
// Pixel streams for jittered sampling are the ray indices within the batch.
void backprop_photometric(const RadianceGrid& grid, const std::vector<Ray>& rays,
                          const std::vector<Vec3>& targets, const SampleSpec& spec,
                          PhotometricGrad& out);

}  // namespace voxcap
