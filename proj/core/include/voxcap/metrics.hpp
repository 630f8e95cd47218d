// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "voxcap/trainer.hpp"

namespace voxcap {

// 10 * log10(peak^2 / MSE) with peak 1.0, MSE averaged over pixels and
// channels. Identical images are reported as the 100 dB cap.
double psnr(const std::vector<Vec3>& test, const std::vector<Vec3>& reference);

// Same, restricted to mask pixels. Throws DegenerateInput on an empty mask.
double psnr_masked(const std::vector<Vec3>& test, const std::vector<Vec3>& reference,
                   const std::vector<std::uint8_t>& mask);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> tris;

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_tris() const { return tris.size(); }
  // V - E + F over welded vertices and unique undirected edges.
  long euler_characteristic() const;
};

// Classic 256-case marching cubes on the node lattice with linear edge
// interpolation; coincident edge vertices are welded so closed isosurfaces
// away from the grid boundary come out watertight. `field` is indexed
// (iz * ny + iy) * nx + ix.
TriMesh marching_cubes(const std::vector<double>& field, int nx, int ny, int nz,
                       const Aabb& bounds, double iso);

// Member-mean of activated densities, the field the model mesh is cut from.
std::vector<double> mean_density_field(const Ensemble& ensemble);

struct FscoreReport {
  double fscore = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.0;
};

// precision = fraction of model points within `threshold` of the ground-truth
// set, recall the converse, F = 2PR/(P+R). Uses a spatial hash with cell size
// equal to the threshold.
FscoreReport fscore(const std::vector<Vec3>& model_points,
                    const std::vector<Vec3>& gt_points, double threshold);

void write_stl(const TriMesh& mesh, const std::string& path);

}  // namespace voxcap
