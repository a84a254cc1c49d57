#pragma once

#include <vector>

#include "pscat/geometry.hpp"
#include "pscat/types.hpp"

namespace pscat {

// Nystrom nodes on the obstacle boundary (all of partial D, including the
// contact discs). Nodes are stored face-contiguous; `faces` and `face_ranges`
// expose the per-face structure needed by the singular quadrature.
struct BoundaryGrid {
  std::vector<Vec3> nodes;
  std::vector<Vec3> normals;  // outward
  std::vector<double> weights;
  std::vector<FaceLabel> labels;
  std::vector<int> face_id;
  std::vector<Face> faces;
  std::vector<std::pair<std::size_t, std::size_t>> face_ranges;  // [begin, end)

  std::size_t size() const { return nodes.size(); }
  double total_area() const;
  double mesh_width(std::size_t i) const { return std::sqrt(weights[i]); }
};

// Quadrature cells covering the medium support with contrast samples 1 - q.
struct VolumeGrid {
  enum class Layout { radial, cartesian };

  Layout layout = Layout::radial;
  std::vector<Vec3> cells;
  std::vector<double> weights;
  std::vector<cplx> contrast;
  std::vector<int> component;  // media index per cell

  // cartesian bookkeeping (empty for the radial layout)
  double h = 0.0;
  Vec3 origin = Vec3::Zero();
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<int> cell_at;  // lattice -> cell index, -1 outside

  std::size_t size() const { return cells.size(); }
  double total_volume() const;
  int lattice_index(int i, int j, int k) const {
    return (i * dims[1] + j) * dims[2] + k;
  }
};

// Per-face product rules: Gauss-Legendre in the polar variable, uniform in
// azimuth; weight sums reproduce the closed-form face areas.
BoundaryGrid build_boundary_grid(const SceneC& scene, int target_nodes);

// Gauss-Legendre in radius and cos-angle, uniform in azimuth, per component.
VolumeGrid build_volume_grid_radial(const SceneC& scene, int target_cells);

// Uniform lattice of spacing h, keeping cells whose center lies in a medium.
VolumeGrid build_volume_grid_cartesian(const SceneC& scene, double h);

// Nodes and weights of the n-point Gauss-Legendre rule on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w);

}  // namespace pscat
