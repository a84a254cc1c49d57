#pragma once

#include <string>
#include <vector>

#include "pscat/grids.hpp"
#include "pscat/specialfn.hpp"
#include "pscat/types.hpp"

namespace pscat {

// kernels of the acoustic layer potentials; r = |x - y| must be positive
inline cplx sl_point(const Vec3& x, const Vec3& y, double kappa) {
  return fundamental_solution(x, y, kappa);
}

inline cplx dl_point(const Vec3& x, const Vec3& y, const Vec3& ny, double kappa) {
  const Vec3 d = y - x;
  const double r = d.norm();
  const cplx ikr = kImag * kappa * r;
  return std::exp(ikr) * (ikr - 1.0) * d.dot(ny) / (4.0 * kPi * r * r * r);
}

// Replacement self-entries for the Nystrom matrices. Sphere faces use a
// global subtraction against the closed-form unit-density potentials; open
// faces use an equal-area disc patch around the node.
struct LayerDiagonals {
  std::vector<cplx> sl;
  std::vector<cplx> dl;  // principal value
};

LayerDiagonals layer_diagonals(const BoundaryGrid& grid, double kappa);

// Self-entry of the volume operator: kappa^2 c_i (a_i^2/2 + i kappa w_i/(4 pi))
// with a_i the equal-volume ball radius of the cell.
std::vector<cplx> volume_diagonals(const VolumeGrid& grid, double kappa);

// Unit-density single and double layer of the sphere |y - c| = R, evaluated
// at distance s from c (either side; s = R itself is not admitted).
cplx sphere_sl_unit(double R, double kappa, double s);
cplx sphere_dl_unit(double R, double kappa, double s);

struct PotentialWarnings {
  std::vector<std::string> messages;
};

// (DL + i kappa SL)[psi] at off-surface targets. Near sphere faces the
// quadrature switches to subtraction of the locally constant density; targets
// closer than a tenth of the local mesh width are flagged.
std::vector<cplx> apply_layer_potential(const BoundaryGrid& grid,
                                        const std::vector<cplx>& psi,
                                        double kappa,
                                        const std::vector<Vec3>& targets,
                                        PotentialWarnings* warnings = nullptr);

// Exterior Dirichlet trace of (DL + i kappa SL)[psi] at the grid nodes: the
// principal-value row plus the +psi/2 jump.
std::vector<cplx> layer_trace_exterior(const BoundaryGrid& grid,
                                       const std::vector<cplx>& psi,
                                       double kappa);

// V[f](x) = kappa^2 sum_j w_j c_j f_j Phi(x, y_j) over the medium cells; the
// nearest cell is replaced by its equal-volume ball average when x lies
// inside it.
std::vector<cplx> apply_volume_potential(const VolumeGrid& grid,
                                         const std::vector<cplx>& values,
                                         double kappa,
                                         const std::vector<Vec3>& targets);

}  // namespace pscat
