#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "pscat/geometry.hpp"
#include "pscat/grids.hpp"
#include "pscat/potentials.hpp"
#include "pscat/specialfn.hpp"
#include "pscat/types.hpp"

namespace pscat {

using IncidentField = std::variant<PlaneWave, PointSource>;

cplx incident_value(const IncidentField& inc, const Vec3& x);
CVec3 incident_gradient(const IncidentField& inc, const Vec3& x);
double incident_wave_number(const IncidentField& inc);

// Incident samples at the volume cells. A point source closer than three cell
// widths to a cartesian cell is averaged over a 4x4x4 subdivision of the cell
// so the right-hand side sees the cell mean rather than the peaked center
// value.
std::vector<cplx> incident_at_cells(const VolumeGrid& grid, const IncidentField& inc);

struct Solution {
  std::vector<cplx> us;        // scattered field at the volume cells
  std::vector<cplx> psi;       // boundary density at the nodes
  std::vector<cplx> ui_cells;  // incident samples the solve used
  int iterations = 0;          // 0 when the factored dense path answered
};

struct SolverOptions {
  int dense_limit = 3000;  // assemble and factor up to this many unknowns
  int max_iterations = 400;
  double tolerance = 1e-8;
};

// One scattering configuration: coupled volume (Lippmann-Schwinger rows at
// the cells) and boundary (exterior Dirichlet trace rows at the nodes)
// system. The dense factorization is cached so repeated solves against new
// incident fields cost one back-substitution each.
class DiscreteScene {
 public:
  DiscreteScene(SceneC scene, BoundaryGrid boundary, VolumeGrid volume,
                SolverOptions options = {});

  const SceneC& scene() const { return scene_; }
  const BoundaryGrid& boundary() const { return boundary_; }
  const VolumeGrid& volume() const { return volume_; }
  std::size_t unknowns() const { return volume_.size() + boundary_.size(); }

  Solution solve(const IncidentField& inc) const;

  std::vector<cplx> far_field(const Solution& sol,
                              const std::vector<Vec3>& directions) const;

  // scattered field at exterior points; DomainError inside the obstacle
  std::vector<cplx> scattered_field(const Solution& sol,
                                    const std::vector<Vec3>& points,
                                    PotentialWarnings* warnings = nullptr) const;

 private:
  void ensure_factorization() const;
  Eigen::VectorXcd apply_operator(const Eigen::VectorXcd& v) const;
  Eigen::VectorXcd run_gmres(const Eigen::VectorXcd& rhs, int* iterations) const;

  SceneC scene_;
  BoundaryGrid boundary_;
  VolumeGrid volume_;
  SolverOptions options_;
  LayerDiagonals layer_diag_;
  std::vector<cplx> volume_diag_;
  mutable std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

// Finite-difference residual of the difference field w = us_q - us_qt on the
// interior cells of a shared cartesian lattice, against the source term the
// contrast perturbation induces.
struct DifferenceResidual {
  double residual_norm = 0.0;
  double dominant_norm = 0.0;
  double ratio = 0.0;
  int interior_cells = 0;
};

DifferenceResidual difference_residual(const SceneC& scene_q,
                                       const SceneC& scene_qt, double h,
                                       const IncidentField& inc,
                                       const SolverOptions& options = {});

}  // namespace pscat
