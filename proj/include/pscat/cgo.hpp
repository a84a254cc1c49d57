#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pscat/geometry.hpp"
#include "pscat/types.hpp"

namespace pscat {

// Complex phase data for one frequency/size pair. The frame and the zeta
// vectors live in the rotated working coordinates y = U^T x in which the
// contact plane is {y3 = plane_offset}; U is the identity when no contact is
// given. Amplitudes of the resulting exponentials grow like e^{c tau}, so
// keep tau at desk scale (<= 100) when evaluating products.
struct CGOPhase {
  Vec3 xi = Vec3::Zero();
  double tau = 0.0;
  Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY(), e3 = Vec3::UnitZ();
  CVec3 zeta1 = CVec3::Zero(), zeta1_star = CVec3::Zero();
  CVec3 zeta2 = CVec3::Zero(), zeta2_star = CVec3::Zero();
  Eigen::Matrix3d U = Eigen::Matrix3d::Identity();  // x = U y
  double plane_offset = 0.0;
  bool has_contact = false;
};

// Rotation carrying the contact plane to {y3 = offset}: columns of U are the
// two in-plane tangents and the plane normal.
struct PlaneFrame {
  Eigen::Matrix3d U = Eigen::Matrix3d::Identity();
  double offset = 0.0;
};

PlaneFrame plane_frame(const PlanarContact& contact);

// xi must have a nonvanishing in-plane part (xi1e > 0); tau > 0.
CGOPhase build_phase(const Vec3& xi, double tau,
                     const std::optional<PlanarContact>& contact);

// Checks that the bilinear null property of all four zeta vectors survives
// conjugation by an orthogonal matrix (tolerance 1e-12).
bool unitary_conjugate_check(const CGOPhase& phase, const Eigen::Matrix3d& U);

// Cube grid in the working coordinates: n^3 nodes, spacing side/n, node
// (i,j,k) at center + spacing*(i - n/2, j - n/2, k - n/2). For mirrored
// extensions center[2] equals the plane offset, so k = n/2 lies on the plane
// and k <-> n-k are reflection partners (k = 0 unpaired).
struct CubeGridSpec {
  Vec3 center = Vec3::Zero();
  double side = 0.0;
  int n = 0;
};

struct ContrastExtension {
  int component = -1;
  CubeGridSpec spec;
  Eigen::Matrix3d U = Eigen::Matrix3d::Identity();  // x = U y
  double plane_offset = 0.0;
  bool mirrored = false;
  double b0_radius = 0.0;    // ball about spec.center containing the support
  std::vector<cplx> values;  // raw contrast 1 - q, mirrored across the plane

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * spec.n + j) * static_cast<std::size_t>(spec.n) + k;
  }
  double delta() const { return spec.side / spec.n; }
  Vec3 node(int i, int j, int k) const {
    return spec.center +
           delta() * Vec3(i - spec.n / 2, j - spec.n / 2, k - spec.n / 2);
  }
};

// Cube sized 2.2x the diameter of the support union (mirrored union for
// contacted components), centered on the plane for contacted components.
CubeGridSpec default_cube(const MediumComponent& component, int n);

// Mirror-even extension of the component contrast across its contact plane;
// a cube that fails to cover the mirrored union raises a coverage error with
// the required bounds.
ContrastExtension mirror_extend(const MediumComponent& component, const CubeGridSpec& spec);

// Plain (unmirrored, unrotated) extension for detached components.
ContrastExtension plain_extend(const MediumComponent& component, int component_index,
                               const CubeGridSpec& spec);

struct CGOSolutionPair {
  CGOPhase phase;
  int zeta_index = 1;  // 1 or 2: which zeta of the phase drives the carrier
  ContrastExtension ext;
  double kappa0 = 1.0;
  std::vector<cplx> omega;  // remainder on the cube nodes
  Vec3 sigma_shift = Vec3::Zero();  // lattice shift that kept the symbol away from zero
  double omega_l2_b0 = 0.0;
  double fd_residual = 0.0;  // carrier-factored central-difference residual
  int iterations = 0;
  std::vector<cplx> psi;  // filled by reflected_pair; empty before
  double psi_fd_residual = 0.0;
};

// Fixed-point solve of the remainder equation
//   (Laplacian + 2i zeta . grad) omega = -kappa0^2 p (1 + omega)
// on the periodized cube with a shifted Fourier lattice. Divergence (contrast
// too large for the given tau) and unavoidable symbol zeros raise
// NumericsError with codes "divergence" and "symbol_zero".
CGOSolutionPair solve_remainder(const ContrastExtension& ext, const CGOPhase& phase,
                                int zeta_index = 1, double kappa0 = 1.0);

// psi(y) = u(y) - u(Ry) on the grid; exact zero on the plane row and exactly
// antisymmetric between paired rows by construction.
CGOSolutionPair reflected_pair(CGOSolutionPair sol);

// Field evaluation in working coordinates (trilinear remainder, exact carrier).
cplx remainder_at(const CGOSolutionPair& sol, const Vec3& y);
cplx cgo_value(const CGOSolutionPair& sol, const Vec3& y);
cplx reflected_value(const CGOSolutionPair& sol, const Vec3& y);

// Max relative discrepancy between psi1*psi2 and its four-term exponential
// expansion at seeded random sample points. An algebraic identity: the
// result stays at rounding level for any remainder fields.
double product_expansion_check(const CGOSolutionPair& pair1, const CGOSolutionPair& pair2,
                               int n_samples, unsigned long long seed = 20240817ull);

struct FourierIdentityReport {
  Vec3 eta = Vec3::Zero();
  std::vector<double> tau_list;
  std::vector<cplx> integrals;           // I(tau)
  std::vector<std::string> annotations;  // per-tau failures, "" when clean
  cplx fourier_reference{0.0, 0.0};      // F(eta)
  std::vector<double> discrepancy;       // |I(tau) - F(eta)|
  double extrapolated_discrepancy = 0.0;
};

// Builds the patched test functions for both scenes (reflected pairs on
// contacted components, plain CGO on detached ones), integrates the contrast
// difference against their product, and compares with the Fourier transform
// of the mirror-extended contrast difference.
FourierIdentityReport fourier_identity_run(const SceneC& scene_q, const SceneC& scene_qt,
                                           const Vec3& eta, const std::vector<double>& tau_list,
                                           int cube_n = 64);

}  // namespace pscat
