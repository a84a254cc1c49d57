#pragma once

#include <string>
#include <vector>

#include "pscat/types.hpp"

namespace pscat {

enum class SourceKind { monopole, dipole };

// Point source: either the free-space kernel e^{ikr}/(4 pi r) (monopole) or
// the first-order radiating multipole h_1^{(1)}(k rho) cos(psi) with psi
// measured from `axis` (dipole). The dipole has a 1/rho^2 singularity.
struct PointSource {
  SourceKind kind = SourceKind::monopole;
  Vec3 location = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // dipole polar axis; ignored for monopole
  double wave_number = 1.0;
};

struct PlaneWave {
  Vec3 direction = Vec3::UnitZ();
  double wave_number = 1.0;
};

// e^{ik|x-y|} / (4 pi |x-y|). Throws DomainError when x == y.
cplx fundamental_solution(const Vec3& x, const Vec3& y, double kappa);

// gradient in the first argument
CVec3 fundamental_solution_grad_x(const Vec3& x, const Vec3& y, double kappa);

// h_1^{(1)}(z) = -e^{iz}(z + i)/z^2, z > 0. Throws DomainError for z <= 0.
cplx spherical_hankel_1_1(double z);

cplx evaluate_source(const PointSource& src, const Vec3& y);
CVec3 source_gradient(const PointSource& src, const Vec3& y);

cplx evaluate_plane_wave(const PlaneWave& pw, const Vec3& x);
CVec3 plane_wave_gradient(const PlaneWave& pw, const Vec3& x);

enum class MieKind { soft_sphere, homogeneous_ball };

struct MieFarField {
  std::vector<cplx> values;           // one entry per observation direction
  std::vector<std::string> warnings;  // nonempty if the series tail failed its ratio test
};

// Partial-wave reference far field for a sound-soft sphere or a penetrable
// homogeneous ball centered at the origin, normalized so that
// u_s ~ e^{ik|x|}/|x| * A(xhat, theta). `contrast` is 1 - q (ball only).
// n_terms == 0 selects ceil(kappa0 * radius) + 20; an explicit n_terms must
// satisfy n_terms >= kappa0 * radius + 10.
MieFarField mie_oracle(MieKind kind, double radius, cplx contrast, double kappa0,
                       const Vec3& theta, const std::vector<Vec3>& obs_dirs,
                       int n_terms = 0);

// Spherical Bessel j_0..j_nmax at complex argument, by downward recurrence.
std::vector<cplx> spherical_jn_complex(int n_max, cplx z);

}  // namespace pscat
