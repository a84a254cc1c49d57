#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pscat/specialfn.hpp"
#include "pscat/types.hpp"

namespace pscat {

// Finite plane-wave superposition approximating a singular source on a
// compact sample region. Weights are free coefficients (quadrature already
// absorbed), so a dictionary member is represented by a single unit weight.
struct HerglotzDensity {
  std::vector<Vec3> directions;
  std::vector<cplx> weights;
  double wave_number = 1.0;
  std::optional<PointSource> target;
  std::vector<Vec3> region_points;
  double sup_value_error = 0.0;
  double sup_gradient_error = 0.0;
  double lambda_used = 0.0;
};

cplx herglotz_wave(const HerglotzDensity& density, const Vec3& x);
CVec3 herglotz_wave_gradient(const HerglotzDensity& density, const Vec3& x);

// Regularized least squares on value rows plus gradient rows (scaled by 1/k
// to keep the two blocks commensurate). lambda empty: 1e-8 times the largest
// normal-equation diagonal. lambda == 0 with conditioning beyond 1e16 throws
// a NumericsError advising positive regularization.
HerglotzDensity fit_density_general(const std::function<cplx(const Vec3&)>& value,
                                    const std::function<CVec3(const Vec3&)>& gradient,
                                    const std::vector<Vec3>& region_points,
                                    const std::vector<Vec3>& directions,
                                    double kappa,
                                    std::optional<double> lambda = std::nullopt);

// Fit against a point source; the singular point must stay at distance 0.1
// or more from every region sample. Directions come from the Fibonacci
// lattice of the requested size.
HerglotzDensity fit_density(const PointSource& target,
                            const std::vector<Vec3>& region_points, int n_dirs,
                            std::optional<double> lambda = std::nullopt);

// Scattered response to one plane-wave direction, sampled at shared
// evaluation points.
struct PlaneWaveResponse {
  Vec3 direction;
  std::vector<cplx> values;
};

// Superposition sum_j g_j u^s(x; theta_j). Every density direction must
// match a response direction exactly (1e-14); absent directions are listed
// in the error.
std::vector<cplx> synthesize_scattered_response(
    const HerglotzDensity& density, const std::vector<PlaneWaveResponse>& responses);

}  // namespace pscat
