#include "pscat/herglotz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pscat/geometry.hpp"

namespace pscat {

cplx herglotz_wave(const HerglotzDensity& density, const Vec3& x) {
  cplx acc(0.0, 0.0);
  for (std::size_t j = 0; j < density.directions.size(); ++j)
    acc += density.weights[j] *
           std::exp(kImag * density.wave_number * density.directions[j].dot(x));
  return acc;
}

CVec3 herglotz_wave_gradient(const HerglotzDensity& density, const Vec3& x) {
  CVec3 acc = CVec3::Zero();
  for (std::size_t j = 0; j < density.directions.size(); ++j) {
    const cplx e = density.weights[j] *
                   std::exp(kImag * density.wave_number * density.directions[j].dot(x));
    acc += kImag * density.wave_number * e * density.directions[j].cast<cplx>();
  }
  return acc;
}

HerglotzDensity fit_density_general(const std::function<cplx(const Vec3&)>& value,
                                    const std::function<CVec3(const Vec3&)>& gradient,
                                    const std::vector<Vec3>& region_points,
                                    const std::vector<Vec3>& directions,
                                    double kappa,
                                    std::optional<double> lambda) {
  if (region_points.empty())
    throw PreconditionError("fit_density: region has no sample points");
  if (directions.size() < 6)
    throw PreconditionError("fit_density: at least 6 directions required");
  if (lambda && *lambda < 0.0)
    throw PreconditionError("fit_density: regularization must be nonnegative");

  const std::size_t P = region_points.size();
  const std::size_t n = directions.size();
  Eigen::MatrixXcd A(4 * P, n);
  Eigen::VectorXcd b(4 * P);
  for (std::size_t p = 0; p < P; ++p) {
    const Vec3& x = region_points[p];
    b[4 * p] = value(x);
    const CVec3 g = gradient(x) / kappa;
    for (int d = 0; d < 3; ++d) b[4 * p + 1 + d] = g[d];
    for (std::size_t j = 0; j < n; ++j) {
      const cplx e = std::exp(kImag * kappa * directions[j].dot(x));
      A(4 * p, j) = e;
      const CVec3 ge = kImag * e * directions[j].cast<cplx>();  // gradient over kappa
      for (int d = 0; d < 3; ++d) A(4 * p + 1 + d, j) = ge[d];
    }
  }

  Eigen::MatrixXcd N = A.adjoint() * A;
  const double max_diag = N.diagonal().real().maxCoeff();
  const double lam = lambda ? *lambda : 1e-8 * max_diag;
  if (lam == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(N);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e16)
      throw NumericsError("ill_conditioned",
                          "normal equations conditioning exceeds 1e16; set a "
                          "positive regularization");
  }
  N.diagonal().array() += lam;
  Eigen::VectorXcd g = N.ldlt().solve(A.adjoint() * b);

  HerglotzDensity density;
  density.directions = directions;
  density.weights.assign(g.data(), g.data() + n);
  density.wave_number = kappa;
  density.region_points = region_points;
  density.lambda_used = lam;
  for (std::size_t p = 0; p < P; ++p) {
    const Vec3& x = region_points[p];
    density.sup_value_error =
        std::max(density.sup_value_error, std::abs(herglotz_wave(density, x) - value(x)));
    density.sup_gradient_error = std::max(
        density.sup_gradient_error,
        (herglotz_wave_gradient(density, x) - gradient(x)).norm());
  }
  return density;
}

HerglotzDensity fit_density(const PointSource& target,
                            const std::vector<Vec3>& region_points, int n_dirs,
                            std::optional<double> lambda) {
  if (n_dirs < 6) throw PreconditionError("fit_density: at least 6 directions required");
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& p : region_points) dist = std::min(dist, (p - target.location).norm());
  if (!(dist >= 0.1))
    throw PreconditionError(
        "fit_density: source point must stay at distance 0.1 from the region");

  HerglotzDensity density = fit_density_general(
      [&](const Vec3& x) { return evaluate_source(target, x); },
      [&](const Vec3& x) { return source_gradient(target, x); }, region_points,
      fibonacci_directions(n_dirs), target.wave_number, lambda);
  density.target = target;
  return density;
}

std::vector<cplx> synthesize_scattered_response(
    const HerglotzDensity& density, const std::vector<PlaneWaveResponse>& responses) {
  std::size_t n_points = responses.empty() ? 0 : responses.front().values.size();
  for (const auto& r : responses)
    if (r.values.size() != n_points)
      throw PreconditionError("synthesize_scattered_response: responses disagree on points");

  std::vector<cplx> out(n_points, cplx(0.0, 0.0));
  std::vector<Vec3> absent;
  for (std::size_t j = 0; j < density.directions.size(); ++j) {
    const Vec3& d = density.directions[j];
    const PlaneWaveResponse* match = nullptr;
    for (const auto& r : responses)
      if ((r.direction - d).norm() <= 1e-14) {
        match = &r;
        break;
      }
    if (!match) {
      absent.push_back(d);
      continue;
    }
    for (std::size_t p = 0; p < n_points; ++p) out[p] += density.weights[j] * match->values[p];
  }
  if (!absent.empty()) {
    std::ostringstream msg;
    msg << "synthesize_scattered_response: no solved field for direction(s)";
    for (const auto& d : absent)
      msg << " (" << d.x() << ", " << d.y() << ", " << d.z() << ")";
    throw PreconditionError(msg.str());
  }
  return out;
}

}  // namespace pscat
