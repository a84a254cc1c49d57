#include "pscat/probing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pscat/grids.hpp"
#include "pscat/potentials.hpp"

namespace pscat {

const char* point_class_name(PointClass c) {
  switch (c) {
    case PointClass::obstacle_boundary: return "obstacle_boundary";
    case PointClass::medium_boundary: return "medium_boundary";
    case PointClass::not_boundary: return "not_boundary";
    default: return "indeterminate";
  }
}

namespace {

// Intersection of the ray x = o + t d with a convex catalogue shape, as a
// single parameter interval clipped to t >= 0. Returns false when empty.
bool ray_interval(const Shape& sh, const Vec3& o, const Vec3& d, double& t0, double& t1) {
  const Vec3 oc = o - sh.center;
  const double b = d.dot(oc);
  const double c = oc.squaredNorm() - sh.radius * sh.radius;
  const double disc = b * b - c;
  if (disc <= 0.0) return false;
  const double s = std::sqrt(disc);
  t0 = std::max(0.0, -b - s);
  t1 = -b + s;
  if (t1 <= t0) return false;

  double plane_t = 0.0;
  double sign = 0.0;
  if (sh.kind == ShapeKind::half_ball) {
    // (x - c) . axis <= 0
    sign = -1.0;
    plane_t = 0.0;
  } else if (sh.kind == ShapeKind::spherical_cap) {
    // (x - c) . axis >= cap_offset
    sign = 1.0;
    plane_t = sh.cap_offset;
  } else {
    return true;
  }
  const double da = d.dot(sh.axis);
  const double oa = oc.dot(sh.axis);
  // sign * ((oa - plane_t) + t * da) >= 0
  const double num = sign * (oa - plane_t);
  const double slope = sign * da;
  if (std::abs(slope) < 1e-15) return num >= 0.0;
  const double cross = -num / slope;
  if (slope > 0.0)
    t0 = std::max(t0, cross);
  else
    t1 = std::min(t1, cross);
  return t1 > t0;
}

}  // namespace

cplx volume_potential_of_source(const SceneC& scene, const IncidentField& inc,
                                const Vec3& x, int n_dirs) {
  if (scene.media.empty()) return cplx(0.0, 0.0);
  const double kappa = scene.wave_number;
  const auto dirs = fibonacci_directions(n_dirs);
  const double w_dir = 4.0 * kPi / n_dirs;

  std::vector<double> gx, gw;
  gauss_legendre(8, 0.0, 1.0, gx, gw);

  cplx acc(0.0, 0.0);
  for (const auto& dir : dirs) {
    for (const auto& comp : scene.media) {
      double t0 = 0.0, t1 = 0.0;
      if (!ray_interval(comp.support, x, dir, t0, t1)) continue;
      t0 = std::max(t0, 1e-12);
      if (t1 <= t0) continue;
      // panels doubling away from the near endpoint, where the incident
      // source (centered at x for probing) still varies fastest
      double lo = t0;
      for (int p = 0; p < 60 && lo < t1; ++p) {
        const double hi = std::min(t1, lo * 2.0 + 1e-12);
        for (int i = 0; i < 8; ++i) {
          const double t = lo + (hi - lo) * gx[i];
          const double wt = (hi - lo) * gw[i];
          const Vec3 y = x + t * dir;
          const cplx phi = std::exp(kImag * kappa * t) / (4.0 * kPi * t);
          acc += w_dir * wt * t * t * comp.contrast_at(y) * incident_value(inc, y) * phi;
        }
        lo = hi;
      }
    }
  }
  return kappa * kappa * acc;
}

PlaneWaveBank solve_plane_wave_bank(const DiscreteScene& scene, int n_dirs) {
  PlaneWaveBank bank;
  bank.directions = fibonacci_directions(n_dirs);
  bank.solutions.reserve(bank.directions.size());
  for (const auto& d : bank.directions)
    bank.solutions.push_back(scene.solve(PlaneWave{d, scene.scene().wave_number}));
  return bank;
}

namespace {

std::vector<Vec3> scatterer_samples(const DiscreteScene& scene, std::size_t target) {
  std::vector<Vec3> out;
  const auto& b = scene.boundary();
  const auto& v = scene.volume();
  if (b.size()) {
    const std::size_t stride = std::max<std::size_t>(1, b.size() / (2 * target / 3));
    for (std::size_t i = 0; i < b.size(); i += stride) out.push_back(b.nodes[i]);
  }
  if (v.size()) {
    const std::size_t share = b.size() ? target / 3 : target;
    const std::size_t stride = std::max<std::size_t>(1, v.size() / share);
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v.cells[i]);
  }
  return out;
}

void fit_tail_slope(IndicatorCurve& curve) {
  std::vector<double> xs, ys;
  const std::size_t K = curve.distances.size();
  if (K < 2) {
    curve.annotations.push_back("slope fit underdetermined: fewer than two points");
    return;
  }
  const std::size_t tail = std::max<std::size_t>(2, (K + 1) / 2);
  for (std::size_t i = K - tail; i < K; ++i) {
    if (curve.magnitudes[i] < 1e-300) continue;
    xs.push_back(std::log(curve.distances[i]));
    ys.push_back(std::log(curve.magnitudes[i]));
  }
  if (xs.size() < 2) {
    curve.annotations.push_back("slope fit underdetermined: vanishing magnitudes");
    return;
  }
  const std::size_t k = xs.size();
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    xm += xs[i];
    ym += ys[i];
  }
  xm /= k;
  ym /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  curve.slope = sxy / sxx;
  if (k > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = ys[i] - ym - curve.slope * (xs[i] - xm);
      ss += r * r;
    }
    curve.slope_uncertainty = std::sqrt(ss / ((k - 2) * sxx));
  }
}

}  // namespace

IndicatorCurve probe_curve(const DiscreteScene& scene, const ProbeSpec& spec,
                           const PlaneWaveBank* bank) {
  if (std::abs(spec.nu.norm() - 1.0) > 1e-9)
    throw PreconditionError("probe_curve: normal must be a unit vector");
  if (spec.h <= 0.0) throw PreconditionError("probe_curve: offset h must be positive");
  if (spec.n_max < 2) throw PreconditionError("probe_curve: need at least two probe points");

  const SceneC& sc = scene.scene();
  const double kappa = sc.wave_number;

  std::vector<double> dist(spec.n_max);
  for (int n = 1; n <= spec.n_max; ++n)
    dist[n - 1] = spec.sequence == SequenceKind::harmonic ? spec.h / n
                                                          : spec.h * std::pow(2.0, -n);
  for (double d : dist)
    if (sc.point_in_scatterer(spec.x0 + d * spec.nu))
      throw PreconditionError("probe_curve: probe point inside the scatterer");

  IndicatorCurve curve;
  curve.x0 = spec.x0;
  curve.nu = spec.nu;
  curve.h = spec.h;
  curve.source_kind = spec.source_kind;
  curve.access_mode = spec.access_mode;

  PlaneWaveBank local_bank;
  const PlaneWaveBank* use_bank = bank;
  std::vector<Vec3> region;
  if (spec.access_mode == AccessMode::farfield) {
    if (!use_bank) {
      local_bank = solve_plane_wave_bank(scene, spec.herglotz_dirs);
      use_bank = &local_bank;
    }
    region = scatterer_samples(scene, 256);
  }

  for (int n = 1; n <= spec.n_max; ++n) {
    const double d = dist[n - 1];
    const Vec3 xn = spec.x0 + d * spec.nu;
    const PointSource src{spec.source_kind, xn, spec.nu, kappa};
    try {
      cplx value(0.0, 0.0);
      if (spec.access_mode == AccessMode::direct) {
        const Solution sol = scene.solve(IncidentField{src});
        if (scene.boundary().size())
          value += apply_layer_potential(scene.boundary(), sol.psi, kappa, {xn})[0];
        if (scene.volume().size()) {
          value -= apply_volume_potential(scene.volume(), sol.us, kappa, {xn})[0];
          value -= volume_potential_of_source(sc, IncidentField{src}, xn);
        }
      } else {
        double sep = std::numeric_limits<double>::infinity();
        for (const auto& p : region) sep = std::min(sep, (p - xn).norm());
        if (!(sep >= 0.1))
          throw PreconditionError(
              "farfield probe point closer than 0.1 to the sample region");
        HerglotzDensity density = fit_density_general(
            [&](const Vec3& y) { return evaluate_source(src, y); },
            [&](const Vec3& y) { return source_gradient(src, y); }, region,
            use_bank->directions, kappa, spec.herglotz_lambda);
        density.target = src;
        std::vector<PlaneWaveResponse> responses(use_bank->directions.size());
        for (std::size_t j = 0; j < use_bank->directions.size(); ++j) {
          responses[j].direction = use_bank->directions[j];
          responses[j].values = scene.scattered_field(use_bank->solutions[j], {xn});
        }
        value = synthesize_scattered_response(density, responses)[0];
      }
      if (!std::isfinite(std::abs(value))) {
        curve.annotations.push_back("step " + std::to_string(n) + ": non-finite response");
        continue;
      }
      curve.distances.push_back(d);
      curve.values.push_back(value);
      curve.magnitudes.push_back(std::abs(value));
    } catch (const ConvergenceError& e) {
      curve.annotations.push_back("step " + std::to_string(n) + ": " + e.what());
    } catch (const PreconditionError& e) {
      if (spec.access_mode == AccessMode::direct) throw;
      curve.annotations.push_back("step " + std::to_string(n) + ": " + e.what());
    }
  }

  fit_tail_slope(curve);
  return curve;
}

PointClass classify_point(const IndicatorCurve& curve_phi, const IndicatorCurve& curve_psi,
                          const ClassifyThresholds& thresholds) {
  if ((curve_phi.x0 - curve_psi.x0).norm() > 1e-12 ||
      (curve_phi.nu - curve_psi.nu).norm() > 1e-12 ||
      std::abs(curve_phi.h - curve_psi.h) > 1e-12)
    throw PreconditionError("classify_point: curves probed different specs");
  if (curve_phi.source_kind != SourceKind::monopole ||
      curve_psi.source_kind != SourceKind::dipole)
    throw PreconditionError("classify_point: expected a monopole and a dipole curve");

  // A bounded indicator (including an identically vanishing one, where the
  // slope fit is empty and reports NaN) marks a point off the boundary.
  if (!(curve_psi.slope < thresholds.psi_flat)) return PointClass::not_boundary;
  if (curve_phi.slope <= thresholds.phi_obstacle) return PointClass::obstacle_boundary;
  if (curve_phi.slope >= thresholds.phi_flat) return PointClass::medium_boundary;
  return PointClass::indeterminate;
}

ScanResult scan_boundary(const DiscreteScene& scene,
                         const std::vector<BoundaryPoint>& candidates,
                         const ProbeSpec& spec_template,
                         const ClassifyThresholds& thresholds) {
  ScanResult result;
  result.candidates = candidates;
  const double qnan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const BoundaryPoint& cand = candidates[i];
    if (cand.label == FaceLabel::contact) {
      result.classes.push_back(PointClass::indeterminate);
      result.phi_slopes.push_back(qnan);
      result.psi_slopes.push_back(qnan);
      result.annotations.push_back("candidate " + std::to_string(i) +
                                   ": contact point, excluded from scoring");
      continue;
    }
    ProbeSpec spec = spec_template;
    spec.x0 = cand.point;
    spec.nu = cand.normal;
    try {
      spec.source_kind = SourceKind::monopole;
      const IndicatorCurve phi = probe_curve(scene, spec);
      spec.source_kind = SourceKind::dipole;
      const IndicatorCurve psi = probe_curve(scene, spec);
      result.classes.push_back(classify_point(phi, psi, thresholds));
      result.phi_slopes.push_back(phi.slope);
      result.psi_slopes.push_back(psi.slope);
      result.annotations.push_back("");
    } catch (const Error& e) {
      result.classes.push_back(PointClass::indeterminate);
      result.phi_slopes.push_back(qnan);
      result.psi_slopes.push_back(qnan);
      result.annotations.push_back("candidate " + std::to_string(i) + ": " + e.what());
    }
    const PointClass truth = cand.label == FaceLabel::obstacle_exterior
                                 ? PointClass::obstacle_boundary
                                 : PointClass::medium_boundary;
    ++result.n_scored;
    if (result.classes.back() == truth) ++result.n_correct;
  }
  result.accuracy =
      result.n_scored ? static_cast<double>(result.n_correct) / result.n_scored : 0.0;
  return result;
}

}  // namespace pscat
