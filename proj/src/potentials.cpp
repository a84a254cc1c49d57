#include "pscat/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pscat {

namespace {

cplx sph_j0(double z) { return z == 0.0 ? cplx(1.0, 0.0) : cplx(std::sin(z) / z, 0.0); }
cplx sph_h0(double z) { return -kImag * std::exp(kImag * z) / z; }
cplx sph_j1(double z) { return cplx(std::sin(z) / (z * z) - std::cos(z) / z, 0.0); }
cplx sph_h1(double z) { return -std::exp(kImag * z) * (z + kImag) / (z * z); }

double static_sl(const Vec3& x, const Vec3& y) { return 1.0 / (4.0 * kPi * (x - y).norm()); }

// static double layer kernel restricted to a sphere of radius R: both points
// on the sphere, (y - x).normal(y) = r^2 / (2R)
double static_dl_on_sphere(double R, double r) { return -1.0 / (8.0 * kPi * R * r); }

}  // namespace

cplx sphere_sl_unit(double R, double kappa, double s) {
  if (s > R) return kImag * kappa * R * R * sph_j0(kappa * R) * sph_h0(kappa * s);
  return kImag * kappa * R * R * sph_j0(kappa * s) * sph_h0(kappa * R);
}

cplx sphere_dl_unit(double R, double kappa, double s) {
  if (s > R) return -kImag * kappa * kappa * R * R * sph_j1(kappa * R) * sph_h0(kappa * s);
  return -kImag * kappa * kappa * R * R * sph_h1(kappa * R) * sph_j0(kappa * s);
}

LayerDiagonals layer_diagonals(const BoundaryGrid& grid, double kappa) {
  LayerDiagonals d;
  d.sl.assign(grid.size(), cplx(0.0, 0.0));
  d.dl.assign(grid.size(), cplx(0.0, 0.0));
  for (std::size_t fi = 0; fi < grid.faces.size(); ++fi) {
    const Face& f = grid.faces[fi];
    const auto [begin, end] = grid.face_ranges[fi];
    if (f.kind == FaceKind::full_sphere) {
      for (std::size_t i = begin; i < end; ++i) {
        cplx sl_acc(f.radius, 0.0);  // closed-form on-surface value of SL0[1]
        cplx dl_acc(-0.5, 0.0);      // Gauss: pv DL0[1] on a closed surface
        for (std::size_t j = begin; j < end; ++j) {
          if (j == i) continue;
          const double r = (grid.nodes[i] - grid.nodes[j]).norm();
          sl_acc -= grid.weights[j] * static_sl(grid.nodes[i], grid.nodes[j]);
          dl_acc -= grid.weights[j] * static_dl_on_sphere(f.radius, r);
        }
        d.sl[i] = sl_acc + kImag * kappa * grid.weights[i] / (4.0 * kPi);
        d.dl[i] = dl_acc;
      }
    } else {
      const bool curved = f.kind == FaceKind::cap_surface;
      for (std::size_t i = begin; i < end; ++i) {
        const double a = std::sqrt(grid.weights[i] / kPi);
        d.sl[i] = 0.5 * a + kImag * kappa * grid.weights[i] / (4.0 * kPi);
        d.dl[i] = curved ? cplx(-a / (4.0 * f.radius), 0.0) : cplx(0.0, 0.0);
      }
    }
  }
  return d;
}

std::vector<cplx> volume_diagonals(const VolumeGrid& grid, double kappa) {
  std::vector<cplx> d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = std::cbrt(3.0 * grid.weights[i] / (4.0 * kPi));
    d[i] = kappa * kappa * grid.contrast[i] *
           (0.5 * a * a + kImag * kappa * grid.weights[i] / (4.0 * kPi));
  }
  return d;
}

std::vector<cplx> apply_layer_potential(const BoundaryGrid& grid,
                                        const std::vector<cplx>& psi,
                                        double kappa,
                                        const std::vector<Vec3>& targets,
                                        PotentialWarnings* warnings) {
  if (psi.size() != grid.size())
    throw PreconditionError("apply_layer_potential: density size does not match grid");

  // per-face mesh width for the near-field switch
  std::vector<double> face_width(grid.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < grid.faces.size(); ++fi) {
    const auto [begin, end] = grid.face_ranges[fi];
    for (std::size_t j = begin; j < end; ++j)
      face_width[fi] = std::max(face_width[fi], grid.mesh_width(j));
  }

  std::vector<cplx> out(targets.size(), cplx(0.0, 0.0));
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Vec3& x = targets[ti];
    cplx acc(0.0, 0.0);
    for (std::size_t fi = 0; fi < grid.faces.size(); ++fi) {
      const Face& f = grid.faces[fi];
      const auto [begin, end] = grid.face_ranges[fi];
      const double s = (x - f.center).norm();
      const bool near_sphere = f.kind == FaceKind::full_sphere &&
                               std::abs(s - f.radius) < 2.0 * face_width[fi] &&
                               std::abs(s - f.radius) > 1e-14;
      cplx psi_star(0.0, 0.0);
      if (near_sphere) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = begin; j < end; ++j) {
          const double r = (x - grid.nodes[j]).norm();
          if (r < best) {
            best = r;
            psi_star = psi[j];
          }
        }
      }
      for (std::size_t j = begin; j < end; ++j) {
        const double r = (x - grid.nodes[j]).norm();
        if (warnings && r < 0.1 * grid.mesh_width(j)) {
          warnings->messages.push_back(
              "target " + std::to_string(ti) + " is " + std::to_string(r) +
              " from boundary node " + std::to_string(j) + " (mesh width " +
              std::to_string(grid.mesh_width(j)) + ")");
        }
        const cplx k = dl_point(x, grid.nodes[j], grid.normals[j], kappa) +
                       kImag * kappa * sl_point(x, grid.nodes[j], kappa);
        acc += grid.weights[j] * k * (psi[j] - psi_star);
      }
      if (near_sphere)
        acc += psi_star * (sphere_dl_unit(f.radius, kappa, s) +
                           kImag * kappa * sphere_sl_unit(f.radius, kappa, s));
    }
    out[ti] = acc;
  }
  return out;
}

std::vector<cplx> layer_trace_exterior(const BoundaryGrid& grid,
                                       const std::vector<cplx>& psi,
                                       double kappa) {
  if (psi.size() != grid.size())
    throw PreconditionError("layer_trace_exterior: density size does not match grid");
  const LayerDiagonals diag = layer_diagonals(grid, kappa);
  std::vector<cplx> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cplx acc = 0.5 * psi[i] + (diag.dl[i] + kImag * kappa * diag.sl[i]) * psi[i];
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (j == i) continue;
      const cplx k = dl_point(grid.nodes[i], grid.nodes[j], grid.normals[j], kappa) +
                     kImag * kappa * sl_point(grid.nodes[i], grid.nodes[j], kappa);
      acc += grid.weights[j] * k * psi[j];
    }
    out[i] = acc;
  }
  return out;
}

std::vector<cplx> apply_volume_potential(const VolumeGrid& grid,
                                         const std::vector<cplx>& values,
                                         double kappa,
                                         const std::vector<Vec3>& targets) {
  if (values.size() != grid.size())
    throw PreconditionError("apply_volume_potential: values size does not match grid");
  const double k2 = kappa * kappa;
  std::vector<cplx> out(targets.size(), cplx(0.0, 0.0));
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Vec3& x = targets[ti];
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double r = (x - grid.cells[j]).norm();
      if (r < best) {
        best = r;
        nearest = j;
      }
    }
    const double a =
        grid.size() ? std::cbrt(3.0 * grid.weights[nearest] / (4.0 * kPi)) : 0.0;
    const bool self = grid.size() && best < a;
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (self && j == nearest) continue;
      acc += grid.weights[j] * grid.contrast[j] * values[j] *
             fundamental_solution(x, grid.cells[j], kappa);
    }
    if (self)
      acc += grid.contrast[nearest] * values[nearest] *
             (0.5 * a * a + kImag * kappa * grid.weights[nearest] / (4.0 * kPi));
    out[ti] = k2 * acc;
  }
  return out;
}

}  // namespace pscat
