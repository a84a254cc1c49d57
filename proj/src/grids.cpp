#include "pscat/grids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pscat {

void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = mid - half * z;
    x[n - 1 - i] = mid + half * z;
    w[i] = w[n - 1 - i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
  }
}

double BoundaryGrid::total_area() const {
  double s = 0.0;
  for (double v : weights) s += v;
  return s;
}

double VolumeGrid::total_volume() const {
  double s = 0.0;
  for (double v : weights) s += v;
  return s;
}

namespace {

Vec3 frame_t1(const Vec3& a) {
  Vec3 t = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return a.cross(t).normalized();
}

void add_spherical_face_nodes(BoundaryGrid& g, const Face& f, int n_target) {
  const double mu_lo = (f.kind == FaceKind::full_sphere) ? -1.0 : f.mu_min;
  int n_mu = std::max(2, static_cast<int>(std::lround(std::sqrt(n_target / 2.0))));
  int n_phi = std::max(4, static_cast<int>(std::lround(static_cast<double>(n_target) / n_mu)));
  std::vector<double> xm, wm;
  gauss_legendre(n_mu, mu_lo, 1.0, xm, wm);
  const Vec3 t1 = frame_t1(f.axis);
  const Vec3 t2 = f.axis.cross(t1);
  const double dphi = 2.0 * kPi / n_phi;
  for (int im = 0; im < n_mu; ++im) {
    const double mu = xm[im];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi = dphi * (ip + 0.5);
      const Vec3 dir = mu * f.axis + s * (std::cos(phi) * t1 + std::sin(phi) * t2);
      g.nodes.push_back(f.center + f.radius * dir);
      g.normals.push_back(dir);
      g.weights.push_back(f.radius * f.radius * wm[im] * dphi);
    }
  }
}

void add_flat_face_nodes(BoundaryGrid& g, const Face& f, int n_target) {
  const double r0 = (f.kind == FaceKind::flat_annulus) ? f.inner_radius : 0.0;
  int n_r = std::max(2, static_cast<int>(std::lround(std::sqrt(n_target / 3.0))));
  int n_phi = std::max(4, static_cast<int>(std::lround(static_cast<double>(n_target) / n_r)));
  std::vector<double> xr, wr;
  gauss_legendre(n_r, r0, f.radius, xr, wr);
  const Vec3 t1 = frame_t1(f.axis);
  const Vec3 t2 = f.axis.cross(t1);
  const double dphi = 2.0 * kPi / n_phi;
  for (int ir = 0; ir < n_r; ++ir) {
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi = dphi * (ip + 0.5);
      g.nodes.push_back(f.center + xr[ir] * (std::cos(phi) * t1 + std::sin(phi) * t2));
      g.normals.push_back(f.axis);
      g.weights.push_back(wr[ir] * xr[ir] * dphi);
    }
  }
}

}  // namespace

BoundaryGrid build_boundary_grid(const SceneC& scene, int target_nodes) {
  BoundaryGrid g;
  const auto all_faces = scene_faces(scene);
  std::vector<Face> dfaces;
  for (const auto& f : all_faces)
    if (f.owner == -1) dfaces.push_back(f);  // the obstacle boundary, contacts included
  if (dfaces.empty()) return g;  // nothing to mesh, any target is fine
  if (target_nodes <= 0) throw ConfigError("build_boundary_grid: target_nodes must be positive");

  double total = 0.0;
  for (const auto& f : dfaces) total += f.area();
  for (const auto& f : dfaces) {
    const int n_face =
        std::max(16, static_cast<int>(std::lround(target_nodes * f.area() / total)));
    const std::size_t begin = g.nodes.size();
    if (f.kind == FaceKind::full_sphere || f.kind == FaceKind::cap_surface) {
      add_spherical_face_nodes(g, f, n_face);
    } else {
      add_flat_face_nodes(g, f, n_face);
    }
    const std::size_t end = g.nodes.size();
    g.faces.push_back(f);
    g.face_ranges.emplace_back(begin, end);
    for (std::size_t i = begin; i < end; ++i) {
      g.labels.push_back(f.label);
      g.face_id.push_back(static_cast<int>(g.faces.size()) - 1);
    }
  }
  return g;
}

namespace {

void add_component_radial_cells(VolumeGrid& g, const SceneC& scene, int ci, int n_target) {
  const Shape& sh = scene.media[ci].support;
  // normalize every catalogue shape to a cap description about `axis`:
  // region = {|x - c| <= R, (x - c).axis >= t}; ball has t = -R.
  Vec3 axis = Vec3::UnitZ();
  double t = -sh.radius;
  if (sh.kind == ShapeKind::half_ball) {
    axis = -sh.axis;
    t = 0.0;
  } else if (sh.kind == ShapeKind::spherical_cap) {
    axis = sh.axis;
    t = sh.cap_offset;
  }

  int n_r = std::max(3, static_cast<int>(std::lround(std::cbrt(n_target / 2.0))));
  int n_mu = n_r;
  int n_phi = std::max(4, static_cast<int>(std::lround(static_cast<double>(n_target) / (n_r * n_mu))));

  // radial panels; split at |t| when the shape contains full shells (t < 0)
  std::vector<std::pair<double, double>> panels;
  if (t > 0.0) {
    panels.emplace_back(t, sh.radius);
  } else if (t <= -sh.radius) {
    panels.emplace_back(0.0, sh.radius);
  } else {
    panels.emplace_back(0.0, -t);
    panels.emplace_back(-t, sh.radius);
  }

  const Vec3 t1 = frame_t1(axis);
  const Vec3 t2 = axis.cross(t1);
  const double dphi = 2.0 * kPi / n_phi;
  for (const auto& [ra, rb] : panels) {
    const int nr_panel = std::max(2, static_cast<int>(std::lround(n_r * (rb - ra) / (sh.radius - (t > 0.0 ? t : 0.0)))));
    std::vector<double> xr, wr;
    gauss_legendre(nr_panel, ra, rb, xr, wr);
    for (int ir = 0; ir < nr_panel; ++ir) {
      const double r = xr[ir];
      const double mu_lo = std::clamp(t / r, -1.0, 1.0);
      if (mu_lo >= 1.0) continue;
      std::vector<double> xm, wm;
      gauss_legendre(n_mu, mu_lo, 1.0, xm, wm);
      for (int im = 0; im < n_mu; ++im) {
        const double mu = xm[im];
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        for (int ip = 0; ip < n_phi; ++ip) {
          const double phi = dphi * (ip + 0.5);
          const Vec3 x =
              sh.center + r * (mu * axis + s * (std::cos(phi) * t1 + std::sin(phi) * t2));
          g.cells.push_back(x);
          g.weights.push_back(r * r * wr[ir] * wm[im] * dphi);
          g.contrast.push_back(scene.media[ci].contrast_at(x));
          g.component.push_back(ci);
        }
      }
    }
  }
}

}  // namespace

VolumeGrid build_volume_grid_radial(const SceneC& scene, int target_cells) {
  if (target_cells <= 0) throw ConfigError("build_volume_grid_radial: target_cells must be positive");
  VolumeGrid g;
  g.layout = VolumeGrid::Layout::radial;
  if (scene.media.empty()) return g;
  double total = 0.0;
  for (const auto& m : scene.media) total += m.support.volume();
  for (std::size_t i = 0; i < scene.media.size(); ++i) {
    const int n = std::max(
        32, static_cast<int>(std::lround(target_cells * scene.media[i].support.volume() / total)));
    add_component_radial_cells(g, scene, static_cast<int>(i), n);
  }
  return g;
}

VolumeGrid build_volume_grid_cartesian(const SceneC& scene, double h) {
  if (h <= 0.0) throw ConfigError("build_volume_grid_cartesian: h must be positive");
  VolumeGrid g;
  g.layout = VolumeGrid::Layout::cartesian;
  g.h = h;
  if (scene.media.empty()) return g;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& m : scene.media) {
    lo = lo.cwiseMin(m.support.center - Vec3::Constant(m.support.radius));
    hi = hi.cwiseMax(m.support.center + Vec3::Constant(m.support.radius));
  }
  g.origin = lo - Vec3::Constant(0.5 * h);
  for (int d = 0; d < 3; ++d)
    g.dims[d] = static_cast<int>(std::ceil((hi[d] - g.origin[d]) / h)) + 1;

  g.cell_at.assign(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2], -1);
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const Vec3 x = g.origin + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
        int comp = -1;
        for (std::size_t m = 0; m < scene.media.size(); ++m)
          if (scene.media[m].support.contains(x)) {
            comp = static_cast<int>(m);
            break;
          }
        if (comp < 0) continue;
        g.cell_at[g.lattice_index(i, j, k)] = static_cast<int>(g.cells.size());
        g.cells.push_back(x);
        g.weights.push_back(h * h * h);
        g.contrast.push_back(scene.media[comp].contrast_at(x));
        g.component.push_back(comp);
      }
  return g;
}

}  // namespace pscat
