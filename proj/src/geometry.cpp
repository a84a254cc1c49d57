#include "pscat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace pscat {

namespace {

// Lower bound for the distance from x to the shape (exact sign for membership:
// every catalogue shape is an intersection of a ball and at most one half-space).
double shape_distance_lb(const Shape& s, const Vec3& x) {
  switch (s.kind) {
    case ShapeKind::none:
      return std::numeric_limits<double>::infinity();
    case ShapeKind::ball:
      return (x - s.center).norm() - s.radius;
    case ShapeKind::half_ball:
      return std::max((x - s.center).norm() - s.radius, (x - s.center).dot(s.axis));
    case ShapeKind::spherical_cap:
      return std::max((x - s.center).norm() - s.radius,
                      s.cap_offset - (x - s.center).dot(s.axis));
  }
  return std::numeric_limits<double>::infinity();
}

Vec3 any_orthogonal(const Vec3& a) {
  Vec3 t = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return a.cross(t).normalized();
}

constexpr double kGoldenAngle = 2.39996322972865332;  // pi * (3 - sqrt 5)

}  // namespace

bool Shape::contains(const Vec3& x) const {
  if (kind == ShapeKind::none) return false;
  return shape_distance_lb(*this, x) <= 0.0;
}

double Shape::volume() const {
  switch (kind) {
    case ShapeKind::none:
      return 0.0;
    case ShapeKind::ball:
      return 4.0 / 3.0 * kPi * radius * radius * radius;
    case ShapeKind::half_ball:
      return 2.0 / 3.0 * kPi * radius * radius * radius;
    case ShapeKind::spherical_cap: {
      const double h = radius - cap_offset;  // cap height
      return kPi * h * h * (3.0 * radius - h) / 3.0;
    }
  }
  return 0.0;
}

double Shape::bounding_radius_about(const Vec3& p) const {
  if (kind == ShapeKind::none) return 0.0;
  return (center - p).norm() + radius;
}

double Shape::flat_face_radius() const {
  if (kind == ShapeKind::half_ball) return radius;
  if (kind == ShapeKind::spherical_cap)
    return std::sqrt(std::max(0.0, radius * radius - cap_offset * cap_offset));
  return 0.0;
}

Vec3 Shape::flat_face_center() const {
  if (kind == ShapeKind::half_ball) return center;
  if (kind == ShapeKind::spherical_cap) return center + cap_offset * axis;
  return center;
}

std::string shape_kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::none: return "none";
    case ShapeKind::ball: return "ball";
    case ShapeKind::half_ball: return "half_ball";
    case ShapeKind::spherical_cap: return "spherical_cap";
  }
  return "unknown";
}

std::string face_label_name(FaceLabel l) {
  switch (l) {
    case FaceLabel::obstacle_exterior: return "obstacle_exterior";
    case FaceLabel::medium_exterior: return "medium_exterior";
    case FaceLabel::contact: return "contact";
  }
  return "unknown";
}

std::vector<Vec3> fibonacci_directions(int n) {
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double z = 1.0 - 2.0 * (j + 0.5) / n;
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = kGoldenAngle * j;
    dirs.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
  }
  return dirs;
}

Vec3 reflect_point(const PlanarContact& contact, const Vec3& x) {
  const Vec3& n = contact.plane_normal;
  return x - 2.0 * (x - contact.plane_point).dot(n) * n;
}

double SceneC::effective_enclosing_radius() const {
  if (enclosing_radius > 0.0) return enclosing_radius;
  double r = 0.0;
  if (has_obstacle()) r = obstacle.bounding_radius_about(Vec3::Zero());
  for (const auto& m : media)
    r = std::max(r, m.support.bounding_radius_about(Vec3::Zero()));
  return 1.1 * r + 0.1;
}

bool SceneC::point_in_scatterer(const Vec3& x, double margin) const {
  if (has_obstacle() && shape_distance_lb(obstacle, x) <= margin) return true;
  for (const auto& m : media)
    if (shape_distance_lb(m.support, x) <= margin) return true;
  return false;
}

double Face::area() const {
  switch (kind) {
    case FaceKind::full_sphere:
      return 4.0 * kPi * radius * radius;
    case FaceKind::cap_surface:
      return 2.0 * kPi * radius * radius * (1.0 - mu_min);
    case FaceKind::flat_disc:
      return kPi * radius * radius;
    case FaceKind::flat_annulus:
      return kPi * (radius * radius - inner_radius * inner_radius);
  }
  return 0.0;
}

std::vector<Face> scene_faces(const SceneC& scene) {
  std::vector<Face> faces;

  auto check_kind = [](ShapeKind k, bool obstacle_role) {
    if (obstacle_role) {
      if (k != ShapeKind::ball && k != ShapeKind::half_ball)
        throw ConfigError("unsupported obstacle shape: " + shape_kind_name(k));
    } else {
      if (k == ShapeKind::none)
        throw ConfigError("unsupported medium shape: none");
    }
  };

  if (scene.has_obstacle()) {
    check_kind(scene.obstacle.kind, true);
    const Shape& ob = scene.obstacle;
    if (ob.kind == ShapeKind::ball) {
      Face f;
      f.kind = FaceKind::full_sphere;
      f.label = FaceLabel::obstacle_exterior;
      f.center = ob.center;
      f.radius = ob.radius;
      f.owner = -1;
      faces.push_back(f);
    } else {
      // dome: hemisphere on the far side of the flat face
      Face dome;
      dome.kind = FaceKind::cap_surface;
      dome.label = FaceLabel::obstacle_exterior;
      dome.center = ob.center;
      dome.radius = ob.radius;
      dome.axis = -ob.axis;
      dome.mu_min = 0.0;
      dome.owner = -1;
      faces.push_back(dome);

      // flat face, possibly split by one concentric contact disc
      int n_contacts = 0;
      double rc = 0.0;
      for (const auto& m : scene.media) {
        if (m.contact) {
          ++n_contacts;
          rc = m.contact->disc_radius;
        }
      }
      if (n_contacts > 1)
        throw ConfigError(
            "face decomposition supports at most one contact disc per flat face");
      if (n_contacts == 1) {
        Face gamma;
        gamma.kind = FaceKind::flat_disc;
        gamma.label = FaceLabel::contact;
        gamma.center = ob.center;
        gamma.radius = rc;
        gamma.axis = ob.axis;
        gamma.owner = -1;
        faces.push_back(gamma);
        if (rc < ob.radius - 1e-12) {
          Face ann;
          ann.kind = FaceKind::flat_annulus;
          ann.label = FaceLabel::obstacle_exterior;
          ann.center = ob.center;
          ann.radius = ob.radius;
          ann.inner_radius = rc;
          ann.axis = ob.axis;
          ann.owner = -1;
          faces.push_back(ann);
        }
      } else {
        Face disc;
        disc.kind = FaceKind::flat_disc;
        disc.label = FaceLabel::obstacle_exterior;
        disc.center = ob.center;
        disc.radius = ob.radius;
        disc.axis = ob.axis;
        disc.owner = -1;
        faces.push_back(disc);
      }
    }
  } else {
    for (const auto& m : scene.media)
      if (m.contact)
        throw ConfigError("contacted medium component requires an obstacle");
  }

  for (size_t i = 0; i < scene.media.size(); ++i) {
    const Shape& sh = scene.media[i].support;
    check_kind(sh.kind, false);
    if (sh.kind == ShapeKind::ball) {
      Face f;
      f.kind = FaceKind::full_sphere;
      f.label = FaceLabel::medium_exterior;
      f.center = sh.center;
      f.radius = sh.radius;
      f.owner = static_cast<int>(i);
      faces.push_back(f);
      continue;
    }
    Face surf;
    surf.kind = FaceKind::cap_surface;
    surf.label = FaceLabel::medium_exterior;
    surf.center = sh.center;
    surf.radius = sh.radius;
    surf.owner = static_cast<int>(i);
    if (sh.kind == ShapeKind::half_ball) {
      surf.axis = -sh.axis;
      surf.mu_min = 0.0;
    } else {
      surf.axis = sh.axis;
      surf.mu_min = sh.cap_offset / sh.radius;
    }
    faces.push_back(surf);

    if (!scene.media[i].contact) {
      // exposed flat face of a free cap / half-ball
      Face disc;
      disc.kind = FaceKind::flat_disc;
      disc.label = FaceLabel::medium_exterior;
      disc.center = sh.flat_face_center();
      disc.radius = sh.flat_face_radius();
      disc.axis = (sh.kind == ShapeKind::half_ball) ? Vec3(sh.axis) : Vec3(-sh.axis);
      disc.owner = static_cast<int>(i);
      faces.push_back(disc);
    }
    // contacted flat faces coincide with the contact disc emitted above
  }
  return faces;
}

std::vector<BoundaryPoint> boundary_partition(const SceneC& scene, int n_points) {
  const auto faces = scene_faces(scene);
  if (faces.empty()) return {};
  double total = 0.0;
  for (const auto& f : faces) total += f.area();
  if (n_points < 10 * static_cast<int>(faces.size())) {
    throw ConfigError("boundary_partition: n_points too small, need at least 10 per face (" +
                      std::to_string(10 * faces.size()) + ")");
  }

  std::vector<BoundaryPoint> cloud;
  cloud.reserve(n_points);
  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const int n = std::max(10, static_cast<int>(std::lround(n_points * f.area() / total)));
    const Vec3 t1 = any_orthogonal(f.axis);
    const Vec3 t2 = f.axis.cross(t1);
    for (int j = 0; j < n; ++j) {
      const double u = (j + 0.5) / n;
      const double phi = kGoldenAngle * j;
      BoundaryPoint bp;
      bp.face_id = static_cast<int>(fi);
      bp.label = f.label;
      if (f.kind == FaceKind::full_sphere || f.kind == FaceKind::cap_surface) {
        const double mu_lo = (f.kind == FaceKind::full_sphere) ? -1.0 : f.mu_min;
        const double mu = mu_lo + (1.0 - mu_lo) * u;
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        const Vec3 dir = mu * f.axis + s * (std::cos(phi) * t1 + std::sin(phi) * t2);
        bp.point = f.center + f.radius * dir;
        bp.normal = dir;
      } else {
        const double r0 = (f.kind == FaceKind::flat_annulus) ? f.inner_radius : 0.0;
        const double r = std::sqrt(r0 * r0 + (f.radius * f.radius - r0 * r0) * u);
        bp.point = f.center + r * (std::cos(phi) * t1 + std::sin(phi) * t2);
        bp.normal = f.axis;
      }
      cloud.push_back(bp);
    }
  }
  return cloud;
}

namespace {

Vec3 sample_in_shape(const Shape& s, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int it = 0; it < 100000; ++it) {
    const Vec3 x = s.center + s.radius * Vec3(u(rng), u(rng), u(rng));
    if (s.contains(x)) return x;
  }
  throw NumericsError("sampling", "rejection sampling failed for shape " +
                                      shape_kind_name(s.kind));
}

// Deterministic surface samples used by the distance certificates.
std::vector<Vec3> shape_surface_samples(const SceneC& scene_like, int per_face) {
  std::vector<Vec3> pts;
  const auto faces = scene_faces(scene_like);
  for (const auto& f : faces) {
    const Vec3 t1 = any_orthogonal(f.axis);
    const Vec3 t2 = f.axis.cross(t1);
    for (int j = 0; j < per_face; ++j) {
      const double u = (j + 0.5) / per_face;
      const double phi = kGoldenAngle * j;
      if (f.kind == FaceKind::full_sphere || f.kind == FaceKind::cap_surface) {
        const double mu_lo = (f.kind == FaceKind::full_sphere) ? -1.0 : f.mu_min;
        const double mu = mu_lo + (1.0 - mu_lo) * u;
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        pts.push_back(f.center +
                      f.radius * (mu * f.axis + s * (std::cos(phi) * t1 + std::sin(phi) * t2)));
      } else {
        const double r0 = (f.kind == FaceKind::flat_annulus) ? f.inner_radius : 0.0;
        const double r = std::sqrt(r0 * r0 + (f.radius * f.radius - r0 * r0) * u);
        pts.push_back(f.center + r * (std::cos(phi) * t1 + std::sin(phi) * t2));
      }
    }
  }
  return pts;
}

std::vector<Vec3> single_shape_surface(const Shape& sh, int per_face) {
  SceneC tmp;
  tmp.media.push_back(MediumComponent{});
  tmp.media[0].support = sh;
  return shape_surface_samples(tmp, per_face);
}

}  // namespace

ValidationReport validate_class_c(const SceneC& scene, int samples_per_component,
                                  std::uint64_t seed) {
  if (samples_per_component < 100) {
    throw PreconditionError("validate_class_c: samples_per_component must be >= 100");
  }
  // shape catalogue check happens first so unsupported kinds fail loudly
  (void)scene_faces(scene);

  ValidationReport rep;
  rep.seed = seed;
  for (auto& c : rep.conditions) c.pass = true;
  rep.conditions[0].name = "i_bounded_connected_complement";
  rep.conditions[1].name = "ii_interiors_disjoint";
  rep.conditions[2].name = "iii_contrast_jump";
  rep.conditions[3].name = "iv_planar_contacts";
  rep.conditions[4].name = "v_exterior_regularity";
  rep.conditions[5].name = "vi_reflected_unions_disjoint";

  const double rho0 = scene.effective_enclosing_radius();

  // interior sample clouds, one per component, deterministic per index
  std::vector<std::vector<Vec3>> inside(scene.media.size());
  for (size_t i = 0; i < scene.media.size(); ++i) {
    Rng rng(seed + 0x9e3779b97f4a7c15ull * (i + 1));
    inside[i].reserve(samples_per_component);
    for (int j = 0; j < samples_per_component; ++j)
      inside[i].push_back(sample_in_shape(scene.media[i].support, rng));
  }

  // (i) boundedness within the enclosing ball + connected complement
  {
    auto& c = rep.conditions[0];
    if (scene.has_obstacle() &&
        scene.obstacle.bounding_radius_about(Vec3::Zero()) > rho0 + 1e-9) {
      c.pass = false;
      c.detail = "obstacle exceeds the enclosing radius";
    }
    for (const auto& m : scene.media) {
      if (m.support.bounding_radius_about(Vec3::Zero()) > rho0 + 1e-9) {
        c.pass = false;
        c.detail = "medium component exceeds the enclosing radius";
      }
    }
    // flood fill on a voxel grid over [-rho0, rho0]^3
    const int nv = 64;
    const double hv = 2.0 * rho0 / nv;
    std::vector<uint8_t> state(nv * nv * nv, 0);  // 0 free, 1 blocked, 2 visited
    auto idx = [&](int a, int b, int cc) { return (a * nv + b) * nv + cc; };
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        for (int cc = 0; cc < nv; ++cc) {
          const Vec3 x(-rho0 + (a + 0.5) * hv, -rho0 + (b + 0.5) * hv,
                       -rho0 + (cc + 0.5) * hv);
          if (scene.point_in_scatterer(x, 0.0)) state[idx(a, b, cc)] = 1;
        }
    std::deque<std::array<int, 3>> queue;
    if (state[idx(0, 0, 0)] == 0) {
      state[idx(0, 0, 0)] = 2;
      queue.push_back({0, 0, 0});
    }
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      static const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& dd : d) {
        const int a = v[0] + dd[0], b = v[1] + dd[1], cc = v[2] + dd[2];
        if (a < 0 || b < 0 || cc < 0 || a >= nv || b >= nv || cc >= nv) continue;
        if (state[idx(a, b, cc)] == 0) {
          state[idx(a, b, cc)] = 2;
          queue.push_back({a, b, cc});
        }
      }
    }
    for (int a = 0; a < nv && c.pass; ++a)
      for (int b = 0; b < nv && c.pass; ++b)
        for (int cc = 0; cc < nv && c.pass; ++cc)
          if (state[idx(a, b, cc)] == 0) {
            c.pass = false;
            c.detail = "complement is not connected at voxel resolution";
            c.witnesses.push_back(Vec3(-rho0 + (a + 0.5) * hv, -rho0 + (b + 0.5) * hv,
                                       -rho0 + (cc + 0.5) * hv));
          }
  }

  // (ii) interiors pairwise disjoint (obstacle vs media, media vs media)
  {
    auto& c = rep.conditions[1];
    for (size_t i = 0; i < scene.media.size(); ++i) {
      for (const Vec3& x : inside[i]) {
        if (scene.has_obstacle() && shape_distance_lb(scene.obstacle, x) < -1e-9) {
          c.pass = false;
          c.witnesses.push_back(x);
          c.detail = "medium sample inside the obstacle";
          break;
        }
      }
      for (size_t j = 0; j < scene.media.size() && c.pass; ++j) {
        if (j == i) continue;
        for (const Vec3& x : inside[i]) {
          if (shape_distance_lb(scene.media[j].support, x) < -1e-9) {
            c.pass = false;
            c.witnesses.push_back(x);
            c.detail = "two medium components overlap";
            break;
          }
        }
      }
      if (!c.pass) break;
    }
  }

  // (iii) contrast jump bound, sign of Im q, Lipschitz bound
  {
    auto& c = rep.conditions[2];
    for (size_t i = 0; i < scene.media.size() && c.pass; ++i) {
      const auto& m = scene.media[i];
      for (size_t j = 0; j < inside[i].size(); ++j) {
        const cplx v = m.contrast_at(inside[i][j]);
        if (std::abs(v) < m.eps0 * (1.0 - 1e-9)) {
          c.pass = false;
          c.witnesses.push_back(inside[i][j]);
          c.detail = "contrast magnitude below eps0";
          break;
        }
        if (v.imag() > 1e-12) {  // Im q = -Im(1-q) must be >= 0
          c.pass = false;
          c.witnesses.push_back(inside[i][j]);
          c.detail = "Im q negative (gain medium)";
          break;
        }
        if (j > 0) {
          const Vec3& y = inside[i][j - 1];
          const double dx = (inside[i][j] - y).norm();
          if (dx > 1e-12 &&
              std::abs(v - m.contrast_at(y)) > (m.lipschitz + 1e-9) * dx) {
            c.pass = false;
            c.witnesses.push_back(inside[i][j]);
            c.detail = "contrast difference quotient exceeds the stored Lipschitz bound";
            break;
          }
        }
      }
    }
  }

  // (iv) contacts are planar discs on the obstacle flat face; detached
  // components keep positive distance from the obstacle and from each other
  {
    auto& c = rep.conditions[3];
    for (size_t i = 0; i < scene.media.size() && c.pass; ++i) {
      const auto& m = scene.media[i];
      if (m.contact) {
        const auto& ct = *m.contact;
        if (std::abs(ct.plane_normal.norm() - 1.0) > 1e-12) {
          c.pass = false;
          c.detail = "contact plane normal is not unit length";
          break;
        }
        if (!scene.has_obstacle() || scene.obstacle.kind != ShapeKind::half_ball) {
          c.pass = false;
          c.detail = "contacted component requires a half-ball obstacle flat face";
          break;
        }
        const Shape& ob = scene.obstacle;
        if (std::abs((ct.plane_point - ob.center).dot(ct.plane_normal)) > 1e-9 ||
            std::abs(std::abs(ct.plane_normal.dot(ob.axis)) - 1.0) > 1e-9) {
          c.pass = false;
          c.detail = "contact plane does not coincide with the obstacle flat face";
          break;
        }
        if (std::abs((ct.disc_center - ct.plane_point).dot(ct.plane_normal)) > 1e-9) {
          c.pass = false;
          c.detail = "contact disc center off the contact plane";
          break;
        }
        if ((ct.disc_center - ob.center).norm() > 1e-9 ||
            ct.disc_radius > ob.radius + 1e-9) {
          c.pass = false;
          c.detail = "contact disc must be concentric with and inside the obstacle flat face";
          break;
        }
        if (m.support.kind != ShapeKind::spherical_cap &&
            m.support.kind != ShapeKind::half_ball) {
          c.pass = false;
          c.detail = "contacted component must have a flat face";
          break;
        }
        if ((m.support.flat_face_center() - ct.disc_center).norm() > 1e-9 ||
            std::abs(m.support.flat_face_radius() - ct.disc_radius) > 1e-9) {
          c.pass = false;
          c.detail = "component flat face does not match the contact disc";
          break;
        }
      } else {
        // detached: positive distance from the obstacle and every other component
        auto min_clearance = [&](const Shape& other) {
          const double bound = (m.support.center - other.center).norm() -
                               m.support.radius - other.radius;
          if (bound > 0.0) return bound;
          double lo = std::numeric_limits<double>::infinity();
          for (const Vec3& p : single_shape_surface(m.support, 64))
            lo = std::min(lo, shape_distance_lb(other, p));
          return lo;
        };
        if (scene.has_obstacle() && min_clearance(scene.obstacle) <= 1e-9) {
          c.pass = false;
          c.witnesses.push_back(m.support.center);
          c.detail = "detached component touches the obstacle";
          break;
        }
        for (size_t j = 0; j < scene.media.size(); ++j) {
          if (j == i) continue;
          if (min_clearance(scene.media[j].support) <= 1e-9) {
            c.pass = false;
            c.witnesses.push_back(m.support.center);
            c.detail = "detached component touches another component";
            break;
          }
        }
      }
    }
  }

  // (v) exterior smoothness at catalogue level: positive radii, non-degenerate
  // caps, rim dihedral bounded away from a cusp
  {
    auto& c = rep.conditions[4];
    auto check_shape = [&](const Shape& s, const char* role) {
      if (s.kind == ShapeKind::none) return;
      if (s.radius <= 0.0) {
        c.pass = false;
        c.detail = std::string(role) + ": nonpositive radius";
        return;
      }
      if (s.kind == ShapeKind::spherical_cap) {
        if (s.cap_offset <= -s.radius || s.cap_offset >= 0.95 * s.radius) {
          c.pass = false;
          c.detail = std::string(role) + ": degenerate cap (sliver rim)";
        }
      }
    };
    check_shape(scene.obstacle, "obstacle");
    for (const auto& m : scene.media) check_shape(m.support, "medium");
  }

  // (vi) reflected unions pairwise disjoint and disjoint from detached components
  {
    auto& c = rep.conditions[5];
    auto in_union = [&](size_t l, const Vec3& x) {
      const auto& m = scene.media[l];
      if (m.support.contains(x)) return true;
      return m.support.contains(reflect_point(*m.contact, x));
    };
    for (size_t l = 0; l < scene.media.size() && c.pass; ++l) {
      if (!scene.media[l].contact) continue;
      std::vector<Vec3> cloud = inside[l];
      for (const Vec3& x : inside[l])
        cloud.push_back(reflect_point(*scene.media[l].contact, x));
      for (size_t lp = 0; lp < scene.media.size() && c.pass; ++lp) {
        if (lp == l) continue;
        const bool contacted = scene.media[lp].contact.has_value();
        for (const Vec3& x : cloud) {
          const bool hit = contacted ? in_union(lp, x) : scene.media[lp].support.contains(x);
          if (hit) {
            c.pass = false;
            c.witnesses.push_back(x);
            c.detail = contacted ? "reflected unions of two contacted components intersect"
                                 : "reflected union intersects a detached component";
            break;
          }
        }
      }
    }
  }

  return rep;
}

}  // namespace pscat
