#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pscat/types.hpp"

namespace pscat {

// Supported shape catalogue. A half_ball occupies {|x-c| <= R, (x-c).axis <= 0}
// with `axis` the outward normal of its flat face. A spherical_cap occupies
// {|x-c| <= R, (x-c).axis >= cap_offset} with -R < cap_offset < R; its flat
// face is the disc at distance cap_offset from the sphere center.
enum class ShapeKind { none, ball, half_ball, spherical_cap };

struct Shape {
  ShapeKind kind = ShapeKind::none;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  Vec3 axis = Vec3::UnitZ();
  double cap_offset = 0.0;  // spherical_cap only

  bool contains(const Vec3& x) const;
  double volume() const;
  double bounding_radius_about(const Vec3& p) const;
  // radius of the flat face (half_ball and spherical_cap)
  double flat_face_radius() const;
  Vec3 flat_face_center() const;
};

std::string shape_kind_name(ShapeKind k);

// Planar contact patch between the obstacle and one medium component.
// plane_normal is oriented from the obstacle into the medium.
struct PlanarContact {
  Vec3 plane_point = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();
  Vec3 disc_center = Vec3::Zero();
  double disc_radius = 0.0;
};

Vec3 reflect_point(const PlanarContact& contact, const Vec3& x);

struct MediumComponent {
  Shape support;
  cplx contrast_value = 0.0;  // constant 1 - q, used when contrast_fn is empty
  std::function<cplx(const Vec3&)> contrast_fn;
  double eps0 = 1e-3;       // lower bound for |1 - q| on the support
  double lipschitz = 0.0;   // Lipschitz constant of the contrast sampler
  std::optional<PlanarContact> contact;

  cplx contrast_at(const Vec3& x) const {
    return contrast_fn ? contrast_fn(x) : contrast_value;
  }
};

struct SceneC {
  Shape obstacle;  // kind == none when there is no obstacle
  std::vector<MediumComponent> media;
  double wave_number = 1.0;
  double enclosing_radius = 0.0;  // 0 selects an automatic bound

  bool has_obstacle() const { return obstacle.kind != ShapeKind::none; }
  double effective_enclosing_radius() const;
  // distance-positive test against every shape closure in the scene
  bool point_in_scatterer(const Vec3& x, double margin = 0.0) const;
};

struct ConditionResult {
  std::string name;
  bool pass = false;
  std::vector<Vec3> witnesses;
  std::string detail;
};

struct ValidationReport {
  std::array<ConditionResult, 6> conditions;
  std::uint64_t seed = 0;
  bool all_pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
};

// Checks the six class-C conditions by deterministic sampled tests
// (10^4-scale point sampling, 64^3 voxel flood fill for connectedness).
ValidationReport validate_class_c(const SceneC& scene, int samples_per_component,
                                  std::uint64_t seed = 20240817);

enum class FaceLabel { obstacle_exterior, medium_exterior, contact };

std::string face_label_name(FaceLabel l);

struct BoundaryPoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // into the exterior; contact points carry the plane normal
  FaceLabel label = FaceLabel::obstacle_exterior;
  int face_id = 0;
};

// Deterministic labeled point cloud covering every boundary face
// (n_points split by face area, at least 10 per face).
std::vector<BoundaryPoint> boundary_partition(const SceneC& scene, int n_points);

// Internal face decomposition shared with the quadrature grids.
enum class FaceKind { full_sphere, cap_surface, flat_disc, flat_annulus };

struct Face {
  FaceKind kind = FaceKind::full_sphere;
  FaceLabel label = FaceLabel::obstacle_exterior;
  Vec3 center = Vec3::Zero();  // sphere center, or disc center for flat faces
  double radius = 0.0;         // sphere radius, or outer disc radius
  double inner_radius = 0.0;   // flat_annulus only
  Vec3 axis = Vec3::UnitZ();   // cap axis, or flat-face outward normal
  double mu_min = -1.0;        // cap_surface: cos-angle band [mu_min, 1] about axis
  int owner = -1;              // -1 obstacle, otherwise media index

  double area() const;
};

std::vector<Face> scene_faces(const SceneC& scene);

// Deterministic near-uniform unit directions (Fibonacci lattice).
std::vector<Vec3> fibonacci_directions(int n);

}  // namespace pscat
