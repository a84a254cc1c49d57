#pragma once

#include <string>
#include <vector>

#include "pscat/forward.hpp"
#include "pscat/herglotz.hpp"
#include "pscat/types.hpp"

namespace pscat {

enum class AccessMode { direct, farfield };
enum class SequenceKind { harmonic, geometric };

struct ProbeSpec {
  Vec3 x0 = Vec3::Zero();
  Vec3 nu = Vec3::UnitZ();  // outward at x0; also the dipole axis
  double h = 0.5;
  int n_max = 8;
  SourceKind source_kind = SourceKind::monopole;
  AccessMode access_mode = AccessMode::direct;
  SequenceKind sequence = SequenceKind::harmonic;
  int herglotz_dirs = 196;     // farfield mode only
  double herglotz_lambda = 1e-8;
};

struct IndicatorCurve {
  Vec3 x0 = Vec3::Zero();
  Vec3 nu = Vec3::UnitZ();
  double h = 0.0;
  SourceKind source_kind = SourceKind::monopole;
  AccessMode access_mode = AccessMode::direct;
  std::string evaluation_policy = "evaluate_at_xn";

  std::vector<double> distances;   // strictly decreasing
  std::vector<cplx> values;        // scattered response at the probe point
  std::vector<double> magnitudes;
  std::vector<std::string> annotations;  // per-step failures, empty when clean

  double slope = 0.0;  // log-log fit over the final half of the curve
  double slope_uncertainty = 0.0;
};

enum class PointClass { obstacle_boundary, medium_boundary, not_boundary, indeterminate };

struct ClassifyThresholds {
  double psi_flat = -0.2;      // above: nothing blows up, not a boundary
  double phi_obstacle = -0.7;  // below: the monopole response blows up too
  double phi_flat = -0.2;      // above: monopole stays bounded, medium side
};

const char* point_class_name(PointClass c);

// Plane-wave solutions reused by every farfield-mode probe of one scene.
struct PlaneWaveBank {
  std::vector<Vec3> directions;
  std::vector<Solution> solutions;
};

PlaneWaveBank solve_plane_wave_bank(const DiscreteScene& scene, int n_dirs);

// Volume potential of the incident source evaluated at x by a polar rule
// centered on x: ray directions times per-ray radial panels refined toward
// the ray entry point. The radial Jacobian removes the kernel singularity,
// so this stays accurate where the cell quadrature degrades.
cplx volume_potential_of_source(const SceneC& scene, const IncidentField& inc,
                                const Vec3& x, int n_dirs = 400);

IndicatorCurve probe_curve(const DiscreteScene& scene, const ProbeSpec& spec,
                           const PlaneWaveBank* bank = nullptr);

PointClass classify_point(const IndicatorCurve& curve_phi, const IndicatorCurve& curve_psi,
                          const ClassifyThresholds& thresholds = {});

struct ScanResult {
  std::vector<BoundaryPoint> candidates;
  std::vector<PointClass> classes;
  std::vector<double> phi_slopes;
  std::vector<double> psi_slopes;
  std::vector<std::string> annotations;
  int n_scored = 0;   // contact points are excluded from scoring
  int n_correct = 0;
  double accuracy = 0.0;
};

ScanResult scan_boundary(const DiscreteScene& scene,
                         const std::vector<BoundaryPoint>& candidates,
                         const ProbeSpec& spec_template,
                         const ClassifyThresholds& thresholds = {});

}  // namespace pscat
