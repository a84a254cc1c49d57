#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pscat/forward.hpp"
#include "pscat/geometry.hpp"
#include "pscat/types.hpp"

namespace pscat {

// JSON-facing scenario description. Every field has a default so a minimal
// config only names the scenario; serialize_config materializes defaults and
// round-trips exactly through parse_config.
struct ShapeConfig {
  std::string kind = "ball";  // ball | half_ball | spherical_cap
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 axis = Vec3::UnitZ();
  double cap_offset = 0.0;
};

struct ContactConfig {
  Vec3 plane_point = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();
  Vec3 disc_center = Vec3::Zero();
  double disc_radius = 1.0;
};

struct MediumConfig {
  ShapeConfig shape;
  double contrast = 0.05;
  double contrast_b = 0.0;  // second-scene contrast for fourier_identity; 0 = contrast + 0.02
  std::optional<ContactConfig> contact;
};

struct IncidentConfig {
  std::string type = "plane_wave";  // plane_wave | monopole | dipole
  Vec3 direction = Vec3::UnitZ();
  Vec3 location = Vec3(0.0, 0.0, 3.0);
  Vec3 axis = Vec3::UnitZ();
};

struct SolverGridConfig {
  int boundary_nodes = 1000;
  int volume_cells = 4000;
  std::string volume_layout = "radial";  // radial | cartesian
  double cell_size = 0.15;
  int dense_limit = 3000;
  int max_iterations = 400;
  double tolerance = 1e-8;
};

struct ProbeCliConfig {
  Vec3 x0 = Vec3(0.0, 0.0, 1.0);
  Vec3 nu = Vec3::UnitZ();
  double h = 0.5;
  int n_max = 8;
  std::string source_kind = "monopole";  // monopole | dipole; scan probes both
  std::string access_mode = "direct";    // direct | farfield
  std::string sequence = "harmonic";     // harmonic | geometric
  int herglotz_dirs = 196;
  double herglotz_lambda = 1e-8;
};

struct ScanCliConfig {
  int n_candidates = 32;
};

struct HerglotzCliConfig {
  Vec3 target_location = Vec3(0.0, 0.0, 3.0);
  std::string target_kind = "monopole";
  int n_directions = 196;
  double lambda = -1.0;  // negative = automatic scaling
  int region_points = 200;
};

struct CgoCliConfig {
  Vec3 xi = Vec3::UnitX();
  double tau = 10.0;
  std::vector<double> tau_list = {5.0, 10.0, 20.0, 40.0};
  int cube_n = 64;
  int component = 0;
  Vec3 eta = Vec3::UnitX();
  int n_samples = 1000;
};

struct MieCliConfig {
  std::string kind = "soft_sphere";  // soft_sphere | homogeneous_ball
  double radius = 1.0;
  double contrast = 0.05;
  int n_terms = 0;  // 0 = automatic
};

struct Config {
  int schema_version = 1;
  std::string scenario;
  double wave_number = 1.0;
  double enclosing_radius = 3.0;
  std::optional<ShapeConfig> obstacle;
  std::vector<MediumConfig> media;
  IncidentConfig incident;
  SolverGridConfig solver;
  int observation_directions = 128;
  ProbeCliConfig probe;
  ScanCliConfig scan;
  HerglotzCliConfig herglotz;
  CgoCliConfig cgo;
  MieCliConfig mie;
  std::map<std::string, double> thresholds;  // scenario-specific overrides
};

struct ConfigIssue {
  std::string path;
  std::string message;
};

struct ParseResult {
  bool ok = false;
  Config config;
  std::vector<ConfigIssue> issues;
};

// Collects every problem in one pass: type mismatches, range violations,
// unknown keys (named individually), unknown scenario (with the full list of
// choices). ok is true only when issues is empty.
ParseResult parse_config(const std::string& json_text);
std::string serialize_config(const Config& config);

const std::vector<std::string>& scenario_names();

SceneC scene_from_config(const Config& config);
SceneC second_scene_from_config(const Config& config);  // contrast_b variant
IncidentField incident_from_config(const Config& config);

struct RunRecord {
  int schema_version = 1;
  std::string scenario;
  nlohmann::json config_snapshot;
  unsigned long long seed = 0;
  int threads = 1;
  bool deterministic = true;
  std::vector<std::pair<std::string, double>> timings_seconds;
  std::vector<std::string> diagnostics;
  std::vector<std::string> files_written;
  bool passed = false;
  std::string failure_reason;
};

struct ScenarioResult {
  int exit_code = 0;  // 0 pass, 1 threshold failure, 2 bad config, 3 runtime error
  std::string failure_reason;
  nlohmann::json summary;
};

// Runs one scenario, writing CSV payloads, summary.json and run_record.json
// into out_dir. Timings appear only inside the run record so payload files
// are byte-stable for a fixed config and seed.
ScenarioResult run_scenario(const Config& config, const std::string& out_dir,
                            unsigned long long seed, int threads, bool deterministic);

}  // namespace pscat
