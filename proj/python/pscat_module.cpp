#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <string>
#include <vector>

#include "pscat/cli_io.hpp"
#include "pscat/forward.hpp"
#include "pscat/grids.hpp"
#include "pscat/specialfn.hpp"

namespace py = pybind11;

namespace {

using A3 = std::array<double, 3>;

pscat::Vec3 to_vec(const A3& a) { return pscat::Vec3(a[0], a[1], a[2]); }
A3 from_vec(const pscat::Vec3& v) { return {v[0], v[1], v[2]}; }

py::dict parse_config_py(const std::string& text) {
  pscat::ParseResult result = pscat::parse_config(text);
  py::dict out;
  out["ok"] = result.ok;
  py::list issues;
  for (const auto& iss : result.issues) {
    py::dict d;
    d["path"] = iss.path;
    d["message"] = iss.message;
    issues.append(d);
  }
  out["issues"] = issues;
  if (result.ok) out["canonical"] = pscat::serialize_config(result.config);
  return out;
}

py::dict run_scenario_py(const std::string& config_text, const std::string& out_dir,
                         unsigned long long seed, int threads, bool deterministic) {
  pscat::ParseResult parsed = pscat::parse_config(config_text);
  if (!parsed.ok) {
    std::string msg = "config invalid:";
    for (const auto& iss : parsed.issues) msg += " [" + iss.path + "] " + iss.message + ";";
    throw py::value_error(msg);
  }
  pscat::ScenarioResult res =
      pscat::run_scenario(parsed.config, out_dir, seed, threads, deterministic);
  py::dict out;
  out["exit_code"] = res.exit_code;
  out["failure_reason"] = res.failure_reason;
  out["summary_json"] = res.summary.dump();
  return out;
}

py::dict far_field_py(const std::string& config_text, int n_dirs) {
  pscat::ParseResult parsed = pscat::parse_config(config_text);
  if (!parsed.ok) throw py::value_error("config invalid");
  const pscat::Config& cfg = parsed.config;
  pscat::SceneC scene = pscat::scene_from_config(cfg);
  pscat::BoundaryGrid bg = pscat::build_boundary_grid(scene, cfg.solver.boundary_nodes);
  pscat::VolumeGrid vg =
      cfg.solver.volume_layout == "cartesian"
          ? pscat::build_volume_grid_cartesian(scene, cfg.solver.cell_size)
          : pscat::build_volume_grid_radial(scene, cfg.solver.volume_cells);
  pscat::SolverOptions opt;
  opt.dense_limit = cfg.solver.dense_limit;
  opt.max_iterations = cfg.solver.max_iterations;
  opt.tolerance = cfg.solver.tolerance;
  pscat::DiscreteScene ds(scene, bg, vg, opt);
  pscat::Solution sol = ds.solve(pscat::incident_from_config(cfg));
  std::vector<pscat::Vec3> dirs = pscat::fibonacci_directions(n_dirs);
  std::vector<pscat::cplx> amps = ds.far_field(sol, dirs);
  py::list dir_list, amp_list;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    dir_list.append(from_vec(dirs[i]));
    amp_list.append(amps[i]);
  }
  py::dict out;
  out["directions"] = dir_list;
  out["amplitudes"] = amp_list;
  out["iterations"] = sol.iterations;
  out["boundary_nodes"] = bg.size();
  out["volume_cells"] = vg.size();
  return out;
}

py::dict mie_py(const std::string& kind, double radius, pscat::cplx contrast, double kappa,
                const A3& theta, const std::vector<A3>& dirs, int n_terms) {
  pscat::MieKind mk = kind == "soft_sphere" ? pscat::MieKind::soft_sphere
                                            : pscat::MieKind::homogeneous_ball;
  std::vector<pscat::Vec3> d;
  d.reserve(dirs.size());
  for (const auto& a : dirs) d.push_back(to_vec(a).normalized());
  pscat::MieFarField mie =
      pscat::mie_oracle(mk, radius, contrast, kappa, to_vec(theta).normalized(), d, n_terms);
  py::dict out;
  out["values"] = mie.values;
  out["warnings"] = mie.warnings;
  return out;
}

}  // namespace

PYBIND11_MODULE(pypscat, m) {
  m.doc() = "scattering from obstacles with planar-contact inhomogeneities";

  m.def("scenario_names", [] { return pscat::scenario_names(); },
        "names accepted by run_scenario configs");

  m.def("parse_config", &parse_config_py, py::arg("json_text"),
        "validate a JSON config; returns ok, issues and the canonical form");

  m.def("run_scenario", &run_scenario_py, py::arg("config_json"), py::arg("out_dir"),
        py::arg("seed") = 20240817ull, py::arg("threads") = 1,
        py::arg("deterministic") = true,
        "run one scenario, writing CSV and JSON payloads into out_dir");

  m.def("far_field", &far_field_py, py::arg("config_json"), py::arg("n_directions") = 128,
        "solve the configured scene and return the far-field amplitudes on a "
        "quasi-uniform direction set");

  m.def("mie_far_field", &mie_py, py::arg("kind"), py::arg("radius"), py::arg("contrast"),
        py::arg("wave_number"), py::arg("incident_direction"),
        py::arg("observation_directions"), py::arg("n_terms") = 0,
        "separable reference amplitudes for a sphere (sound-soft or homogeneous)");

  m.def(
      "fundamental_solution",
      [](double kappa, const A3& x, const A3& y) {
        return pscat::fundamental_solution(to_vec(x), to_vec(y), kappa);
      },
      py::arg("wave_number"), py::arg("x"), py::arg("y"),
      "outgoing point-source kernel exp(i k r) / (4 pi r)");
}
