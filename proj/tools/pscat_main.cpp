#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pscat/cli_io.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("PSCAT_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar-contact scattering toolbox"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  unsigned long long seed = 20240817ull;
  int threads = default_threads();
  bool deterministic = true;

  app.add_option("--config", config_path, "path to a JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "output directory (created if missing)");
  app.add_option("--seed", seed, "seed for every randomized stage");
  app.add_option("--threads", threads,
                 "worker threads when not deterministic (default from PSCAT_THREADS)");
  app.add_flag("--deterministic,!--no-deterministic", deterministic,
               "single-threaded bit-stable mode (default on)");

  for (const std::string& name : pscat::scenario_names())
    app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string scenario = app.get_subcommands().front()->get_name();

  std::ifstream in(config_path);
  std::stringstream buf;
  buf << in.rdbuf();

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(buf.str());
    if (parsed.is_object()) parsed["scenario"] = scenario;
  } catch (const nlohmann::json::parse_error&) {
    // leave the raw text; parse_config reports the position
  }
  pscat::ParseResult result =
      parsed.is_null() ? pscat::parse_config(buf.str()) : pscat::parse_config(parsed.dump());

  if (!result.ok) {
    nlohmann::json report;
    report["ok"] = false;
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& iss : result.issues)
      issues.push_back({{"path", iss.path}, {"message", iss.message}});
    report["issues"] = issues;
    std::cerr << report.dump() << "\n";
    return 2;
  }

  pscat::ScenarioResult res =
      pscat::run_scenario(result.config, out_dir, seed, threads, deterministic);
  std::cout << res.summary.dump() << "\n";
  return res.exit_code;
}
