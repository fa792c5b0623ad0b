#include "kp/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file_or_throw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw kp::ConfigError("config error: cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

nlohmann::json load_config_json(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) j = kp::parse_json_text(read_file_or_throw(config_path));
  for (const auto& ov : overrides) kp::apply_override(j, ov);
  return j;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Fourier mode simulator and conservation checker for the degenerate "
      "quasilinear wave flow w_tt = -|xi|^2 w / (a s + b)^2"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long seed = 0;
  int workers = 0;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd, bool with_seed) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--set", overrides,
                    "dotted-path override key=value (repeatable)");
    if (with_seed) cmd->add_option("--seed", seed, "seed override");
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "run one experiment; write timeseries.csv, report.txt, "
                  "manifest.json");
  add_common(sim, true);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run a parameter grid; write sweep.csv ordered by grid point");
  add_common(sweep, true);
  sweep->add_option("--workers", workers, "worker thread count override");

  CLI::App* quad = app.add_subcommand(
      "verify-quadform",
      "check the coefficient identities and the d/dt match on analytic "
      "profiles; write quadform.csv");
  add_common(quad, false);

  CLI::App* report = app.add_subcommand(
      "report", "re-derive verdicts from an existing timeseries.csv + "
                "manifest.json");
  report->add_option("--out", out_dir, "directory holding the run artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      kp::ExperimentConfig cfg =
          kp::experiment_config_from_json(load_config_json(config_path, overrides));
      if (sim->count("--seed")) cfg.seed = seed;
      if (!out_dir.empty()) cfg.out = out_dir;
      std::string text;
      const int code = kp::run_experiment(cfg, &text);
      std::cout << text;
      return code;
    }
    if (sweep->parsed()) {
      kp::SweepConfig cfg =
          kp::sweep_config_from_json(load_config_json(config_path, overrides));
      if (sweep->count("--seed")) cfg.base.seed = seed;
      if (!out_dir.empty()) cfg.base.out = out_dir;
      if (sweep->count("--workers")) cfg.workers = workers;
      if (cfg.workers < 1)
        throw kp::ConfigError("config error at $.workers: must be >= 1");
      std::string text;
      const int code = kp::run_sweep(cfg, &text);
      std::cout << text;
      return code;
    }
    if (quad->parsed()) {
      kp::QuadformConfig cfg =
          kp::quadform_config_from_json(load_config_json(config_path, overrides));
      if (!out_dir.empty()) cfg.out = out_dir;
      std::string text;
      const int code = kp::run_quadform(cfg, &text);
      std::cout << text;
      return code;
    }
    // report
    std::string text;
    const int code = kp::run_report(out_dir.empty() ? "./out" : out_dir, &text);
    std::cout << text;
    return code;
  } catch (const kp::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const kp::DegenerateQError& e) {
    std::cerr << "degenerate coefficient: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
