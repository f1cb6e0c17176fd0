#include "sgf/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace sgf {

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"isotropic Gaussian fields on the sphere: synthesis and diagnostics"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  auto* config_opt = app.add_option("--config", config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  auto* threads_opt = app.add_option("--threads", threads, "worker thread count");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");

  const std::pair<Command, const char*> commands[] = {
      {Command::simulate, "synthesize a field, write its binary and metadata"},
      {Command::covariance, "tabulate the covariance and its spectrum"},
      {Command::variogram, "fit the small-scale variogram slope"},
      {Command::slnd, "probe conditional-variance ratios at random configurations"},
      {Command::localtime, "estimate local time and an upper density profile"},
      {Command::levelset, "extract a level set at the default tolerance"},
      {Command::dimension, "replicate box-dimension fits of the level set"},
      {Command::capacity, "estimate capacity and run the consistency grid"},
      {Command::hitting, "Monte Carlo hitting frequencies over shrinking targets"},
      {Command::oscillation_tail, "tail fits for full-field and band-residual oscillation"},
      {Command::smooth_event, "frequency of the smooth-ball event over a constant grid"},
      {Command::verify_theory, "run every theoretical check over the configured grid"},
      {Command::report, "aggregate prior outputs into plot-ready tables"},
  };
  std::map<std::string, Command> by_name;
  for (const auto& [cmd, help] : commands) {
    app.add_subcommand(command_name(cmd), help);
    by_name.emplace(command_name(cmd), cmd);
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("sgf");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig cfg;
    if (config_opt->count() > 0) cfg = load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (threads_opt->count() > 0) cfg.threads = threads;
    if (out_opt->count() > 0) cfg.out = out_dir;

    const Command cmd = by_name.at(app.get_subcommands().front()->get_name());
    RunRecord rec;
    switch (cmd) {
      case Command::simulate: rec = run_simulate(cfg); break;
      case Command::covariance: rec = run_covariance(cfg); break;
      case Command::variogram: rec = run_variogram(cfg); break;
      case Command::slnd: rec = run_slnd(cfg); break;
      case Command::localtime: rec = run_localtime(cfg); break;
      case Command::levelset: rec = run_levelset(cfg); break;
      case Command::dimension: rec = run_dimension(cfg); break;
      case Command::capacity: rec = run_capacity(cfg); break;
      case Command::hitting: rec = run_hitting(cfg); break;
      case Command::oscillation_tail: rec = run_oscillation_tail(cfg); break;
      case Command::smooth_event: rec = run_smooth_event(cfg); break;
      case Command::verify_theory: rec = run_verify_theory(cfg); break;
      case Command::report: rec = run_report(cfg); break;
    }
    return rec.passed ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sgf
