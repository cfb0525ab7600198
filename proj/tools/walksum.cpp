// Batch experiment runner. Subcommands:
//   walksum run --config FILE [--out DIR] [--seed U64] [--threads N]
//   walksum validate --config FILE

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "walksum/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"walksum: sampled-sum simulation and verification toolkit"};
  app.require_subcommand(1);

  std::string run_config;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool seed_set = false;

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", run_config, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--seed", seed, "master seed override")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker threads for replicate loops");

  std::string validate_config_path;
  auto* validate = app.add_subcommand("validate", "validate a config without running");
  validate->add_option("--config", validate_config_path, "experiment config (JSON)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    walksum::cli::RunOverrides overrides;
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    if (seed_set) overrides.master_seed = seed;
    if (threads > 0) overrides.threads = threads;
    return walksum::cli::run_path(run_config, overrides, std::cout, std::cerr);
  }
  return walksum::cli::validate_path(validate_config_path, std::cout, std::cerr);
}
