// Command-line front end: run / validate experiment configs.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "virialab/virialab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"virialab: virial pressure of interacting Brownian particles"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "seed override (beats the config and VIRIALAB_SEED)");
  run->add_option("--threads", threads, "worker threads over grid points (0 = single-threaded)");
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");

  auto* validate = app.add_subcommand("validate", "parse and validate a config, print it with defaults resolved");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : virialab::ConfigError("").exit_code();
  }

  if (app.got_subcommand("version")) {
    std::cout << "virialab " << virialab::kVersion << '\n';
    return 0;
  }

  try {
    const virialab::ExperimentConfig cfg = virialab::load_config(config_path);
    if (app.got_subcommand("validate")) {
      std::cout << virialab::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    virialab::RunOptions opts;
    opts.seed = seed;
    opts.threads = threads;
    opts.out_dir = out_dir;
    const auto outcome = virialab::run_experiment(cfg, opts);
    if (outcome.exit_code != 0) {
      std::cerr << "virialab: " << outcome.message << '\n';
    } else {
      std::cout << "wrote";
      for (const auto& a : outcome.artifacts) std::cout << ' ' << a.string();
      std::cout << '\n';
    }
    return outcome.exit_code;
  } catch (const virialab::Error& e) {
    std::cerr << "virialab: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "virialab: " << e.what() << '\n';
    return 1;
  }
}
