#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;
constexpr int kExitIo = 4;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  bool strict = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_set = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shiftlif: multi-level power-of-two spiking neuron toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string selected;
  const char* names[] = {"analyze",  "train",        "ablate-K", "ablate-grid",
                         "energy",   "kernel-check", "gen-data"};
  const char* blurbs[] = {
      "quantization error, entropy and lemma reports over a sample distribution",
      "train a spiking classifier on the synthetic task",
      "sweep the precision factor K on the synthetic task",
      "logarithmic vs uniform grid comparison at a fixed level budget",
      "per-layer spike rates and energy estimates",
      "shift-accumulate kernel equivalence battery",
      "write the synthetic dataset to CSV"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", opts.config_path, "experiment configuration file");
    sub->add_option("--seed", opts.seed, "override the experiment seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    sub->add_option("--out", opts.out_dir, "override the output directory")
        ->each([&](const std::string&) { opts.out_set = true; });
    sub->add_flag("--strict", opts.strict, "treat unknown config keys as errors");
    sub->callback([&, i] { selected = names[i]; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  using namespace shiftlif::cli;
  try {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
      cfg = load_config(opts.config_path, opts.strict, std::cerr);
    }
    if (!cfg.kind.empty() && cfg.kind != selected) {
      std::cerr << "warning: config names experiment '" << cfg.kind << "', running '" << selected
                << "'\n";
    }
    cfg.kind = selected;

    // Resolution order: defaults < config file < environment < flags.
    if (const char* env_seed = std::getenv("SHIFTLIF_SEED")) {
      try {
        cfg.seed = std::stoull(env_seed);
      } catch (const std::exception&) {
        throw ConfigError(std::string("SHIFTLIF_SEED is not an unsigned integer: ") + env_seed);
      }
    }
    if (const char* env_out = std::getenv("SHIFTLIF_OUT")) cfg.out_dir = env_out;
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.out_set) cfg.out_dir = opts.out_dir;

    run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return kExitCheck;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheck;
  }
  return kExitOk;
}
