#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "shiftlif/energy.hpp"
#include "shiftlif/neuron.hpp"
#include "shiftlif/training.hpp"

namespace shiftlif::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by an experiment whose own checks fail (kernel mismatch, invariant
// violation); maps to exit code 3.
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DistributionSpec {
  std::string family = "exponential";  // exponential | uniform | point | mixture | membrane
  double rate = 4.0;
  double lo = 0.0;
  double hi = 1.0;
  double value = 0.9;
  double mix_p = 0.5;
  std::size_t samples = 100000;
};

struct DataSpec {
  std::size_t classes = 3;
  std::size_t samples_per_class = 40;
  std::size_t input_dim = 16;
  double noise = 0.25;
};

struct KernelSpec {
  std::size_t trials = 100;
  std::size_t max_dim = 256;
  int max_precision = 8;
  int frac_bits = 8;
  int storage_bits = 16;
};

// Everything a run needs, resolved from defaults, the config file, env vars
// and flags, in that order.
struct ExperimentConfig {
  std::string kind;  // set by the subcommand
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  NeuronParams neuron;  // shiftlif, tau=2.0, v_th=1.0, v_reset=0.0, K=2
  std::vector<std::size_t> widths = {16, 24, 24, 3};
  std::size_t timesteps = 4;

  TrainConfig train;
  DataSpec data;
  DistributionSpec distribution;

  std::vector<int> k_list = {1, 2, 3};
  std::size_t hist_bins = 40;
  double hist_vmax = 1.5;

  EnergyConstants energy;
  std::map<std::string, EnergyConstants> energy_profiles;  // keyed by neuron kind

  KernelSpec kernel;
};

// Flat INI-style text with [sections]; '#' and ';' start comments. Unknown
// keys warn on `warnings` unless strict, in which case they are errors.
// Validation failures list every violated invariant at once.
ExperimentConfig parse_config(std::istream& in, const std::string& name, bool strict,
                              std::ostream& warnings);
ExperimentConfig load_config(const std::string& path, bool strict, std::ostream& warnings);

// Fully resolved config as JSON (the body of the run manifest).
std::string config_to_json(const ExperimentConfig& config);

const EnergyConstants& profile_for(const ExperimentConfig& config, NeuronKind kind);

}  // namespace shiftlif::cli
