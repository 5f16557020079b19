#pragma once

#include "cli/config.hpp"

namespace shiftlif::cli {

// Execute the experiment named in config.kind. Writes a manifest plus the
// experiment's report files into config.out_dir. Throws ConfigError,
// IoError or CheckFailure; anything else indicates a bug.
void run_experiment(const ExperimentConfig& config);

}  // namespace shiftlif::cli
