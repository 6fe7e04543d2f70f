#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tild/config.hpp"

namespace tild {

// Shortest round-trip decimal of T with the dot stripped, as used in output
// names: 0.1 -> "01", 1 -> "1", 2 -> "2", 10 -> "10".
std::string format_T(double T);

struct ExperimentResult {
  std::vector<std::filesystem::path> files_written;
};

// Runs the method x T sweep and writes the artifact set under cfg.out_dir:
//   d <= 2: per-T directories T_<fmt>/ holding KL_comparison.csv and
//           histo_comparison_iter_<k>.csv (per-axis files in 2-D), plus
//           gt_density*.csv at the root;
//   d > 2:  flat per-marginal files T<fmt>_KLmarginal<i>.csv;
//   always: metadata.json (seed, versions, step/tau traces, wall times).
// Setup problems (bad knobs, unwritable output) throw ConfigError before any
// simulation starts; mid-run failures propagate as std::runtime_error.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace tild
