#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tild/gmm.hpp"
#include "tild/metrics.hpp"
#include "tild/paths.hpp"
#include "tild/sampler.hpp"
#include "tild/schedule.hpp"

namespace tild {

// Annealing strategies the harness knows how to run. `direct_sample` is the
// exact-sampling baseline; it is always computed, so listing it is a no-op
// kept for config readability.
enum class Method { ula, dilation, tempering, convolution, daz, direct_sample };

// Token as accepted in `run.methods` (also the KL_comparison column name,
// except that the convolution column is historically called `diffusion`).
std::string method_name(Method m);
// Column header in KL_comparison.csv: ULA, dilation, tempering, diffusion, DAZ.
std::string method_kl_column(Method m);
// Column header in histogram CSVs (same, but lowercase daz).
std::string method_histo_column(Method m);
// Column suffix in the d>2 per-marginal CSVs (daz is spelled daz_scale1 there,
// matching the figure-data files this schema is modelled on).
std::string method_marginal_column(Method m);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::shared_ptr<const GaussianMixture> target;  // non-null after parsing

  std::vector<Method> methods;  // canonical order, direct_sample filtered out
  std::vector<double> T_values;

  long n_chains = 2000;
  long max_steps = 0;
  double max_sim_time = std::numeric_limits<double>::infinity();
  long kl_every = 100;  // KL row stride; 0 keeps only {0, histo iters, final}
  std::vector<long> histo_iterations;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;

  RunPlan::InitKind init_kind = RunPlan::InitKind::point;
  VectorXd init_point;  // empty: coordinate-wise min component mean, minus one
  VectorXd init_mean;   // gaussian init; empty: same default as init_point
  double init_scale = 1.0;

  StepPolicy policy;  // theory_max unless configured otherwise

  // Histogram overrides; unset fields fall back to HistogramSpec::default_for
  // (or its per-axis analogue for marginals when d > 2).
  std::optional<int> hist_bins;
  std::optional<double> hist_lo, hist_hi;
  int marginal_axes = 4;  // d>2: leading axes tracked

  double dilation_tau_max = 0.99;
  double daz_tau_max = -1.0;  // negative: library default
  ProxSettings prox;

  // Execution knobs; set by the CLI (flags / TILD_THREADS), not by config keys.
  int threads = 1;
  bool parallel_cells = false;
  bool quiet = false;  // suppress per-cell progress lines
};

// Flat `key = value` text; '#' starts a comment; keys are dotted and
// case-sensitive; unknown or duplicate keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

}  // namespace tild
