#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "tild/metrics.hpp"
#include "tild/paths.hpp"
#include "tild/schedule.hpp"
#include "tild/thread_pool.hpp"

namespace tild {

// N independent chains plus bookkeeping. Noise is counter-based in
// (seed, chain, step, coordinate), so chain i's trajectory never depends on
// how many chains or threads run beside it.
class Ensemble {
 public:
  Ensemble(long n_chains, int dim, std::uint64_t seed);

  void init_point(const VectorXd& x);
  void init_gaussian(const VectorXd& mean, double scale);

  MatrixXd& states() { return states_; }
  const MatrixXd& states() const { return states_; }
  long n_chains() const { return states_.rows(); }
  int dim() const { return static_cast<int>(states_.cols()); }
  long step_index() const { return k_; }
  // Sigma h_i under Neumaier compensated summation.
  double sim_time() const { return t_ + t_comp_; }
  std::uint64_t seed() const { return seed_; }

  void advance(double h);

  // Chain-major exports.
  void save_csv(const std::filesystem::path& file) const;
  void save_binary(const std::filesystem::path& file) const;

 private:
  std::uint64_t seed_;
  long k_ = 0;
  double t_ = 0.0, t_comp_ = 0.0;
  MatrixXd states_;
};

struct RunPlan {
  long n_chains = 1;
  long n_steps = 0;
  // Sorted iterations to snapshot (0 = initial ensemble); empty means {n_steps}.
  std::vector<long> snapshot_iterations;

  enum class InitKind { point, gaussian };
  InitKind init_kind = InitKind::point;
  VectorXd init_point;  // empty: coordinate-wise min component mean, minus one
  VectorXd init_mean;   // gaussian init
  double init_scale = 1.0;

  double max_sim_time = std::numeric_limits<double>::infinity();
};

struct Snapshot {
  long iteration;
  double tau;       // tau(t) at the snapshot time (clamped to the path domain)
  double sim_time;
  MatrixXd states;
};

struct RunResult {
  std::vector<Snapshot> snapshots;
  std::vector<metrics::StepRecord> history;  // per step: h, post-step tau, post-step t
  long steps_executed = 0;
  bool stopped_by_time = false;
};

// One Euler-Maruyama step X <- X - h grad U_tau(X) + sqrt(2h) Z in place.
// h = 0 degenerates to the identity. Throws if any chain turns non-finite.
void em_step(Ensemble& ensemble, const AnnealingPath& path, double h, double tau,
             ThreadPool* pool = nullptr);

VectorXd default_init_point(const GaussianMixture& target);

RunResult run(const AnnealingPath& path, const Schedule& schedule, const StepPolicy& policy,
              const RunPlan& plan, std::uint64_t seed, ThreadPool* pool = nullptr);

}  // namespace tild
