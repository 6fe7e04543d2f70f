#pragma once

#include <memory>
#include <stdexcept>

#include "tild/gmm.hpp"

namespace tild {

enum class PathVariant { identity, tempering, dilation, daz, convolution, posterior };

struct StepConstants {
  double a, L;  // dissipativity and gradient-Lipschitz constants at a given tau
};

struct ProxSettings {
  enum class StepRule { fixed, backtracking };
  double tolerance = 1e-10;  // gradient-norm stop
  int max_iterations = 10000;
  // Backtracking by default: the fixed step 1/(1/tau + L) relies on the
  // eigenvalue-heuristic L, which the true mixture curvature can exceed
  // between modes. Armijo halving with fixed constants stays deterministic.
  StepRule step_rule = StepRule::backtracking;
};

struct LinearGaussianLikelihood {
  MatrixXd A;
  VectorXd y;
  double noise_sigma;
};

// Per-tau drift evaluator, built once per step and shared read-only across
// worker threads.
class PathEvaluator {
 public:
  virtual ~PathEvaluator() = default;
  virtual void grad(const VectorXd& x, VectorXd& out) const = 0;
};

// A family (p_tau) exposing grad U_tau and per-tau step constants.
// Immutable and shareable across threads.
class AnnealingPath {
 public:
  virtual ~AnnealingPath() = default;
  virtual PathVariant variant() const = 0;
  virtual int dim() const = 0;
  virtual double tau_max() const = 0;
  virtual const GaussianMixture& target() const = 0;
  virtual StepConstants step_constants(double tau) const = 0;
  virtual std::unique_ptr<const PathEvaluator> evaluator(double tau) const = 0;

  VectorXd grad_potential(const VectorXd& x, double tau) const;

 protected:
  void require_tau(double tau) const {
    if (!(tau >= 0.0) || tau > tau_max())
      throw std::domain_error("AnnealingPath: tau outside [0, tau_max]");
  }
};

class ProxError : public std::runtime_error {
 public:
  ProxError(const std::string& msg, double final_grad_norm)
      : std::runtime_error(msg), final_grad_norm(final_grad_norm) {}
  double final_grad_norm;
};

// Moreau/DAZ path; exposed concretely so the prox and envelope are testable.
class DazPath final : public AnnealingPath {
 public:
  DazPath(GaussianMixture target, ProxSettings settings, double tau_max_value);

  PathVariant variant() const override { return PathVariant::daz; }
  int dim() const override { return target_.dim(); }
  double tau_max() const override { return tau_max_; }
  const GaussianMixture& target() const override { return target_; }
  StepConstants step_constants(double tau) const override;
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override;

  // argmin_y U(y) + |x-y|^2/(2 tau); deterministic multi-start descent.
  VectorXd prox(const VectorXd& x, double tau) const;
  // M_tau(x) = U(prox) + |x-prox|^2/(2 tau).
  double moreau_envelope(const VectorXd& x, double tau) const;

  const ProxSettings& prox_settings() const { return settings_; }

 private:
  GaussianMixture target_;
  ProxSettings settings_;
  double tau_max_;
  double a_, L_;
  double moreau_limit_;   // min(1/alpha, 1/L), the strong-convexity bound for prox
  double u_lower_bound_;  // global lower bound on U = -log p
};

std::unique_ptr<AnnealingPath> make_identity_path(GaussianMixture target);
std::unique_ptr<AnnealingPath> make_tempering_path(GaussianMixture target,
                                                   GaussianMixture reference);
// Default reference N(0, lambda_max * I).
GaussianMixture make_default_reference(const GaussianMixture& target);
std::unique_ptr<AnnealingPath> make_dilation_path(GaussianMixture target,
                                                  double tau_max = 0.99);
// tau_max < 0 selects the default 0.1 * min(1/alpha, 1/L).
std::unique_ptr<DazPath> make_daz_path(GaussianMixture target, ProxSettings settings = {},
                                       double tau_max = -1.0);
std::unique_ptr<AnnealingPath> make_convolution_path(GaussianMixture target);
std::unique_ptr<AnnealingPath> make_posterior_path(std::shared_ptr<const AnnealingPath> inner,
                                                   LinearGaussianLikelihood likelihood);

}  // namespace tild
