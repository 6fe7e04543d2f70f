#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tild {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Constants entering the step-size rule h = a/L^2 (L, a) plus the
// dissipativity placeholders (b, R) and weak-convexity bound.
struct TargetConstants {
  double lipschitz = 0.0;            // L = 1/lambda_min over all components
  double dissipativity_a = 0.0;      // a = 1/lambda_max over all components
  double dissipativity_b = 0.0;      // a * R^2 (far-field placeholder)
  double dissipativity_radius = 0.0; // max|m_i| + 3*sqrt(lambda_max)
  double weak_convexity = 0.0;       // alpha = L (safe over-estimate)
};

// Finite Gaussian mixture with analytic density, score and exact sampling.
// Immutable after construction; safe to share across threads.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<VectorXd> means,
                  std::vector<MatrixXd> covariances);

  int dim() const { return dim_; }
  int n_components() const { return static_cast<int>(w_.size()); }
  const std::vector<double>& weights() const { return w_; }
  const VectorXd& mean(int i) const { return means_[static_cast<size_t>(i)]; }
  const MatrixXd& cov(int i) const { return covs_[static_cast<size_t>(i)]; }

  double log_density(const VectorXd& x) const;
  VectorXd score(const VectorXd& x) const;
  // Alloc-free variant for hot loops (uses caller-invisible thread-local scratch).
  void score_into(const VectorXd& x, VectorXd& out) const;
  // U(x) = -log p(x).
  double potential(const VectorXd& x) const { return -log_density(x); }

  // Exact i.i.d. draws, one row per sample; deterministic in (seed, stream).
  MatrixXd sample(long count, std::uint64_t seed, std::uint64_t stream = 0) const;

  TargetConstants estimate_constants() const { return constants_; }
  GaussianMixture marginal(int axis) const;

  // Mixture of the law sqrt(1-tau)*X + sqrt(tau)*Z, Z ~ N(0, I):
  // means sqrt(1-tau)*m_i, covariances (1-tau)*Sigma_i + tau*I.
  GaussianMixture convolved(double tau) const;

  // Eigenvalue extremes over all covariance components (cached).
  double lambda_min() const { return eig_min_; }
  double lambda_max() const { return eig_max_; }
  // log of an upper bound on the density peak: log(sum_i alpha_i * N_i(m_i|m_i)).
  double peak_log_density_bound() const { return peak_log_density_; }

 private:
  int dim_;
  std::vector<double> w_, logw_;
  std::vector<VectorXd> means_;
  std::vector<MatrixXd> covs_;
  std::vector<MatrixXd> chol_;  // lower Cholesky factors, cached at construction
  std::vector<MatrixXd> prec_;  // Sigma^{-1}, cached
  std::vector<double> lognorm_; // -(d/2)log(2*pi) - (1/2)log det Sigma
  double eig_min_, eig_max_;
  double peak_log_density_;
  TargetConstants constants_;
  bool scalar_;                       // d == 1 fast path
  std::vector<double> s_mean_, s_invvar_; // scalar-path caches
};

}  // namespace tild
