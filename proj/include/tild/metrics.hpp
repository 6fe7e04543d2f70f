#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tild/gmm.hpp"

namespace tild::metrics {

struct HistogramSpec {
  struct Axis {
    double lo, hi;
    int bins;
  };
  std::vector<Axis> axes;

  // B=200 over [min m_i - 4*sqrt(lambda_max), max m_i + 4*sqrt(lambda_max)]
  // per axis; 100 per axis in 2D.
  static HistogramSpec default_for(const GaussianMixture& target);
  long cell_count() const;
  void validate() const;  // lo < hi, B >= 2, total cells <= 1e6
};

struct KlResult {
  double kl = 0.0;       // clipped at 0
  double raw_kl = 0.0;   // pre-clip value (can be slightly negative)
  double out_of_range_fraction = 0.0;
  bool warn_out_of_range = false;  // fraction > 5%
};

// Binned plug-in estimator: sum over occupied bins of p_hat*log(p_hat/q),
// target bin mass q by midpoint quadrature with 4x sub-sampling per axis.
// Out-of-range samples are clamped into edge bins and reported.
KlResult histogram_kl_detail(const MatrixXd& samples, const GaussianMixture& target,
                             const HistogramSpec& spec);
double histogram_kl(const MatrixXd& samples, const GaussianMixture& target,
                    const HistogramSpec& spec);

// histogram_kl of column `axis` against marginal(target, axis); spec is 1-D.
double marginal_kl(const MatrixXd& samples, const GaussianMixture& target, int axis,
                   const HistogramSpec& spec);

// One sampler step as recorded for the Eq.(17) evaluator: step size h,
// tau = tau(t) at the post-step time t.
struct StepRecord {
  double h, tau, t;
};

// Right-hand side of the discrete error bound (Eq. 17):
//   kl0 * exp(-sum_i D_i)
// + c * sum_{i>=1} |tau_i - tau_{i-1}| * exp(-sum_{j>=i} D_j)
// + c * sum_i h_i^2 * exp(-sum_{j>i} D_j)
// + c * tau_final,       D_i = 2 h_i / c_lsi(tau_i).
// tau_final defaults to the last record's tau.
double theory_bound(const std::function<double(double)>& c_lsi,
                    std::span<const StepRecord> history, double kl0, double c,
                    double tau_final);
double theory_bound(const std::function<double(double)>& c_lsi,
                    std::span<const StepRecord> history, double kl0, double c);

// Unbiased mean/covariance; throws for fewer than two samples.
std::pair<VectorXd, MatrixXd> moment_report(const MatrixXd& samples);

// Heuristic C_LSI(tau) surrogate for the convolution path:
// 2 * lambda_max((1-tau)*Sigma_i + tau*I) over components.
std::function<double(double)> convolution_clsi(const GaussianMixture& target);

struct KlReport {
  long iteration = 0;
  double tau = 0.0;
  double kl = 0.0;
  int marginal_axis = -1;  // -1: full-space histogram estimator
  double baseline_kl = 0.0;
};

}  // namespace tild::metrics
