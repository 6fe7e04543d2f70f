#include "tild/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tild::metrics {

HistogramSpec HistogramSpec::default_for(const GaussianMixture& target) {
  const int d = target.dim();
  if (d > 2) throw std::invalid_argument("HistogramSpec::default_for: full-space spec is 1D/2D only");
  const double pad = 4.0 * std::sqrt(target.lambda_max());
  HistogramSpec spec;
  spec.axes.resize(static_cast<size_t>(d));
  for (int ax = 0; ax < d; ++ax) {
    double lo = target.mean(0)(ax), hi = target.mean(0)(ax);
    for (int i = 1; i < target.n_components(); ++i) {
      lo = std::min(lo, target.mean(i)(ax));
      hi = std::max(hi, target.mean(i)(ax));
    }
    spec.axes[static_cast<size_t>(ax)] = {lo - pad, hi + pad, d == 1 ? 200 : 100};
  }
  return spec;
}

long HistogramSpec::cell_count() const {
  long n = 1;
  for (const auto& a : axes) n *= a.bins;
  return n;
}

void HistogramSpec::validate() const {
  if (axes.empty()) throw std::invalid_argument("HistogramSpec: no axes");
  for (const auto& a : axes) {
    if (!(a.lo < a.hi)) throw std::invalid_argument("HistogramSpec: lo must be < hi");
    if (a.bins < 2) throw std::invalid_argument("HistogramSpec: need at least 2 bins");
  }
  if (cell_count() > 1000000) throw std::invalid_argument("HistogramSpec: more than 1e6 cells");
}

namespace {

constexpr double kQFloor = 1e-300;
constexpr int kSub = 4;  // quadrature sub-samples per axis per bin

// Target mass per bin via midpoint quadrature on a kSub^d subgrid.
std::vector<double> bin_masses(const GaussianMixture& target, const HistogramSpec& spec) {
  const int d = static_cast<int>(spec.axes.size());
  std::vector<double> q(static_cast<size_t>(spec.cell_count()), 0.0);
  if (d == 1) {
    const auto& a = spec.axes[0];
    const double w = (a.hi - a.lo) / a.bins;
    const double sw = w / kSub;
    VectorXd x(1);
    for (int b = 0; b < a.bins; ++b) {
      double m = 0.0;
      for (int s = 0; s < kSub; ++s) {
        x(0) = a.lo + b * w + (s + 0.5) * sw;
        m += std::exp(target.log_density(x)) * sw;
      }
      q[static_cast<size_t>(b)] = m;
    }
  } else {
    const auto& a0 = spec.axes[0];
    const auto& a1 = spec.axes[1];
    const double w0 = (a0.hi - a0.lo) / a0.bins;
    const double w1 = (a1.hi - a1.lo) / a1.bins;
    const double sw0 = w0 / kSub, sw1 = w1 / kSub;
    VectorXd x(2);
    for (int b0 = 0; b0 < a0.bins; ++b0)
      for (int b1 = 0; b1 < a1.bins; ++b1) {
        double m = 0.0;
        for (int s0 = 0; s0 < kSub; ++s0)
          for (int s1 = 0; s1 < kSub; ++s1) {
            x(0) = a0.lo + b0 * w0 + (s0 + 0.5) * sw0;
            x(1) = a1.lo + b1 * w1 + (s1 + 0.5) * sw1;
            m += std::exp(target.log_density(x)) * sw0 * sw1;
          }
        q[static_cast<size_t>(b0) * a1.bins + b1] = m;
      }
  }
  return q;
}

inline int clamped_bin(double v, const HistogramSpec::Axis& a, double w, bool& out_of_range) {
  int b = static_cast<int>(std::floor((v - a.lo) / w));
  if (b < 0 || b >= a.bins || v < a.lo || v >= a.hi) {
    out_of_range = out_of_range || v < a.lo || v >= a.hi;
    b = std::clamp(b, 0, a.bins - 1);
  }
  return b;
}

}  // namespace

KlResult histogram_kl_detail(const MatrixXd& samples, const GaussianMixture& target,
                             const HistogramSpec& spec) {
  spec.validate();
  const int d = static_cast<int>(spec.axes.size());
  if (d > 2) throw std::invalid_argument("histogram_kl: full-space estimator is 1D/2D only");
  if (samples.cols() != d || target.dim() != d)
    throw std::invalid_argument("histogram_kl: dimension mismatch between samples, target and spec");
  const long n = samples.rows();
  if (n < 1) throw std::invalid_argument("histogram_kl: no samples");

  std::vector<long> counts(static_cast<size_t>(spec.cell_count()), 0);
  long out_count = 0;
  if (d == 1) {
    const auto& a = spec.axes[0];
    const double w = (a.hi - a.lo) / a.bins;
    for (long r = 0; r < n; ++r) {
      bool oor = false;
      counts[static_cast<size_t>(clamped_bin(samples(r, 0), a, w, oor))]++;
      out_count += oor;
    }
  } else {
    const auto& a0 = spec.axes[0];
    const auto& a1 = spec.axes[1];
    const double w0 = (a0.hi - a0.lo) / a0.bins;
    const double w1 = (a1.hi - a1.lo) / a1.bins;
    for (long r = 0; r < n; ++r) {
      bool oor = false;
      const int b0 = clamped_bin(samples(r, 0), a0, w0, oor);
      const int b1 = clamped_bin(samples(r, 1), a1, w1, oor);
      counts[static_cast<size_t>(b0) * a1.bins + b1]++;
      out_count += oor;
    }
  }

  const std::vector<double> q = bin_masses(target, spec);
  double kl = 0.0;
  for (size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / static_cast<double>(n);
    kl += p * std::log(p / std::max(q[b], kQFloor));
  }

  KlResult res;
  res.raw_kl = kl;
  res.kl = std::max(kl, 0.0);
  res.out_of_range_fraction = static_cast<double>(out_count) / static_cast<double>(n);
  res.warn_out_of_range = res.out_of_range_fraction > 0.05;
  return res;
}

double histogram_kl(const MatrixXd& samples, const GaussianMixture& target,
                    const HistogramSpec& spec) {
  return histogram_kl_detail(samples, target, spec).kl;
}

double marginal_kl(const MatrixXd& samples, const GaussianMixture& target, int axis,
                   const HistogramSpec& spec) {
  if (axis < 0 || axis >= target.dim())
    throw std::invalid_argument("marginal_kl: axis out of range");
  if (spec.axes.size() != 1) throw std::invalid_argument("marginal_kl: spec must be 1-D");
  if (samples.cols() != target.dim())
    throw std::invalid_argument("marginal_kl: sample dimension mismatch");
  return histogram_kl(samples.col(axis), target.marginal(axis), spec);
}

double theory_bound(const std::function<double(double)>& c_lsi,
                    std::span<const StepRecord> history, double kl0, double c,
                    double tau_final) {
  const size_t n = history.size();
  if (n == 0) throw std::invalid_argument("theory_bound: empty history");

  std::vector<double> D(n);
  for (size_t i = 0; i < n; ++i) {
    const double C = c_lsi(history[i].tau);
    if (!(C > 0.0)) throw std::domain_error("theory_bound: c_lsi must be positive");
    D[i] = 2.0 * history[i].h / C;
  }
  // suffix sums S[i] = sum_{j>=i} D_j
  std::vector<double> S(n + 1, 0.0);
  for (size_t i = n; i-- > 0;) S[i] = S[i + 1] + D[i];

  double bound = kl0 * std::exp(-S[0]);
  for (size_t i = 1; i < n; ++i)
    bound += c * std::fabs(history[i].tau - history[i - 1].tau) * std::exp(-S[i]);
  for (size_t i = 0; i < n; ++i)
    bound += c * history[i].h * history[i].h * std::exp(-S[i + 1]);
  bound += c * tau_final;
  return bound;
}

double theory_bound(const std::function<double(double)>& c_lsi,
                    std::span<const StepRecord> history, double kl0, double c) {
  if (history.empty()) throw std::invalid_argument("theory_bound: empty history");
  return theory_bound(c_lsi, history, kl0, c, history.back().tau);
}

std::pair<VectorXd, MatrixXd> moment_report(const MatrixXd& samples) {
  const long n = samples.rows();
  if (n < 2) throw std::invalid_argument("moment_report: need at least two samples");
  const VectorXd mean = samples.colwise().mean();
  const MatrixXd centered = samples.rowwise() - mean.transpose();
  MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return {mean, cov};
}

std::function<double(double)> convolution_clsi(const GaussianMixture& target) {
  const double lmax = target.lambda_max();
  return [lmax](double tau) { return 2.0 * ((1.0 - tau) * lmax + tau); };
}

}  // namespace tild::metrics
