#include "tild/gmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tild/rng.hpp"

namespace tild {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

struct ScoreScratch {
  std::vector<double> lp;
  VectorXd diff, tmp;
};
}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<VectorXd> means,
                                 std::vector<MatrixXd> covariances)
    : w_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
  const size_t nc = w_.size();
  if (nc == 0 || means_.size() != nc || covs_.size() != nc)
    throw std::invalid_argument("GaussianMixture: component lists must be nonempty and equal-sized");
  dim_ = static_cast<int>(means_[0].size());
  if (dim_ < 1) throw std::invalid_argument("GaussianMixture: dimension must be positive");

  double wsum = 0.0;
  for (double w : w_) {
    if (!(w > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be positive");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1 within 1e-12");

  logw_.resize(nc);
  chol_.resize(nc);
  prec_.resize(nc);
  lognorm_.resize(nc);
  eig_min_ = std::numeric_limits<double>::infinity();
  eig_max_ = 0.0;
  double max_mean_norm = 0.0;

  for (size_t i = 0; i < nc; ++i) {
    if (means_[i].size() != dim_ || covs_[i].rows() != dim_ || covs_[i].cols() != dim_)
      throw std::invalid_argument("GaussianMixture: inconsistent component dimensions");
    if (!covs_[i].isApprox(covs_[i].transpose(), 1e-12))
      throw std::invalid_argument("GaussianMixture: covariance not symmetric");

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covs_[i]);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("GaussianMixture: covariance not positive definite");
    eig_min_ = std::min(eig_min_, eig.eigenvalues().minCoeff());
    eig_max_ = std::max(eig_max_, eig.eigenvalues().maxCoeff());

    Eigen::LLT<MatrixXd> llt(covs_[i]);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("GaussianMixture: Cholesky factorization failed");
    chol_[i] = llt.matrixL();
    prec_[i] = llt.solve(MatrixXd::Identity(dim_, dim_));

    double logdet = 0.0;
    for (int j = 0; j < dim_; ++j) logdet += 2.0 * std::log(chol_[i](j, j));
    lognorm_[i] = -0.5 * (dim_ * kLog2Pi + logdet);
    logw_[i] = std::log(w_[i]);
    max_mean_norm = std::max(max_mean_norm, means_[i].lpNorm<Eigen::Infinity>());
  }

  // Peak bound: p(x) <= sum_i alpha_i * peak density of component i.
  {
    double m = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nc; ++i) m = std::max(m, logw_[i] + lognorm_[i]);
    double s = 0.0;
    for (size_t i = 0; i < nc; ++i) s += std::exp(logw_[i] + lognorm_[i] - m);
    peak_log_density_ = m + std::log(s);
  }

  constants_.lipschitz = 1.0 / eig_min_;
  constants_.dissipativity_a = 1.0 / eig_max_;
  constants_.dissipativity_radius = max_mean_norm + 3.0 * std::sqrt(eig_max_);
  constants_.dissipativity_b =
      constants_.dissipativity_a * constants_.dissipativity_radius * constants_.dissipativity_radius;
  constants_.weak_convexity = constants_.lipschitz;

  scalar_ = (dim_ == 1);
  if (scalar_) {
    s_mean_.resize(nc);
    s_invvar_.resize(nc);
    for (size_t i = 0; i < nc; ++i) {
      s_mean_[i] = means_[i](0);
      s_invvar_[i] = prec_[i](0, 0);
    }
  }
}

double GaussianMixture::log_density(const VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("log_density: dimension mismatch");
  const size_t nc = w_.size();
  if (scalar_) {
    const double v = x(0);
    double m = -std::numeric_limits<double>::infinity();
    double lp[3];
    std::vector<double> lpv;
    double* l = lp;
    if (nc > 3) { lpv.resize(nc); l = lpv.data(); }
    for (size_t i = 0; i < nc; ++i) {
      const double d = v - s_mean_[i];
      l[i] = logw_[i] + lognorm_[i] - 0.5 * d * d * s_invvar_[i];
      if (l[i] > m) m = l[i];
    }
    double s = 0.0;
    for (size_t i = 0; i < nc; ++i) s += std::exp(l[i] - m);
    return m + std::log(s);
  }
  thread_local ScoreScratch sc;
  sc.lp.resize(nc);
  sc.diff.resize(dim_);
  sc.tmp.resize(dim_);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < nc; ++i) {
    sc.diff = x - means_[i];
    sc.tmp.noalias() = prec_[i] * sc.diff;
    sc.lp[i] = logw_[i] + lognorm_[i] - 0.5 * sc.diff.dot(sc.tmp);
    if (sc.lp[i] > m) m = sc.lp[i];
  }
  double s = 0.0;
  for (size_t i = 0; i < nc; ++i) s += std::exp(sc.lp[i] - m);
  return m + std::log(s);
}

void GaussianMixture::score_into(const VectorXd& x, VectorXd& out) const {
  if (x.size() != dim_) throw std::invalid_argument("score: dimension mismatch");
  const size_t nc = w_.size();
  if (scalar_) {
    const double v = x(0);
    double lp[3];
    std::vector<double> lpv;
    double* l = lp;
    if (nc > 3) { lpv.resize(nc); l = lpv.data(); }
    double m = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nc; ++i) {
      const double d = v - s_mean_[i];
      l[i] = logw_[i] + lognorm_[i] - 0.5 * d * d * s_invvar_[i];
      if (l[i] > m) m = l[i];
    }
    double s = 0.0;
    for (size_t i = 0; i < nc; ++i) s += std::exp(l[i] - m);
    const double lse = m + std::log(s);
    double g = 0.0;
    for (size_t i = 0; i < nc; ++i)
      g -= std::exp(l[i] - lse) * s_invvar_[i] * (v - s_mean_[i]);
    out.resize(1);
    out(0) = g;
    return;
  }
  thread_local ScoreScratch sc;
  sc.lp.resize(nc);
  sc.diff.resize(dim_);
  sc.tmp.resize(dim_);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < nc; ++i) {
    sc.diff = x - means_[i];
    sc.tmp.noalias() = prec_[i] * sc.diff;
    sc.lp[i] = logw_[i] + lognorm_[i] - 0.5 * sc.diff.dot(sc.tmp);
    if (sc.lp[i] > m) m = sc.lp[i];
  }
  double s = 0.0;
  for (size_t i = 0; i < nc; ++i) s += std::exp(sc.lp[i] - m);
  const double lse = m + std::log(s);
  out.setZero(dim_);
  for (size_t i = 0; i < nc; ++i) {
    const double wi = std::exp(sc.lp[i] - lse);
    sc.diff = x - means_[i];
    sc.tmp.noalias() = prec_[i] * sc.diff;
    out.noalias() -= wi * sc.tmp;
  }
}

VectorXd GaussianMixture::score(const VectorXd& x) const {
  VectorXd out;
  score_into(x, out);
  return out;
}

MatrixXd GaussianMixture::sample(long count, std::uint64_t seed, std::uint64_t stream) const {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  const size_t nc = w_.size();
  MatrixXd out(count, dim_);
  VectorXd z(dim_);
  for (long r = 0; r < count; ++r) {
    const double u = rng::uniform(seed, static_cast<std::uint64_t>(r), stream, 0);
    size_t comp = nc - 1;
    double acc = 0.0;
    for (size_t i = 0; i < nc; ++i) {
      acc += w_[i];
      if (u <= acc) { comp = i; break; }
    }
    for (int j = 0; j < dim_; ++j)
      z(j) = rng::normal(seed, static_cast<std::uint64_t>(r), stream, 1 + static_cast<std::uint64_t>(j));
    out.row(r) = (means_[comp] + chol_[comp] * z).transpose();
  }
  return out;
}

GaussianMixture GaussianMixture::marginal(int axis) const {
  if (axis < 0 || axis >= dim_) throw std::invalid_argument("marginal: axis out of range");
  const size_t nc = w_.size();
  std::vector<VectorXd> m(nc);
  std::vector<MatrixXd> c(nc);
  for (size_t i = 0; i < nc; ++i) {
    m[i] = VectorXd::Constant(1, means_[i](axis));
    c[i] = MatrixXd::Constant(1, 1, covs_[i](axis, axis));
  }
  return GaussianMixture(w_, std::move(m), std::move(c));
}

GaussianMixture GaussianMixture::convolved(double tau) const {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("convolved: tau must be in [0,1]");
  const size_t nc = w_.size();
  const double s = std::sqrt(1.0 - tau);
  std::vector<VectorXd> m(nc);
  std::vector<MatrixXd> c(nc);
  for (size_t i = 0; i < nc; ++i) {
    m[i] = s * means_[i];
    c[i] = (1.0 - tau) * covs_[i] + tau * MatrixXd::Identity(dim_, dim_);
  }
  return GaussianMixture(w_, std::move(m), std::move(c));
}

}  // namespace tild
