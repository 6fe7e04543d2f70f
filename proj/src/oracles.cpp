#include "tild/oracles.hpp"

#include <cmath>
#include <stdexcept>

#include "tild/rng.hpp"

namespace tild::oracles {

long GridSpec::point_count() const {
  long n = 1;
  for (const auto& a : axes) {
    if (!(a.resolution > 0.0) || !(a.lo < a.hi))
      throw std::invalid_argument("GridSpec: need lo < hi and resolution > 0");
    n *= static_cast<long>(std::floor((a.hi - a.lo) / a.resolution)) + 1;
  }
  return n;
}

VectorXd grid_prox(const std::function<double(const VectorXd&)>& U, const VectorXd& x,
                   double tau, const GridSpec& grid) {
  const int d = static_cast<int>(grid.axes.size());
  if (d < 1 || d > 2) throw std::invalid_argument("grid_prox: 1D/2D grids only");
  if (x.size() != d) throw std::invalid_argument("grid_prox: dimension mismatch");
  if (grid.point_count() > 10000000) throw std::invalid_argument("grid_prox: more than 1e7 grid points");
  if (!(tau > 0.0)) throw std::invalid_argument("grid_prox: tau must be positive");

  const double inv2tau = 1.0 / (2.0 * tau);
  VectorXd y(d), best_y(d);
  double best = std::numeric_limits<double>::infinity();
  std::vector<long> best_idx(static_cast<size_t>(d), -1);
  std::vector<long> npts(static_cast<size_t>(d));
  for (int ax = 0; ax < d; ++ax)
    npts[static_cast<size_t>(ax)] =
        static_cast<long>(std::floor((grid.axes[static_cast<size_t>(ax)].hi -
                                      grid.axes[static_cast<size_t>(ax)].lo) /
                                     grid.axes[static_cast<size_t>(ax)].resolution)) + 1;

  if (d == 1) {
    for (long i = 0; i < npts[0]; ++i) {
      y(0) = grid.axes[0].lo + static_cast<double>(i) * grid.axes[0].resolution;
      const double g = U(y) + (x - y).squaredNorm() * inv2tau;
      if (g < best) {
        best = g;
        best_y = y;
        best_idx[0] = i;
      }
    }
    if (best_idx[0] == 0 || best_idx[0] == npts[0] - 1)
      throw std::runtime_error("grid_prox: minimizer on grid boundary");
  } else {
    for (long i = 0; i < npts[0]; ++i) {
      y(0) = grid.axes[0].lo + static_cast<double>(i) * grid.axes[0].resolution;
      for (long j = 0; j < npts[1]; ++j) {
        y(1) = grid.axes[1].lo + static_cast<double>(j) * grid.axes[1].resolution;
        const double g = U(y) + (x - y).squaredNorm() * inv2tau;
        if (g < best) {
          best = g;
          best_y = y;
          best_idx[0] = i;
          best_idx[1] = j;
        }
      }
    }
    if (best_idx[0] == 0 || best_idx[0] == npts[0] - 1 || best_idx[1] == 0 ||
        best_idx[1] == npts[1] - 1)
      throw std::runtime_error("grid_prox: minimizer on grid boundary");
  }
  return best_y;
}

VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                     double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  VectorXd g(x.size());
  VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    xm(i) = x(i) - step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return g;
}

double mc_convolution_check(const GaussianMixture& target, double tau, long n_mc,
                            const metrics::HistogramSpec& spec, std::uint64_t seed) {
  if (target.dim() > 2) throw std::invalid_argument("mc_convolution_check: 1D/2D only");
  const double sx = std::sqrt(1.0 - tau);
  const double sz = std::sqrt(tau);
  MatrixXd xs = target.sample(n_mc, seed, /*stream=*/1);
  for (long r = 0; r < n_mc; ++r)
    for (int j = 0; j < target.dim(); ++j)
      xs(r, j) = sx * xs(r, j) +
                 sz * rng::normal(seed, static_cast<std::uint64_t>(r), /*step=*/2,
                                  static_cast<std::uint64_t>(j));
  return metrics::histogram_kl(xs, target.convolved(tau), spec);
}

double gaussian_kl(const VectorXd& m1, const MatrixXd& S1, const VectorXd& m2,
                   const MatrixXd& S2) {
  const Eigen::Index d = m1.size();
  if (m2.size() != d || S1.rows() != d || S1.cols() != d || S2.rows() != d || S2.cols() != d)
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  Eigen::LLT<MatrixXd> llt1(S1), llt2(S2);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_kl: covariance not positive definite");
  const MatrixXd inv2 = llt2.solve(MatrixXd::Identity(d, d));
  const VectorXd dm = m2 - m1;
  double logdet1 = 0.0, logdet2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    logdet1 += 2.0 * std::log(MatrixXd(llt1.matrixL())(i, i));
    logdet2 += 2.0 * std::log(MatrixXd(llt2.matrixL())(i, i));
  }
  return 0.5 * ((inv2 * S1).trace() + dm.dot(inv2 * dm) - static_cast<double>(d) +
                logdet2 - logdet1);
}

}  // namespace tild::oracles
