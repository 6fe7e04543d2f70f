#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tild/gmm.hpp"
#include "tild/metrics.hpp"

// Brute-force references. They live in the library (not test code) so the
// CLI `verify` subcommand can run them on an installed build.
namespace tild::oracles {

struct GridSpec {
  struct Axis {
    double lo, hi, resolution;
  };
  std::vector<Axis> axes;
  long point_count() const;
};

// Exhaustive minimization of y -> U(y) + |x-y|^2/(2 tau) over the grid.
// Throws if the minimizer lies on the grid boundary (grid too small).
VectorXd grid_prox(const std::function<double(const VectorXd&)>& U, const VectorXd& x,
                   double tau, const GridSpec& grid);

// Central differences per axis.
VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                     double step);

// Draws n_mc samples of sqrt(1-tau) X + sqrt(tau) Z and measures histogram-KL
// against the analytic transformed mixture used by the convolution path.
double mc_convolution_check(const GaussianMixture& target, double tau, long n_mc,
                            const metrics::HistogramSpec& spec, std::uint64_t seed);

// KL(N(m1,S1) || N(m2,S2)) in closed form.
double gaussian_kl(const VectorXd& m1, const MatrixXd& S1, const VectorXd& m2,
                   const MatrixXd& S2);

}  // namespace tild::oracles
