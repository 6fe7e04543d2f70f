#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tild/oracles.hpp"

using namespace tild;

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

TEST_CASE("construction rejects malformed mixtures") {
  std::vector<double> w{0.5, 0.6};  // does not sum to 1
  std::vector<VectorXd> m(2, VectorXd::Zero(1));
  std::vector<MatrixXd> c(2, MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(GaussianMixture(w, m, c), std::invalid_argument);

  w = {0.5, 0.5};
  c[1](0, 0) = -1.0;  // not SPD
  CHECK_THROWS_AS(GaussianMixture(w, m, c), std::invalid_argument);

  c[1](0, 0) = 1.0;
  m[1] = VectorXd::Zero(2);  // dimension mismatch
  CHECK_THROWS_AS(GaussianMixture(w, m, c), std::invalid_argument);

  CHECK_THROWS_AS(GaussianMixture({}, {}, {}), std::invalid_argument);
}

TEST_CASE("standard normal density and score are exact") {
  const auto g = fixtures::std_normal(1);
  VectorXd x(1);
  x << 0.0;
  CHECK(g.log_density(x) == doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-15));
  x << 1.7;
  CHECK(g.log_density(x) == doctest::Approx(-0.5 * kLog2Pi - 0.5 * 1.7 * 1.7).epsilon(1e-15));
  CHECK(g.score(x)(0) == doctest::Approx(-1.7).epsilon(1e-15));
  CHECK(g.potential(x) == doctest::Approx(-g.log_density(x)).epsilon(1e-15));
}

TEST_CASE("benchmark 1D mixture constants") {
  const auto g = fixtures::mix1d();
  const auto c = g.estimate_constants();
  CHECK(c.lipschitz == doctest::Approx(100.0).epsilon(1e-12));          // 1/0.01
  CHECK(c.dissipativity_a == doctest::Approx(1.0 / 0.09).epsilon(1e-12));
  CHECK(c.dissipativity_radius == doctest::Approx(2.0 + 3.0 * 0.3).epsilon(1e-12));
  CHECK(c.dissipativity_b ==
        doctest::Approx(c.dissipativity_a * 2.9 * 2.9).epsilon(1e-12));
  CHECK(c.weak_convexity == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(g.lambda_min() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(g.lambda_max() == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("score matches finite differences of log density") {
  const auto g1 = fixtures::mix1d();
  for (double xv : {-2.3, -0.9, 0.0, 0.7, 1.5, 2.8}) {
    VectorXd x(1);
    x << xv;
    const VectorXd fd = oracles::fd_gradient(
        [&](const VectorXd& y) { return g1.log_density(y); }, x, 1e-5);
    CHECK(g1.score(x)(0) == doctest::Approx(fd(0)).epsilon(1e-6));
  }
  const auto g2 = fixtures::mix2d();
  VectorXd x(2);
  x << 0.8, 1.1;
  const VectorXd fd = oracles::fd_gradient(
      [&](const VectorXd& y) { return g2.log_density(y); }, x, 1e-5);
  const VectorXd s = g2.score(x);
  CHECK(s(0) == doctest::Approx(fd(0)).epsilon(1e-6));
  CHECK(s(1) == doctest::Approx(fd(1)).epsilon(1e-6));
}

TEST_CASE("score_into matches score without allocation surprises") {
  const auto g = fixtures::mix2d();
  VectorXd x(2), out(2);
  x << -0.4, 2.3;
  g.score_into(x, out);
  const VectorXd s = g.score(x);
  CHECK(out(0) == s(0));
  CHECK(out(1) == s(1));
}

TEST_CASE("exact sampling reproduces mixture moments") {
  const auto g = fixtures::mix1d();
  const long n = 100000;
  const MatrixXd s = g.sample(n, 2024);
  const double mean = s.col(0).mean();
  const double var = (s.col(0).array() - mean).square().sum() / (n - 1);
  // Analytic: mean 0, var = sum a_i (m_i^2 + s_i^2) = 2.443.
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(2.443).epsilon(0.02));

  // Component hit fractions.
  const double frac_left = (s.col(0).array() < -1.0).count() / static_cast<double>(n);
  CHECK(frac_left == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("sampling is deterministic in seed and stream") {
  const auto g = fixtures::mix2d();
  const MatrixXd a = g.sample(50, 7, 0);
  const MatrixXd b = g.sample(50, 7, 0);
  const MatrixXd c = g.sample(50, 7, 1);
  const MatrixXd d = g.sample(50, 8, 0);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a - d).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("convolved endpoints and interior") {
  const auto g = fixtures::mix1d();
  const auto g0 = g.convolved(0.0);
  CHECK(g0.mean(0)(0) == g.mean(0)(0));
  CHECK(g0.cov(2)(0, 0) == g.cov(2)(0, 0));

  const auto g1 = g.convolved(1.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(g1.mean(i)(0) == 0.0);
    CHECK(g1.cov(i)(0, 0) == 1.0);
  }

  const auto gh = g.convolved(0.5);
  CHECK(gh.mean(2)(0) == doctest::Approx(2.0 * std::sqrt(0.5)).epsilon(1e-15));
  CHECK(gh.cov(2)(0, 0) == doctest::Approx(0.5 * 0.09 + 0.5).epsilon(1e-15));
}

TEST_CASE("marginal projects means and covariances") {
  const auto g = fixtures::mix2d();
  const auto m1 = g.marginal(1);
  CHECK(m1.dim() == 1);
  CHECK(m1.n_components() == 4);
  CHECK(m1.mean(2)(0) == 2.0);
  CHECK(m1.cov(1)(0, 0) == 0.04);
  CHECK_THROWS_AS(g.marginal(2), std::invalid_argument);
}

TEST_CASE("peak log density bounds the density everywhere tested") {
  const auto g = fixtures::mix1d();
  const double bound = g.peak_log_density_bound();
  for (double xv = -4.0; xv <= 4.0; xv += 0.01) {
    VectorXd x(1);
    x << xv;
    CHECK(g.log_density(x) <= bound + 1e-12);
  }
}
