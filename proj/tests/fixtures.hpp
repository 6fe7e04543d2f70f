#pragma once

#include "tild/gmm.hpp"

// Shared benchmark targets for the test suite.
namespace fixtures {

// Three-mode 1D mixture: weights (.3,.4,.3), means (-2,0,2), std devs (.2,.1,.3).
inline tild::GaussianMixture mix1d() {
  std::vector<double> w{0.3, 0.4, 0.3};
  std::vector<tild::VectorXd> m(3, tild::VectorXd(1));
  m[0] << -2.0;
  m[1] << 0.0;
  m[2] << 2.0;
  std::vector<tild::MatrixXd> c(3, tild::MatrixXd(1, 1));
  c[0] << 0.04;
  c[1] << 0.01;
  c[2] << 0.09;
  return tild::GaussianMixture(w, std::move(m), std::move(c));
}

// Four-mode 2D mixture: weights (.2,.4,.2,.2), means on the unit square of
// side 2, per-axis std devs (.2,.2),(.1,.2),(.3,.1),(.1,.1).
inline tild::GaussianMixture mix2d() {
  std::vector<double> w{0.2, 0.4, 0.2, 0.2};
  std::vector<tild::VectorXd> m(4, tild::VectorXd(2));
  m[0] << 0.0, 0.0;
  m[1] << 2.0, 0.0;
  m[2] << 0.0, 2.0;
  m[3] << 2.0, 2.0;
  std::vector<tild::MatrixXd> c(4, tild::MatrixXd::Zero(2, 2).eval());
  c[0].diagonal() << 0.04, 0.04;
  c[1].diagonal() << 0.01, 0.04;
  c[2].diagonal() << 0.09, 0.01;
  c[3].diagonal() << 0.01, 0.01;
  return tild::GaussianMixture(w, std::move(m), std::move(c));
}

inline tild::GaussianMixture std_normal(int d) {
  std::vector<double> w{1.0};
  std::vector<tild::VectorXd> m{tild::VectorXd::Zero(d)};
  std::vector<tild::MatrixXd> c{tild::MatrixXd::Identity(d, d)};
  return tild::GaussianMixture(w, std::move(m), std::move(c));
}

}  // namespace fixtures
