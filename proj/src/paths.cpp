#include "tild/paths.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tild {

VectorXd AnnealingPath::grad_potential(const VectorXd& x, double tau) const {
  VectorXd out;
  evaluator(tau)->grad(x, out);
  return out;
}

namespace {

class NegScoreEvaluator final : public PathEvaluator {
 public:
  explicit NegScoreEvaluator(const GaussianMixture& g) : g_(g) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    g_.score_into(x, out);
    out = -out;
  }

 private:
  const GaussianMixture& g_;
};

// Same, but owning (the convolution evaluator owns its transformed mixture).
class OwningNegScoreEvaluator final : public PathEvaluator {
 public:
  explicit OwningNegScoreEvaluator(GaussianMixture g) : g_(std::move(g)) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    g_.score_into(x, out);
    out = -out;
  }

 private:
  GaussianMixture g_;
};

class IdentityPath final : public AnnealingPath {
 public:
  explicit IdentityPath(GaussianMixture target)
      : target_(std::move(target)), constants_(target_.estimate_constants()) {}
  PathVariant variant() const override { return PathVariant::identity; }
  int dim() const override { return target_.dim(); }
  double tau_max() const override { return 1.0; }
  const GaussianMixture& target() const override { return target_; }
  StepConstants step_constants(double tau) const override {
    require_tau(tau);
    return {constants_.dissipativity_a, constants_.lipschitz};
  }
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override {
    require_tau(tau);
    return std::make_unique<NegScoreEvaluator>(target_);
  }

 private:
  GaussianMixture target_;
  TargetConstants constants_;
};

class TemperingEvaluator final : public PathEvaluator {
 public:
  TemperingEvaluator(const GaussianMixture& t, const GaussianMixture& r, double tau)
      : t_(t), r_(r), tau_(tau) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    thread_local VectorXd s1;
    t_.score_into(x, out);
    r_.score_into(x, s1);
    out = -(1.0 - tau_) * out - tau_ * s1;
  }

 private:
  const GaussianMixture& t_;
  const GaussianMixture& r_;
  double tau_;
};

class TemperingPath final : public AnnealingPath {
 public:
  TemperingPath(GaussianMixture target, GaussianMixture reference)
      : target_(std::move(target)), ref_(std::move(reference)) {
    if (ref_.dim() != target_.dim())
      throw std::invalid_argument("tempering: reference dimension mismatch");
    c0_ = target_.estimate_constants();
    c1_ = ref_.estimate_constants();
  }
  PathVariant variant() const override { return PathVariant::tempering; }
  int dim() const override { return target_.dim(); }
  double tau_max() const override { return 1.0; }
  const GaussianMixture& target() const override { return target_; }
  StepConstants step_constants(double tau) const override {
    require_tau(tau);
    return {std::min(c0_.dissipativity_a, c1_.dissipativity_a),
            (1.0 - tau) * c0_.lipschitz + tau * c1_.lipschitz};
  }
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override {
    require_tau(tau);
    return std::make_unique<TemperingEvaluator>(target_, ref_, tau);
  }
  const GaussianMixture& reference() const { return ref_; }

 private:
  GaussianMixture target_, ref_;
  TargetConstants c0_, c1_;
};

class DilationEvaluator final : public PathEvaluator {
 public:
  DilationEvaluator(const GaussianMixture& t, double tau)
      : t_(t), inv_s_(1.0 / std::sqrt(1.0 - tau)) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    thread_local VectorXd xs;
    xs = x * inv_s_;
    t_.score_into(xs, out);
    out = -inv_s_ * out;
  }

 private:
  const GaussianMixture& t_;
  double inv_s_;
};

class DilationPath final : public AnnealingPath {
 public:
  DilationPath(GaussianMixture target, double tau_max)
      : target_(std::move(target)), constants_(target_.estimate_constants()), tau_max_(tau_max) {
    if (!(tau_max_ > 0.0) || !(tau_max_ < 1.0))
      throw std::invalid_argument("dilation: tau_max must lie in (0,1)");
  }
  PathVariant variant() const override { return PathVariant::dilation; }
  int dim() const override { return target_.dim(); }
  double tau_max() const override { return tau_max_; }
  const GaussianMixture& target() const override { return target_; }
  StepConstants step_constants(double tau) const override {
    require_tau(tau);
    return {constants_.dissipativity_a, constants_.lipschitz / (1.0 - tau)};
  }
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override {
    require_tau(tau);
    return std::make_unique<DilationEvaluator>(target_, tau);
  }

 private:
  GaussianMixture target_;
  TargetConstants constants_;
  double tau_max_;
};

class ConvolutionPath final : public AnnealingPath {
 public:
  explicit ConvolutionPath(GaussianMixture target) : target_(std::move(target)) {}
  PathVariant variant() const override { return PathVariant::convolution; }
  int dim() const override { return target_.dim(); }
  double tau_max() const override { return 1.0; }
  const GaussianMixture& target() const override { return target_; }
  StepConstants step_constants(double tau) const override {
    require_tau(tau);
    // Component eigenvalues transform affinely: (1-tau)*lambda + tau.
    const double lmin = (1.0 - tau) * target_.lambda_min() + tau;
    const double lmax = (1.0 - tau) * target_.lambda_max() + tau;
    return {1.0 / lmax, 1.0 / lmin};
  }
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override {
    require_tau(tau);
    return std::make_unique<OwningNegScoreEvaluator>(target_.convolved(tau));
  }

 private:
  GaussianMixture target_;
};

}  // namespace

// ---------------------------------------------------------------- DAZ path

namespace {

struct GdResult {
  VectorXd y;
  double value;
  double grad_norm;
  bool converged;
  int iterations;
};

// Gradient of g(y) = U(y) + |x-y|^2/(2 tau).
inline void inner_grad(const GaussianMixture& t, const VectorXd& x, double inv_tau,
                       const VectorXd& y, VectorXd& out) {
  t.score_into(y, out);
  out = -out + inv_tau * (y - x);
}

inline double inner_value(const GaussianMixture& t, const VectorXd& x, double inv_tau,
                          const VectorXd& y) {
  return t.potential(y) + 0.5 * inv_tau * (x - y).squaredNorm();
}

GdResult descend(const GaussianMixture& t, const VectorXd& x, double tau,
                 const VectorXd& y0, const ProxSettings& s, double L) {
  const double inv_tau = 1.0 / tau;
  const double eta0 = 1.0 / (inv_tau + L);
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  VectorXd y = y0, g, trial;
  double val = inner_value(t, x, inv_tau, y);
  for (int it = 0; it < s.max_iterations; ++it) {
    inner_grad(t, x, inv_tau, y, g);
    const double gn = g.norm();
    if (gn <= s.tolerance) return {y, val, gn, true, it};
    if (s.step_rule == ProxSettings::StepRule::fixed) {
      trial = y - eta0 * g;
      if (trial == y) return {y, val, gn, true, it};  // double-precision fixed point
      y.swap(trial);
      val = inner_value(t, x, inv_tau, y);
    } else {
      // Once the guaranteed decrease drops below the rounding noise of the
      // objective, Armijo progress can no longer be verified; the iterate is
      // the numerical minimum even if |g| sits above `tolerance`.
      if (0.5 * eta0 * gn * gn <= 16.0 * kEps * std::max(1.0, std::fabs(val)))
        return {y, val, gn, true, it};
      double eta = eta0;
      bool accepted = false;
      for (int half = 0; half < 60; ++half) {
        trial = y - eta * g;
        const double tval = inner_value(t, x, inv_tau, trial);
        if (tval <= val - 0.5 * eta * gn * gn) {
          y.swap(trial);
          val = tval;
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) return {y, val, gn, false, it};
    }
  }
  inner_grad(t, x, inv_tau, y, g);
  const double gn = g.norm();
  return {y, val, gn, gn <= s.tolerance, s.max_iterations};
}

class DazEvaluator final : public PathEvaluator {
 public:
  DazEvaluator(const DazPath& p, double tau) : p_(p), tau_(tau) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    out = (x - p_.prox(x, tau_)) / tau_;
  }

 private:
  const DazPath& p_;
  double tau_;
};

}  // namespace

DazPath::DazPath(GaussianMixture target, ProxSettings settings, double tau_max_value)
    : target_(std::move(target)), settings_(settings) {
  const TargetConstants c = target_.estimate_constants();
  a_ = c.dissipativity_a;
  L_ = c.lipschitz;
  moreau_limit_ = std::min(1.0 / c.weak_convexity, 1.0 / L_);
  tau_max_ = (tau_max_value < 0.0) ? 0.1 * moreau_limit_ : tau_max_value;
  if (!(tau_max_ > 0.0) || !(tau_max_ < moreau_limit_))
    throw std::invalid_argument("daz: tau_max must lie in (0, min(1/alpha, 1/L))");
  if (!(settings_.tolerance > 0.0) || settings_.max_iterations < 1)
    throw std::invalid_argument("daz: invalid prox settings");
  u_lower_bound_ = -target_.peak_log_density_bound();
}

StepConstants DazPath::step_constants(double tau) const {
  require_tau(tau);
  const double f = 1.0 - tau * L_;
  return {std::max(a_ * f, 0.5 * a_), L_ / f};
}

std::unique_ptr<const PathEvaluator> DazPath::evaluator(double tau) const {
  require_tau(tau);
  if (tau == 0.0) return std::make_unique<NegScoreEvaluator>(target_);
  return std::make_unique<DazEvaluator>(*this, tau);
}

VectorXd DazPath::prox(const VectorXd& x, double tau) const {
  // Strong convexity of the inner objective needs tau < min(1/alpha, 1/L),
  // independent of the schedule cap tau_max.
  if (!(tau > 0.0) || !(tau < moreau_limit_))
    throw std::domain_error("prox: tau must lie in (0, min(1/alpha, 1/L))");
  if (x.size() != target_.dim()) throw std::invalid_argument("prox: dimension mismatch");

  GdResult best = descend(target_, x, tau, x, settings_, L_);
  if (!best.converged) {
    std::ostringstream msg;
    msg << "prox failed to converge from warm start (tau=" << tau
        << ", final |grad|=" << best.grad_norm << ", iterations=" << best.iterations << ")";
    throw ProxError(msg.str(), best.grad_norm);
  }

  // Any global minimizer satisfies |y-x| <= sqrt(2 tau (g_best - U_lb)); restart
  // from every component mean within that radius plus a basin-width margin.
  const double margin = 3.0 * std::sqrt(target_.lambda_max());
  for (int i = 0; i < target_.n_components(); ++i) {
    const double r =
        std::sqrt(2.0 * tau * std::max(0.0, best.value - u_lower_bound_)) + margin;
    if ((target_.mean(i) - x).norm() > r) continue;
    GdResult cand = descend(target_, x, tau, target_.mean(i), settings_, L_);
    if (!cand.converged) {
      std::ostringstream msg;
      msg << "prox failed to converge from component mean " << i << " (tau=" << tau
          << ", final |grad|=" << cand.grad_norm << ")";
      throw ProxError(msg.str(), cand.grad_norm);
    }
    if (cand.value < best.value) best = cand;
  }
  return best.y;
}

double DazPath::moreau_envelope(const VectorXd& x, double tau) const {
  const VectorXd y = prox(x, tau);
  return target_.potential(y) + (x - y).squaredNorm() / (2.0 * tau);
}

// ---------------------------------------------------------- posterior path

namespace {

class PosteriorEvaluator final : public PathEvaluator {
 public:
  PosteriorEvaluator(std::unique_ptr<const PathEvaluator> inner,
                     const LinearGaussianLikelihood& lik, double inv_sigma2)
      : inner_(std::move(inner)), lik_(lik), inv_sigma2_(inv_sigma2) {}
  void grad(const VectorXd& x, VectorXd& out) const override {
    inner_->grad(x, out);
    thread_local VectorXd resid;
    resid.noalias() = lik_.A * x;
    resid -= lik_.y;
    out.noalias() += inv_sigma2_ * (lik_.A.transpose() * resid);
  }

 private:
  std::unique_ptr<const PathEvaluator> inner_;
  const LinearGaussianLikelihood& lik_;
  double inv_sigma2_;
};

class PosteriorPath final : public AnnealingPath {
 public:
  PosteriorPath(std::shared_ptr<const AnnealingPath> inner, LinearGaussianLikelihood lik)
      : inner_(std::move(inner)), lik_(std::move(lik)) {
    if (!inner_) throw std::invalid_argument("posterior: inner path required");
    if (lik_.A.cols() != inner_->dim() || lik_.y.size() != lik_.A.rows())
      throw std::invalid_argument("posterior: likelihood dimensions inconsistent");
    if (!(lik_.noise_sigma > 0.0))
      throw std::invalid_argument("posterior: noise_sigma must be positive");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lik_.A.transpose() * lik_.A);
    ata_norm_ = eig.eigenvalues().maxCoeff();
    inv_sigma2_ = 1.0 / (lik_.noise_sigma * lik_.noise_sigma);
  }
  PathVariant variant() const override { return PathVariant::posterior; }
  int dim() const override { return inner_->dim(); }
  double tau_max() const override { return inner_->tau_max(); }
  const GaussianMixture& target() const override { return inner_->target(); }
  StepConstants step_constants(double tau) const override {
    const StepConstants c = inner_->step_constants(tau);
    return {c.a, c.L + inv_sigma2_ * ata_norm_};
  }
  std::unique_ptr<const PathEvaluator> evaluator(double tau) const override {
    return std::make_unique<PosteriorEvaluator>(inner_->evaluator(tau), lik_, inv_sigma2_);
  }

 private:
  std::shared_ptr<const AnnealingPath> inner_;
  LinearGaussianLikelihood lik_;
  double ata_norm_;
  double inv_sigma2_;
};

}  // namespace

std::unique_ptr<AnnealingPath> make_identity_path(GaussianMixture target) {
  return std::make_unique<IdentityPath>(std::move(target));
}

GaussianMixture make_default_reference(const GaussianMixture& target) {
  const int d = target.dim();
  std::vector<double> w{1.0};
  std::vector<VectorXd> m{VectorXd::Zero(d)};
  std::vector<MatrixXd> c{target.lambda_max() * MatrixXd::Identity(d, d)};
  return GaussianMixture(w, std::move(m), std::move(c));
}

std::unique_ptr<AnnealingPath> make_tempering_path(GaussianMixture target,
                                                   GaussianMixture reference) {
  return std::make_unique<TemperingPath>(std::move(target), std::move(reference));
}

std::unique_ptr<AnnealingPath> make_dilation_path(GaussianMixture target, double tau_max) {
  return std::make_unique<DilationPath>(std::move(target), tau_max);
}

std::unique_ptr<DazPath> make_daz_path(GaussianMixture target, ProxSettings settings,
                                       double tau_max) {
  return std::make_unique<DazPath>(std::move(target), settings, tau_max);
}

std::unique_ptr<AnnealingPath> make_convolution_path(GaussianMixture target) {
  return std::make_unique<ConvolutionPath>(std::move(target));
}

std::unique_ptr<AnnealingPath> make_posterior_path(std::shared_ptr<const AnnealingPath> inner,
                                                   LinearGaussianLikelihood likelihood) {
  return std::make_unique<PosteriorPath>(std::move(inner), std::move(likelihood));
}

}  // namespace tild
