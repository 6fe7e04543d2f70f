#include "tild/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace tild {

Schedule Schedule::exponential_anneal(double T, double tau_cap) {
  if (!(T > 0.0)) throw std::invalid_argument("schedule: T must be positive");
  if (!(tau_cap > 0.0) || tau_cap > 1.0)
    throw std::invalid_argument("schedule: tau_cap must lie in (0, 1]");
  Schedule s;
  s.kind_ = Kind::exponential_anneal;
  s.T_ = T;
  s.cap_ = tau_cap;
  return s;
}

Schedule Schedule::frozen(double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("schedule: frozen tau must be >= 0");
  Schedule s;
  s.kind_ = Kind::frozen;
  s.frozen_tau_ = tau;
  return s;
}

double Schedule::tau_at(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("schedule: t must be >= 0");
  if (kind_ == Kind::frozen) return frozen_tau_;
  return std::min(std::exp(-t / T_), cap_);
}

StepPolicy StepPolicy::theory_max(double h_max) {
  StepPolicy p;
  p.kind = Kind::theory_max;
  p.h_max = h_max;
  p.validate();
  return p;
}

StepPolicy StepPolicy::square_summable(double h0, double p_exp, double h_max) {
  StepPolicy p;
  p.kind = Kind::square_summable;
  p.h0 = h0;
  p.p = p_exp;
  p.h_max = h_max;
  p.validate();
  return p;
}

void StepPolicy::validate() const {
  if (!(h0 > 0.0) || !(h_max > 0.0))
    throw std::invalid_argument("step policy: h0 and h_max must be positive");
  if (kind == Kind::square_summable && (!(p > 0.5) || p > 1.0))
    throw std::invalid_argument("step policy: p must lie in (1/2, 1]");
}

StepDecision next_step(const StepPolicy& policy, const AnnealingPath& path,
                       const Schedule& schedule, long k, double t_k) {
  if (k < 0) throw std::invalid_argument("next_step: k must be >= 0");
  constexpr double kShave = 1.0 - 1e-9;
  const double tau = std::min(schedule.tau_at(t_k), path.tau_max());
  const StepConstants c = path.step_constants(tau);
  const double theory = c.a / (c.L * c.L);
  double h;
  if (policy.kind == StepPolicy::Kind::theory_max) {
    h = std::min(theory, policy.h_max) * kShave;
  } else {
    h = std::min({policy.h0 / std::pow(static_cast<double>(k) + 1.0, policy.p),
                  theory * kShave, policy.h_max});
  }
  return {h, tau};
}

}  // namespace tild
