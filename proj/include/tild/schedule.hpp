#pragma once

#include "tild/paths.hpp"

namespace tild {

// Annealing schedule tau(t). Exponential decay exp(-t/T) capped from above
// (the cap realizes clamping to a path's tau_max at small t), or frozen at a
// constant (ULA runs freeze at tau = 0).
class Schedule {
 public:
  enum class Kind { exponential_anneal, frozen };

  static Schedule exponential_anneal(double T, double tau_cap = 1.0);
  static Schedule frozen(double tau);

  double tau_at(double t) const;

  Kind kind() const { return kind_; }
  double half_scale() const { return T_; }
  double tau_cap() const { return cap_; }
  double frozen_tau() const { return frozen_tau_; }

 private:
  Schedule() = default;
  Kind kind_ = Kind::frozen;
  double T_ = 0.0;
  double cap_ = 1.0;
  double frozen_tau_ = 0.0;
};

struct StepPolicy {
  enum class Kind { theory_max, square_summable };

  Kind kind = Kind::theory_max;
  double h0 = 0.1;    // square_summable base
  double p = 1.0;     // square_summable exponent, in (1/2, 1]
  double h_max = 0.5; // global cap; a/L^2 alone can reach 1 on N(0,I)

  static StepPolicy theory_max(double h_max = 0.5);
  static StepPolicy square_summable(double h0, double p, double h_max = 0.5);
  void validate() const;
};

struct StepDecision {
  double h;
  double tau;
};

// tau_k = tau(t_k) clamped into the path domain; h_k stays strictly below the
// Lemma step bound a_tau/L_tau^2 via a (1 - 1e-9) shave.
StepDecision next_step(const StepPolicy& policy, const AnnealingPath& path,
                       const Schedule& schedule, long k, double t_k);

}  // namespace tild
