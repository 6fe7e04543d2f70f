// Acceptance gate: ten release criteria, one [PASS]/[FAIL] line each.
// Standalone binary (no test framework); exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "tild/config.hpp"
#include "tild/experiment.hpp"
#include "tild/metrics.hpp"
#include "tild/oracles.hpp"
#include "tild/paths.hpp"
#include "tild/rng.hpp"
#include "tild/sampler.hpp"
#include "tild/schedule.hpp"

namespace {

using tild::AnnealingPath;
using tild::GaussianMixture;
using tild::MatrixXd;
using tild::RunPlan;
using tild::RunResult;
using tild::Schedule;
using tild::StepPolicy;
using tild::VectorXd;

int g_failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void run_criterion(int id, const char* title, double budget_s,
                   const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += "over time budget";
    o.pass = false;
  }
  std::printf("[%s] criterion %2d: %s (%s) [%.1fs, budget %gs]\n", o.pass ? "PASS" : "FAIL",
              id, title, o.detail.c_str(), secs, budget_s);
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

// max-norm gap relative to max(1, |ref|_inf)
double rel_gap(const VectorXd& g, const VectorXd& ref) {
  return (g - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
}

// Uniform points over the component-mean box padded by 4 sqrt(lambda_max).
std::vector<VectorXd> random_points(const GaussianMixture& t, int count, std::uint64_t seed) {
  const int d = t.dim();
  VectorXd lo = VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  VectorXd hi = -lo;
  for (int i = 0; i < t.n_components(); ++i) {
    lo = lo.cwiseMin(t.mean(i));
    hi = hi.cwiseMax(t.mean(i));
  }
  const double pad = 4.0 * std::sqrt(t.lambda_max());
  std::vector<VectorXd> pts(static_cast<size_t>(count), VectorXd(d));
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < d; ++j)
      pts[static_cast<size_t>(i)](j) =
          lo(j) - pad +
          (hi(j) - lo(j) + 2.0 * pad) *
              tild::rng::uniform(seed, static_cast<std::uint64_t>(i), 0,
                                 static_cast<std::uint64_t>(j));
  return pts;
}

// --- criterion 1: drifts vs central differences of closed-form potentials ---

Outcome criterion1() {
  double worst_closed = 0.0, worst_daz = 0.0;
  for (const GaussianMixture& target : {fixtures::mix1d(), fixtures::mix2d()}) {
    const auto pts = random_points(target, 100, 100 + static_cast<std::uint64_t>(target.dim()));
    const GaussianMixture reference = tild::make_default_reference(target);

    using Pot = std::function<double(const VectorXd&, double)>;
    struct Closed {
      std::unique_ptr<AnnealingPath> path;
      Pot potential;
    };
    std::vector<Closed> closed;
    closed.push_back({tild::make_identity_path(target),
                      [&](const VectorXd& x, double) { return target.potential(x); }});
    closed.push_back({tild::make_tempering_path(target, reference),
                      [&](const VectorXd& x, double tau) {
                        return (1.0 - tau) * target.potential(x) + tau * reference.potential(x);
                      }});
    closed.push_back({tild::make_dilation_path(target, 0.99),
                      [&](const VectorXd& x, double tau) {
                        return target.potential(x / std::sqrt(1.0 - tau));
                      }});
    closed.push_back({tild::make_convolution_path(target),
                      [&](const VectorXd& x, double tau) {
                        return target.convolved(tau).potential(x);
                      }});
    for (const auto& c : closed) {
      const double tm = c.path->tau_max();
      for (const double tau : {0.0, 0.25, 0.5, 0.9 * tm}) {
        for (const auto& x : pts) {
          const VectorXd g = c.path->grad_potential(x, tau);
          const VectorXd fd = tild::oracles::fd_gradient(
              [&](const VectorXd& y) { return c.potential(y, tau); }, x, 1e-6);
          worst_closed = std::max(worst_closed, rel_gap(g, fd));
        }
      }
    }

    // daz: tau scaled into its cap; reference is the Moreau envelope itself.
    const auto daz = tild::make_daz_path(target);
    const double tm = daz->tau_max();
    for (const double tau : {0.0, 0.25 * tm, 0.5 * tm, 0.9 * tm}) {
      for (const auto& x : pts) {
        const VectorXd g = daz->grad_potential(x, tau);
        const VectorXd fd =
            (tau == 0.0)
                ? tild::oracles::fd_gradient(
                      [&](const VectorXd& y) { return target.potential(y); }, x, 1e-6)
                : tild::oracles::fd_gradient(
                      [&](const VectorXd& y) { return daz->moreau_envelope(y, tau); }, x, 1e-5);
        worst_daz = std::max(worst_daz, rel_gap(g, fd));
      }
    }
  }
  Outcome o;
  o.pass = worst_closed <= 1e-5 && worst_daz <= 1e-4;
  o.detail = "max rel err " + num(worst_closed) + " closed-form (tol 1e-5), " + num(worst_daz) +
             " daz envelope (tol 1e-4); d=1,2 x 100 pts x 4 tau";
  return o;
}

// --- criterion 2: prox vs exhaustive grid minimization ---

Outcome criterion2() {
  const GaussianMixture target = fixtures::mix1d();
  const auto daz = tild::make_daz_path(target);
  const double limit = 0.01;  // 1/L for this target; prox domain is (0, limit)
  const tild::oracles::GridSpec grid{{{-4.5, 4.5, 1e-4}}};
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    VectorXd x(1);
    x << -3.0 + 6.0 * tild::rng::uniform(202, static_cast<std::uint64_t>(i), 0, 0);
    const double tau =
        limit * (0.05 + 0.9 * tild::rng::uniform(202, static_cast<std::uint64_t>(i), 1, 0));
    const VectorXd p = daz->prox(x, tau);
    const VectorXd pg = tild::oracles::grid_prox(
        [&](const VectorXd& y) { return target.potential(y); }, x, tau, grid);
    worst = std::max(worst, (p - pg).cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = worst <= 2e-4;
  o.detail = "20 random (x, tau), grid res 1e-4: max |prox - grid argmin| = " + num(worst) +
             " (tol 2e-4)";
  return o;
}

// --- criterion 3: convolution law vs Monte Carlo draws ---

Outcome criterion3() {
  const GaussianMixture target = fixtures::mix1d();
  double worst = 0.0;
  std::string per;
  for (const double tau : {0.1, 0.5, 0.9}) {
    const auto spec = tild::metrics::HistogramSpec::default_for(target.convolved(tau));
    const double kl = tild::oracles::mc_convolution_check(target, tau, 100000, spec, 7);
    worst = std::max(worst, kl);
    per += (per.empty() ? "" : ", ") + std::string("tau ") + num(tau) + ": " + num(kl);
  }
  Outcome o;
  o.pass = worst <= 0.01;
  o.detail = "KL(1e5 MC draws || analytic law) " + per + " (tol 0.01)";
  return o;
}

// --- criterion 4: ULA on N(0,1) hits the Euler-Maruyama fixed point ---

Outcome criterion4() {
  const GaussianMixture target = fixtures::std_normal(1);
  const auto path = tild::make_identity_path(target);
  const Schedule sched = Schedule::frozen(0.0);
  const StepPolicy policy = StepPolicy::theory_max(0.1);
  RunPlan plan;
  plan.n_chains = 5000;
  plan.n_steps = 5000;
  for (long k = 4000; k <= 5000; k += 50) plan.snapshot_iterations.push_back(k);
  const RunResult r = tild::run(*path, sched, policy, plan, 2024);

  const double h = r.history.front().h;
  double sum = 0.0, sumsq = 0.0;
  long n = 0;
  for (const auto& s : r.snapshots) {
    sum += s.states.sum();
    sumsq += s.states.array().square().sum();
    n += s.states.size();
  }
  const double mean = sum / static_cast<double>(n);
  const double var =
      (sumsq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  // OU chain X <- (1-h)X + sqrt(2h)Z equilibrates at variance 2/(2-h), not 1.
  const double fixed_point = 2.0 / (2.0 - h);
  const double ratio = var / fixed_point;
  Outcome o;
  o.pass = std::fabs(mean) <= 0.05 && ratio >= 0.99 && ratio <= 1.12;
  o.detail = "h=" + num(h) + ", pooled mean " + num(mean) + " (tol 0.05), var/" +
             num(fixed_point) + " = " + num(ratio) + " (window [0.99, 1.12])";
  return o;
}

// --- criterion 5/6 shared state: the three-mode benchmark at T=2 ---

struct BenchmarkState {
  bool ready = false;
  std::map<std::string, double> kl_snap;   // iteration 1000
  std::map<std::string, double> kl_final;  // iteration 40000
};
BenchmarkState g_bench;

Outcome criterion5() {
  const GaussianMixture target = fixtures::mix1d();
  const auto spec = tild::metrics::HistogramSpec::default_for(target);
  const double T = 2.0;
  const StepPolicy policy = StepPolicy::theory_max();

  struct MethodDef {
    std::string name;
    std::unique_ptr<AnnealingPath> path;
  };
  std::vector<MethodDef> defs;
  defs.push_back({"ULA", tild::make_identity_path(target)});
  defs.push_back({"dilation", tild::make_dilation_path(target, 0.99)});
  defs.push_back({"tempering",
                  tild::make_tempering_path(target, tild::make_default_reference(target))});
  defs.push_back({"convolution", tild::make_convolution_path(target)});
  defs.push_back({"DAZ", tild::make_daz_path(target)});

  RunPlan plan;
  plan.n_chains = 2000;
  plan.n_steps = 40000;
  plan.snapshot_iterations = {1000, 40000};

  std::map<std::string, MatrixXd> finals;
  for (const auto& def : defs) {
    const Schedule sched = (def.name == "ULA")
                               ? Schedule::frozen(0.0)
                               : Schedule::exponential_anneal(
                                     T, std::min(1.0, def.path->tau_max()));
    const RunResult r = tild::run(*def.path, sched, policy, plan, 42);
    g_bench.kl_snap[def.name] =
        tild::metrics::histogram_kl(r.snapshots.at(0).states, target, spec);
    g_bench.kl_final[def.name] =
        tild::metrics::histogram_kl(r.snapshots.at(1).states, target, spec);
    if (def.name == "ULA" || def.name == "convolution")
      finals[def.name] = r.snapshots.at(1).states;
  }
  g_bench.ready = true;

  // fraction of chains within 2 sigma of each component mean
  const auto mode_fractions = [&](const MatrixXd& st) {
    std::vector<double> f;
    for (int i = 0; i < target.n_components(); ++i) {
      const double m = target.mean(i)(0);
      const double s = std::sqrt(target.cov(i)(0, 0));
      f.push_back(((st.col(0).array() - m).abs() <= 2.0 * s).cast<double>().mean());
    }
    return f;
  };
  const auto fu = mode_fractions(finals.at("ULA"));
  const auto fc = mode_fractions(finals.at("convolution"));
  const double ula_min = *std::min_element(fu.begin(), fu.end());
  const double conv_min = *std::min_element(fc.begin(), fc.end());

  const double kl_ula = g_bench.kl_final.at("ULA");
  const double kl_conv = g_bench.kl_final.at("convolution");
  const double kl_daz = g_bench.kl_final.at("DAZ");
  const bool conv_beats = kl_conv < kl_ula;
  const bool daz_beats = kl_daz < kl_ula;
  const bool ula_misses = ula_min < 0.01;
  const bool conv_covers = conv_min >= 0.05;

  Outcome o;
  o.pass = conv_beats && daz_beats && ula_misses && conv_covers;
  o.detail = "convolution<ULA " + std::string(conv_beats ? "ok" : "FAILED") + " (" +
             num(kl_conv) + " vs " + num(kl_ula) + "); DAZ<ULA " +
             (daz_beats ? "ok" : "FAILED") + " (" + num(kl_daz) + " vs " + num(kl_ula) +
             (kl_daz == kl_ula ? ", exact tie: the theory-capped daz path collapses onto "
                                 "ULA as tau -> 0 and same-seed noise couples the chains"
                               : "") +
             "); ULA min mode mass " + num(ula_min) + " (<0.01 " +
             (ula_misses ? "ok" : "FAILED") + "); convolution min " + num(conv_min) +
             " (>=0.05 " + (conv_covers ? "ok" : "FAILED") + ")";
  return o;
}

// --- criterion 6: exact-sample KL floor sits below every method ---

Outcome criterion6() {
  if (!g_bench.ready) return {false, "benchmark state unavailable (criterion 5 aborted)"};
  const GaussianMixture target = fixtures::mix1d();
  const auto spec = tild::metrics::HistogramSpec::default_for(target);
  const MatrixXd exact = target.sample(2000, 42, 0xfffffffffffffffdull);
  const double base = tild::metrics::histogram_kl(exact, target, spec);

  bool below_all = base > 0.0;
  double min_kl = std::numeric_limits<double>::infinity();
  for (const auto& [name, kl] : g_bench.kl_snap) {
    below_all = below_all && base < kl;
    min_kl = std::min(min_kl, kl);
  }
  Outcome o;
  o.pass = below_all;
  o.detail = "exact-sample KL " + num(base) + " > 0 and < min method KL " + num(min_kl) +
             " at iteration 1000";
  return o;
}

// --- criterion 7: posterior path adds exactly the likelihood term ---

Outcome criterion7() {
  double worst_grad = 0.0;
  double worst_lip = -std::numeric_limits<double>::infinity();

  const auto check_case = [&](std::shared_ptr<const AnnealingPath> inner, const MatrixXd& A,
                              std::uint64_t chain_base) {
    const double sigma = 0.7;
    const int d = inner->dim();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(A.transpose() * A);
    const double increment = es.eigenvalues().maxCoeff() / (sigma * sigma);
    for (int i = 0; i < 10; ++i) {
      const std::uint64_t c = chain_base + static_cast<std::uint64_t>(i);
      VectorXd y(A.rows());
      for (long r = 0; r < A.rows(); ++r)
        y(r) = -1.0 + 2.0 * tild::rng::uniform(707, c, 0, static_cast<std::uint64_t>(r));
      VectorXd x(d);
      for (int j = 0; j < d; ++j)
        x(j) = -3.0 + 6.0 * tild::rng::uniform(707, c, 1, static_cast<std::uint64_t>(j));

      const auto post = tild::make_posterior_path(inner, {A, y, sigma});
      for (const double tau : {0.0, 0.3, 0.9}) {
        const VectorXd gp = post->grad_potential(x, tau);
        const VectorXd gi = inner->grad_potential(x, tau);
        const VectorXd expect = A.transpose() * (A * x - y) / (sigma * sigma);
        worst_grad = std::max(worst_grad, rel_gap(gp - gi, expect));
        const double lp = post->step_constants(tau).L;
        const double li = inner->step_constants(tau).L;
        worst_lip = std::max(worst_lip, lp - (li + increment));
      }
    }
  };

  MatrixXd a1(1, 1);
  a1 << 0.8;
  check_case(tild::make_identity_path(fixtures::mix1d()), a1, 0);
  MatrixXd a2(1, 2);
  a2 << 1.0, -0.5;
  check_case(tild::make_convolution_path(fixtures::mix2d()), a2, 100);

  Outcome o;
  o.pass = worst_grad <= 1e-12 && worst_lip <= 1e-9;
  o.detail = "20 random (x, y): max grad-difference error " + num(worst_grad) +
             " (tol 1e-12), Lipschitz excess " + num(worst_lip) + " (tol 1e-9)";
  return o;
}

// --- criterion 8: step bound strictness, monotonicity, sum growth ---

Outcome criterion8() {
  const auto conv = tild::make_convolution_path(fixtures::mix1d());
  const Schedule sched = Schedule::exponential_anneal(2.0, 1.0);
  bool strict = true, monotone = true, under_sequence = true;
  for (const StepPolicy& policy :
       {StepPolicy::theory_max(), StepPolicy::square_summable(0.1, 0.7)}) {
    double t = 0.0, prev_tau = std::numeric_limits<double>::infinity();
    for (long k = 0; k < 2000; ++k) {
      const auto sd = tild::next_step(policy, *conv, sched, k, t);
      const auto c = conv->step_constants(sd.tau);
      strict = strict && sd.h < c.a / (c.L * c.L) && sd.h <= policy.h_max;
      monotone = monotone && sd.tau <= prev_tau;
      if (policy.kind == StepPolicy::Kind::square_summable)
        under_sequence = under_sequence &&
                         sd.h <= policy.h0 / std::pow(static_cast<double>(k) + 1.0, policy.p);
      prev_tau = sd.tau;
      t += sd.h;
    }
  }

  // Partial sums of h_k = h0/(k+1)^p on an uncapped path: sum diverges
  // (polynomially for p<1, logarithmically at p=1), squared sum stays bounded.
  const auto ident = tild::make_identity_path(fixtures::std_normal(1));
  const Schedule frozen = Schedule::frozen(0.0);
  const auto growth = [&](double p) {
    const StepPolicy policy = StepPolicy::square_summable(0.1, p);
    double s = 0.0, q = 0.0, s100 = 0.0, q100 = 0.0, t = 0.0;
    for (long k = 0; k < 100000; ++k) {
      const auto sd = tild::next_step(policy, *ident, frozen, k, t);
      s += sd.h;
      q += sd.h * sd.h;
      t += sd.h;
      if (k == 99) {
        s100 = s;
        q100 = q;
      }
    }
    return std::array<double, 2>{s / s100, q / q100};
  };
  const auto g06 = growth(0.6);
  const auto g10 = growth(1.0);
  const bool diverges = g06[0] > 10.0 && g10[0] > 1.9;
  const bool bounded = g06[1] < 2.0 && g10[1] < 2.0;

  Outcome o;
  o.pass = strict && monotone && under_sequence && diverges && bounded;
  o.detail = "h < a/L^2 strict, tau nonincreasing; sum growth 1e2->1e5 steps: p=0.6 x" +
             num(g06[0]) + " (>10), p=1 x" + num(g10[0]) +
             " (log-rate, >1.9); squared sums x" + num(g06[1]) + ", x" + num(g10[1]) +
             " (<2)";
  return o;
}

// --- criterion 9: bound evaluator vs literal quadratic-time reference ---

double naive_bound(const std::function<double(double)>& c_lsi,
                   const std::vector<tild::metrics::StepRecord>& recs, double kl0, double c,
                   double tau_final) {
  const size_t n = recs.size();
  const auto D = [&](size_t i) { return 2.0 * recs[i].h / c_lsi(recs[i].tau); };
  double s0 = 0.0;
  for (size_t j = 0; j < n; ++j) s0 += D(j);
  double total = kl0 * std::exp(-s0);
  for (size_t i = 1; i < n; ++i) {
    double s = 0.0;
    for (size_t j = i; j < n; ++j) s += D(j);
    total += c * std::fabs(recs[i].tau - recs[i - 1].tau) * std::exp(-s);
  }
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t j = i + 1; j < n; ++j) s += D(j);
    total += c * recs[i].h * recs[i].h * std::exp(-s);
  }
  return total + c * tau_final;
}

Outcome criterion9() {
  const auto clsi = tild::metrics::convolution_clsi(fixtures::mix1d());
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    std::vector<tild::metrics::StepRecord> recs(1000);
    double t = 0.0, tau = 1.0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
      const double h = 0.002 + 0.008 * tild::rng::uniform(909, s, i, 0);
      tau *= 0.88 + 0.12 * tild::rng::uniform(909, s, i, 1);
      t += h;
      recs[i] = {h, tau, t};
    }
    const double kl0 = 3.7, c = 1.3, tf = recs.back().tau;
    const double impl = tild::metrics::theory_bound(clsi, recs, kl0, c, tf);
    const double ref = naive_bound(clsi, recs, kl0, c, tf);
    worst = std::max(worst, std::fabs(impl - ref) / std::max(std::fabs(ref), 1e-300));
  }
  Outcome o;
  o.pass = worst <= 1e-12;
  o.detail = "5 random schedules, K=1000: max rel gap " + num(worst) + " (tol 1e-12)";
  return o;
}

// --- criterion 10: artifacts byte-stable across thread counts ---

Outcome criterion10() {
  namespace fs = std::filesystem;
  tild::ExperimentConfig cfg = tild::load_config(TILD_SOURCE_DIR "/configs/smoke.cfg");
  cfg.quiet = true;
  const fs::path base = fs::temp_directory_path() / "tild_acceptance_c10";
  std::error_code ec;
  fs::remove_all(base, ec);

  const auto run_with = [&](const char* tag, int threads, bool parallel) {
    tild::ExperimentConfig c = cfg;
    c.out_dir = base / tag;
    c.threads = threads;
    c.parallel_cells = parallel;
    tild::run_experiment(c);
    return c.out_dir;
  };
  const fs::path a = run_with("t1", 1, false);
  const fs::path b = run_with("t8", 8, false);
  const fs::path c = run_with("t8_cells", 8, true);

  std::vector<fs::path> rels;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      rels.push_back(fs::relative(e.path(), a));
  std::sort(rels.begin(), rels.end());

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  bool identical = !rels.empty();
  for (const auto& r : rels) {
    const std::string bytes = slurp(a / r);
    identical = identical && !bytes.empty() && bytes == slurp(b / r) && bytes == slurp(c / r);
  }
  fs::remove_all(base, ec);

  Outcome o;
  o.pass = identical && rels.size() >= 3;
  o.detail = std::to_string(rels.size()) +
             " csv files byte-identical for threads=1, threads=8, and parallel cells";
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance gate: 10 criteria\n");
  run_criterion(1, "path drifts match finite differences of closed-form potentials", 10.0,
                criterion1);
  run_criterion(2, "prox matches exhaustive grid minimization", 30.0, criterion2);
  run_criterion(3, "convolution law matches Monte Carlo draws", 20.0, criterion3);
  run_criterion(4, "ULA on N(0,1) reaches the discrete fixed point", 30.0, criterion4);
  run_criterion(5, "annealing beats ULA on the three-mode target", 600.0, criterion5);
  run_criterion(6, "exact-sample KL floor separates from all methods", 10.0, criterion6);
  run_criterion(7, "posterior path adds the likelihood term exactly", 5.0, criterion7);
  run_criterion(8, "step sizes respect the stability bound; sums behave", 5.0, criterion8);
  run_criterion(9, "bound evaluator matches quadratic-time reference", 5.0, criterion9);
  run_criterion(10, "artifacts byte-stable across thread counts", 120.0, criterion10);

  if (g_failures == 0) {
    std::printf("acceptance: all 10 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
