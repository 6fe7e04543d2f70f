#include "tild/verify.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tild/metrics.hpp"
#include "tild/oracles.hpp"
#include "tild/paths.hpp"
#include "tild/rng.hpp"
#include "tild/sampler.hpp"

namespace tild {

namespace {

GaussianMixture bench_mixture_1d() {
  std::vector<double> w{0.3, 0.4, 0.3};
  std::vector<VectorXd> m(3, VectorXd(1));
  m[0](0) = -2.0;
  m[1](0) = 0.0;
  m[2](0) = 2.0;
  std::vector<MatrixXd> c(3, MatrixXd(1, 1));
  c[0](0, 0) = 0.04;
  c[1](0, 0) = 0.01;
  c[2](0, 0) = 0.09;
  return GaussianMixture(w, m, c);
}

GaussianMixture bench_mixture_2d() {
  std::vector<double> w{0.2, 0.4, 0.2, 0.2};
  std::vector<VectorXd> m(4, VectorXd(2));
  m[0] << 0.0, 0.0;
  m[1] << 2.0, 0.0;
  m[2] << 0.0, 2.0;
  m[3] << 2.0, 2.0;
  std::vector<MatrixXd> c(4, MatrixXd::Zero(2, 2));
  const double s[4][2] = {{0.2, 0.2}, {0.1, 0.2}, {0.3, 0.1}, {0.1, 0.1}};
  for (int i = 0; i < 4; ++i) {
    c[static_cast<size_t>(i)](0, 0) = s[i][0] * s[i][0];
    c[static_cast<size_t>(i)](1, 1) = s[i][1] * s[i][1];
  }
  return GaussianMixture(w, m, c);
}

struct Check {
  std::string name;
  // Returns a detail string; throws or calls fail() on failure.
  std::function<std::string(bool&)> fn;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

double score_fd_error(const GaussianMixture& g, const std::vector<VectorXd>& points) {
  double worst = 0.0;
  for (const auto& x : points) {
    const VectorXd fd =
        oracles::fd_gradient([&](const VectorXd& y) { return g.potential(y); }, x, 1e-6);
    const VectorXd grad = -g.score(x);
    const double denom = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (grad - fd).lpNorm<Eigen::Infinity>() / denom);
  }
  return worst;
}

}  // namespace

bool run_verification(std::ostream& out) {
  const GaussianMixture g1 = bench_mixture_1d();
  const GaussianMixture g2 = bench_mixture_2d();

  std::vector<Check> checks;

  checks.push_back({"score vs finite differences, 1D", [&](bool& ok) {
    std::vector<VectorXd> pts;
    for (double v : {-2.7, -1.1, 0.2, 0.9, 2.4}) {
      VectorXd x(1);
      x(0) = v;
      pts.push_back(x);
    }
    const double err = score_fd_error(g1, pts);
    ok = err <= 1e-5;
    return "max rel err " + fmt(err);
  }});

  checks.push_back({"score vs finite differences, 2D", [&](bool& ok) {
    std::vector<VectorXd> pts;
    const double coords[5][2] = {{-0.5, 0.3}, {1.1, 1.9}, {2.2, -0.4}, {0.0, 1.0}, {1.5, 0.5}};
    for (const auto& c : coords) {
      VectorXd x(2);
      x << c[0], c[1];
      pts.push_back(x);
    }
    const double err = score_fd_error(g2, pts);
    ok = err <= 1e-5;
    return "max rel err " + fmt(err);
  }});

  checks.push_back({"prox vs exhaustive grid search", [&](bool& ok) {
    const auto daz = make_daz_path(g1);
    oracles::GridSpec grid;
    grid.axes.push_back({-4.0, 4.0, 1e-4});
    const auto U = [&](const VectorXd& y) { return g1.potential(y); };
    double worst = 0.0;
    const double cases[3][2] = {{0.7, 0.005}, {-2.5, 0.008}, {1.4, 0.002}};
    for (const auto& c : cases) {
      VectorXd x(1);
      x(0) = c[0];
      const VectorXd p = daz->prox(x, c[1]);
      const VectorXd pg = oracles::grid_prox(U, x, c[1], grid);
      worst = std::max(worst, std::fabs(p(0) - pg(0)));
    }
    ok = worst <= 2e-4;
    return "max |prox - grid| " + fmt(worst);
  }});

  checks.push_back({"convolution path vs Monte Carlo", [&](bool& ok) {
    const auto spec = metrics::HistogramSpec::default_for(g1.convolved(0.5));
    const double kl = oracles::mc_convolution_check(g1, 0.5, 20000, spec, 1234);
    ok = kl <= 0.05;
    return "histogram KL " + fmt(kl);
  }});

  checks.push_back({"Gaussian KL closed forms", [&](bool& ok) {
    VectorXd m0 = VectorXd::Zero(1), m1 = VectorXd::Ones(1);
    MatrixXd I = MatrixXd::Identity(1, 1);
    const double same = oracles::gaussian_kl(m0, I, m0, I);
    const double shifted = oracles::gaussian_kl(m1, I, m0, I);
    ok = std::fabs(same) <= 1e-12 && std::fabs(shifted - 0.5) <= 1e-12;
    return "KL(N0||N0) = " + fmt(same) + ", KL(N1||N0) = " + fmt(shifted);
  }});

  checks.push_back({"histogram KL vs closed form", [&](bool& ok) {
    VectorXd m1 = VectorXd::Ones(1);
    MatrixXd I = MatrixXd::Identity(1, 1);
    const GaussianMixture std_normal({1.0}, {VectorXd::Zero(1)}, {I});
    const GaussianMixture shifted({1.0}, {m1}, {I});
    const MatrixXd samples = std_normal.sample(20000, 99, 0);
    const double kl = metrics::histogram_kl(samples, shifted, metrics::HistogramSpec::default_for(shifted));
    ok = std::fabs(kl - 0.5) <= 0.1;
    return "estimate " + fmt(kl) + " vs closed form 0.5";
  }});

  checks.push_back({"sampler determinism across thread counts", [&](bool& ok) {
    const auto path = make_convolution_path(g1);
    const Schedule sched = Schedule::exponential_anneal(2.0);
    const StepPolicy policy = StepPolicy::theory_max();
    RunPlan plan;
    plan.n_chains = 8;
    plan.n_steps = 30;
    const RunResult a = run(*path, sched, policy, plan, 7);
    ThreadPool pool(3);
    const RunResult b = run(*path, sched, policy, plan, 7, &pool);
    ok = (a.snapshots.back().states.array() == b.snapshots.back().states.array()).all();
    return std::string(ok ? "bitwise identical final states" : "states differ");
  }});

  checks.push_back({"theory bound single-step closed form", [&](bool& ok) {
    const auto c_lsi = [](double tau) { return 1.5 + tau; };
    const metrics::StepRecord rec{0.01, 0.4, 0.01};
    const double got = metrics::theory_bound(c_lsi, std::span<const metrics::StepRecord>(&rec, 1),
                                             0.7, 0.3);
    const double want = 0.7 * std::exp(-2.0 * 0.01 / c_lsi(0.4)) + 0.3 * 0.01 * 0.01 + 0.3 * 0.4;
    ok = std::fabs(got - want) <= 1e-14;
    return "|got - closed form| = " + fmt(std::fabs(got - want));
  }});

  checks.push_back({"counter rng moments", [&](bool& ok) {
    double sum = 0.0, sum2 = 0.0;
    const long n = 20000;
    for (long i = 0; i < n; ++i) {
      const double z = rng::normal(2024, static_cast<std::uint64_t>(i), 0, 0);
      sum += z;
      sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    ok = std::fabs(mean) <= 0.03 && std::fabs(var - 1.0) <= 0.05;
    return "mean " + fmt(mean) + ", var " + fmt(var);
  }});

  out << "oracle verification\n";
  bool all = true;
  for (auto& c : checks) {
    bool ok = false;
    std::string detail;
    try {
      detail = c.fn(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    all = all && ok;
    out << "  [" << (ok ? "PASS" : "FAIL") << "] " << std::left << std::setw(42) << c.name
        << ' ' << detail << '\n';
  }
  out << (all ? "all checks passed\n" : "VERIFICATION FAILED\n");
  return all;
}

}  // namespace tild
