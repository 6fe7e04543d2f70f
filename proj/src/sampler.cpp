#include "tild/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "tild/csv.hpp"
#include "tild/rng.hpp"

namespace tild {

// ----------------------------------------------------------- thread pool

ThreadPool::ThreadPool(int n_threads) : n_threads_(n_threads) {
  if (n_threads_ < 1) throw std::invalid_argument("ThreadPool: need at least one thread");
  blocks_.resize(static_cast<size_t>(n_threads_), {0, 0});
  workers_.reserve(static_cast<size_t>(n_threads_ - 1));
  for (int i = 0; i + 1 < n_threads_; ++i) workers_.emplace_back([this, i] { worker_main(i); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(m_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_main(int index) {
  std::uint64_t seen = 0;
  for (;;) {
    std::pair<long, long> block;
    const std::function<void(long, long)>* body;
    {
      std::unique_lock<std::mutex> lk(m_);
      cv_work_.wait(lk, [&] { return stop_ || epoch_ != seen; });
      if (stop_) return;
      seen = epoch_;
      block = blocks_[static_cast<size_t>(index) + 1];
      body = body_;
    }
    if (block.first < block.second) {
      try {
        (*body)(block.first, block.second);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m_);
        if (!error_) error_ = std::current_exception();
      }
    }
    {
      std::lock_guard<std::mutex> lk(m_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(long begin, long end,
                              const std::function<void(long, long)>& body) {
  if (end <= begin) return;
  const long count = end - begin;
  if (n_threads_ == 1 || count == 1) {
    body(begin, end);
    return;
  }
  const long chunk = count / n_threads_;
  const long rem = count % n_threads_;
  {
    std::lock_guard<std::mutex> lk(m_);
    long at = begin;
    for (int i = 0; i < n_threads_; ++i) {
      const long len = chunk + (i < rem ? 1 : 0);
      blocks_[static_cast<size_t>(i)] = {at, at + len};
      at += len;
    }
    body_ = &body;
    error_ = nullptr;
    pending_ = n_threads_ - 1;
    ++epoch_;
  }
  cv_work_.notify_all();
  const auto mine = blocks_[0];
  std::exception_ptr own_error;
  if (mine.first < mine.second) {
    try {
      body(mine.first, mine.second);
    } catch (...) {
      own_error = std::current_exception();
    }
  }
  {
    std::unique_lock<std::mutex> lk(m_);
    cv_done_.wait(lk, [&] { return pending_ == 0; });
    if (!error_ && own_error) error_ = own_error;
    if (error_) {
      auto err = error_;
      error_ = nullptr;
      lk.unlock();
      std::rethrow_exception(err);
    }
  }
}

// -------------------------------------------------------------- ensemble

Ensemble::Ensemble(long n_chains, int dim, std::uint64_t seed) : seed_(seed) {
  if (n_chains < 1) throw std::invalid_argument("Ensemble: n_chains must be >= 1");
  if (dim < 1) throw std::invalid_argument("Ensemble: dim must be >= 1");
  states_ = MatrixXd::Zero(n_chains, dim);
}

void Ensemble::init_point(const VectorXd& x) {
  if (x.size() != states_.cols()) throw std::invalid_argument("init_point: dimension mismatch");
  states_.rowwise() = x.transpose();
}

void Ensemble::init_gaussian(const VectorXd& mean, double scale) {
  if (mean.size() != states_.cols())
    throw std::invalid_argument("init_gaussian: dimension mismatch");
  if (!(scale >= 0.0)) throw std::invalid_argument("init_gaussian: scale must be >= 0");
  const int d = dim();
  for (long c = 0; c < n_chains(); ++c)
    for (int j = 0; j < d; ++j)
      states_(c, j) = mean(j) + scale * rng::normal(seed_, static_cast<std::uint64_t>(c),
                                                    rng::kInitStep,
                                                    static_cast<std::uint64_t>(j));
}

void Ensemble::advance(double h) {
  ++k_;
  // Neumaier compensated add keeps tau(t_k) stable across run lengths.
  const double sum = t_ + h;
  if (std::abs(t_) >= std::abs(h))
    t_comp_ += (t_ - sum) + h;
  else
    t_comp_ += (h - sum) + t_;
  t_ = sum;
}

void Ensemble::save_csv(const std::filesystem::path& file) const {
  csv::CsvFile out(file);
  const int d = dim();
  std::vector<std::string> cells(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) cells[static_cast<size_t>(j)] = "x" + std::to_string(j);
  out.write_row(cells);
  for (long c = 0; c < n_chains(); ++c) {
    for (int j = 0; j < d; ++j) cells[static_cast<size_t>(j)] = csv::format_double(states_(c, j));
    out.write_row(cells);
  }
  out.close();
}

void Ensemble::save_binary(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  const int d = dim();
  std::vector<double> row(static_cast<size_t>(d));
  for (long c = 0; c < n_chains(); ++c) {
    for (int j = 0; j < d; ++j) row[static_cast<size_t>(j)] = states_(c, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!out) throw std::runtime_error("binary snapshot write failed");
}

// --------------------------------------------------------------- stepping

void em_step(Ensemble& ensemble, const AnnealingPath& path, double h, double tau,
             ThreadPool* pool) {
  if (!(h >= 0.0)) throw std::invalid_argument("em_step: h must be >= 0");
  if (ensemble.dim() != path.dim()) throw std::invalid_argument("em_step: dimension mismatch");
  const auto eval = path.evaluator(tau);
  const double sqrt2h = std::sqrt(2.0 * h);
  const std::uint64_t seed = ensemble.seed();
  const auto k = static_cast<std::uint64_t>(ensemble.step_index());
  MatrixXd& X = ensemble.states();
  const int d = ensemble.dim();

  const std::function<void(long, long)> body = [&](long lo, long hi) {
    VectorXd x(d), g(d);
    for (long c = lo; c < hi; ++c) {
      x = X.row(c).transpose();
      eval->grad(x, g);
      bool ok = true;
      for (int j = 0; j < d; ++j) {
        const double z =
            rng::normal(seed, static_cast<std::uint64_t>(c), k, static_cast<std::uint64_t>(j));
        x(j) += -h * g(j) + sqrt2h * z;
        ok = ok && std::isfinite(x(j));
      }
      if (!ok)
        throw std::runtime_error("em_step: non-finite state at chain " + std::to_string(c) +
                                 ", step " + std::to_string(ensemble.step_index()));
      X.row(c) = x.transpose();
    }
  };
  if (pool != nullptr && pool->threads() > 1)
    pool->parallel_for(0, ensemble.n_chains(), body);
  else
    body(0, ensemble.n_chains());
  ensemble.advance(h);
}

VectorXd default_init_point(const GaussianMixture& target) {
  VectorXd x = target.mean(0);
  for (int i = 1; i < target.n_components(); ++i) x = x.cwiseMin(target.mean(i));
  x.array() -= 1.0;
  return x;
}

RunResult run(const AnnealingPath& path, const Schedule& schedule, const StepPolicy& policy,
              const RunPlan& plan, std::uint64_t seed, ThreadPool* pool) {
  if (plan.n_steps < 0) throw std::invalid_argument("run: n_steps must be >= 0");
  policy.validate();

  std::vector<long> snaps = plan.snapshot_iterations;
  if (snaps.empty()) snaps.push_back(plan.n_steps);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  if (snaps.front() < 0 || snaps.back() > plan.n_steps)
    throw std::invalid_argument("run: snapshot iterations must lie in [0, n_steps]");

  Ensemble e(plan.n_chains, path.dim(), seed);
  if (plan.init_kind == RunPlan::InitKind::gaussian) {
    e.init_gaussian(plan.init_mean, plan.init_scale);
  } else if (plan.init_point.size() > 0) {
    e.init_point(plan.init_point);
  } else {
    e.init_point(default_init_point(path.target()));
  }

  RunResult res;
  res.history.reserve(static_cast<size_t>(plan.n_steps));
  const auto snap = [&](long iter) {
    const double tau_now = std::min(schedule.tau_at(e.sim_time()), path.tau_max());
    res.snapshots.push_back({iter, tau_now, e.sim_time(), e.states()});
  };

  size_t si = 0;
  if (si < snaps.size() && snaps[si] == 0) {
    snap(0);
    ++si;
  }
  for (long k = 0; k < plan.n_steps; ++k) {
    if (e.sim_time() >= plan.max_sim_time) {
      res.stopped_by_time = true;
      break;
    }
    const StepDecision sd = next_step(policy, path, schedule, k, e.sim_time());
    try {
      em_step(e, path, sd.h, sd.tau, pool);
    } catch (const std::exception& ex) {
      throw std::runtime_error("run: " + std::string(ex.what()) + " (iteration " +
                               std::to_string(k) + ")");
    }
    const double t_post = e.sim_time();
    res.history.push_back({sd.h, std::min(schedule.tau_at(t_post), path.tau_max()), t_post});
    if (si < snaps.size() && snaps[si] == k + 1) {
      snap(k + 1);
      ++si;
    }
  }
  res.steps_executed = e.step_index();
  if (res.stopped_by_time &&
      (res.snapshots.empty() || res.snapshots.back().iteration != res.steps_executed))
    snap(res.steps_executed);
  return res;
}

}  // namespace tild
