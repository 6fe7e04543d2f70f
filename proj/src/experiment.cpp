#include "tild/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "tild/csv.hpp"
#include "tild/rng.hpp"

namespace tild {

namespace {

using json = nlohmann::json;

// Stream tag for the direct-sample baseline; far away from both step indices
// and the rng::kInitStep tag, so baseline draws never alias chain noise.
constexpr std::uint64_t kBaselineStream = 0xfffffffffffffffdull;

// gt_density sampling points per histogram bin.
constexpr int kGtSubdiv = 4;

struct CellOutput {
  Method method = Method::ula;
  double T = 0.0;
  std::vector<long> iters;                        // snapshot iterations
  std::vector<double> taus, hs;                   // traces at those iterations
  std::vector<double> kls;                        // d <= 2: full-space KL
  std::vector<std::vector<double>> marginal_kls;  // d > 2: [axis][snapshot]
  std::map<long, MatrixXd> histo_states;          // d <= 2, at histogram iterations
  double wall_seconds = 0.0;
  long steps_executed = 0;
  bool stopped_by_time = false;
};

std::vector<long> snapshot_grid(const ExperimentConfig& cfg, const std::vector<long>& histo) {
  std::vector<long> snaps{0, cfg.max_steps};
  if (cfg.kl_every > 0)
    for (long k = cfg.kl_every; k < cfg.max_steps; k += cfg.kl_every) snaps.push_back(k);
  snaps.insert(snaps.end(), histo.begin(), histo.end());
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  return snaps;
}

metrics::HistogramSpec apply_overrides(metrics::HistogramSpec spec, const ExperimentConfig& cfg) {
  for (auto& ax : spec.axes) {
    if (cfg.hist_bins) ax.bins = *cfg.hist_bins;
    if (cfg.hist_lo) {
      ax.lo = *cfg.hist_lo;
      ax.hi = *cfg.hist_hi;
    }
  }
  spec.validate();
  return spec;
}

std::unique_ptr<const AnnealingPath> build_path(Method m, const ExperimentConfig& cfg) {
  const GaussianMixture& target = *cfg.target;
  switch (m) {
    case Method::ula: return make_identity_path(target);
    case Method::dilation: return make_dilation_path(target, cfg.dilation_tau_max);
    case Method::tempering:
      return make_tempering_path(target, make_default_reference(target));
    case Method::convolution: return make_convolution_path(target);
    case Method::daz: return make_daz_path(target, cfg.prox, cfg.daz_tau_max);
    case Method::direct_sample: break;
  }
  throw ConfigError("config: direct_sample is a baseline, not a runnable method");
}

// Normalized per-bin density of one coordinate column; out-of-range samples
// clamp into the edge bins, matching the KL estimator's convention.
std::vector<double> column_density(const Eigen::Ref<const VectorXd>& col,
                                   const metrics::HistogramSpec::Axis& ax) {
  std::vector<long> counts(static_cast<size_t>(ax.bins), 0);
  const double w = (ax.hi - ax.lo) / ax.bins;
  for (long r = 0; r < col.size(); ++r) {
    int b = static_cast<int>(std::floor((col(r) - ax.lo) / w));
    b = std::clamp(b, 0, ax.bins - 1);
    counts[static_cast<size_t>(b)]++;
  }
  std::vector<double> density(counts.size());
  const double norm = 1.0 / (static_cast<double>(col.size()) * w);
  for (size_t b = 0; b < counts.size(); ++b)
    density[b] = static_cast<double>(counts[b]) * norm;
  return density;
}

std::string policy_name(StepPolicy::Kind k) {
  return k == StepPolicy::Kind::theory_max ? "theory_max" : "square_summable";
}

}  // namespace

std::string format_T(double T) {
  std::string s = csv::format_double(T);
  s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto wall_start = std::chrono::steady_clock::now();

  // ---- setup phase: everything that can be rejected happens before any
  // simulation, so bad configs fail fast.
  if (!cfg.target) throw ConfigError("config: no target");
  const GaussianMixture& target = *cfg.target;
  const int dim = target.dim();
  if (cfg.methods.empty()) throw ConfigError("config: no methods");
  if (cfg.out_dir.empty()) throw ConfigError("config: no output directory");
  if (cfg.max_steps < 0) throw ConfigError("config: max_steps must be >= 0");

  std::vector<long> histo_iters = cfg.histo_iterations;
  std::sort(histo_iters.begin(), histo_iters.end());
  histo_iters.erase(std::unique(histo_iters.begin(), histo_iters.end()), histo_iters.end());
  for (long k : histo_iters)
    if (k < 0 || k > cfg.max_steps)
      throw ConfigError("config: histogram iterations must lie in [0, max_steps]");

  std::vector<metrics::HistogramSpec> axis_specs;  // d > 2: one per tracked axis
  std::optional<metrics::HistogramSpec> full_spec;
  const int n_axes = std::min<int>(cfg.marginal_axes, dim);
  try {
    if (dim <= 2) {
      full_spec = apply_overrides(metrics::HistogramSpec::default_for(target), cfg);
    } else {
      for (int ax = 0; ax < n_axes; ++ax)
        axis_specs.push_back(
            apply_overrides(metrics::HistogramSpec::default_for(target.marginal(ax)), cfg));
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid histogram spec: ") + e.what());
  }

  std::map<Method, std::unique_ptr<const AnnealingPath>> paths;
  for (Method m : cfg.methods) {
    try {
      paths[m] = build_path(m, cfg);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config: cannot build " + method_name(m) + " path: " + e.what());
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.out_dir))
    throw ConfigError("config: cannot create output directory '" + cfg.out_dir.string() + "'");
  if (dim <= 2)
    for (double T : cfg.T_values) {
      const auto dir = cfg.out_dir / ("T_" + format_T(T));
      std::filesystem::create_directories(dir, ec);
      if (ec) throw ConfigError("config: cannot create '" + dir.string() + "'");
    }

  // ---- direct-sample baseline (one exact draw, evaluated once).
  const MatrixXd baseline_samples = target.sample(cfg.n_chains, cfg.seed, kBaselineStream);
  double baseline_kl = 0.0;
  std::vector<double> baseline_axis_kl(static_cast<size_t>(n_axes), 0.0);
  if (dim <= 2) {
    baseline_kl = metrics::histogram_kl(baseline_samples, target, *full_spec);
  } else {
    for (int ax = 0; ax < n_axes; ++ax)
      baseline_axis_kl[static_cast<size_t>(ax)] =
          metrics::marginal_kl(baseline_samples, target, ax, axis_specs[static_cast<size_t>(ax)]);
  }

  const std::vector<long> snaps = snapshot_grid(cfg, histo_iters);

  // ---- compute phase.
  struct Cell {
    Method method;
    double T;
  };
  std::vector<Cell> cells;
  for (double T : cfg.T_values)
    for (Method m : cfg.methods) cells.push_back({m, T});
  std::vector<CellOutput> outputs(cells.size());

  std::mutex log_mu;
  const auto run_cell = [&](const Cell& cell, ThreadPool* pool) {
    const auto t0 = std::chrono::steady_clock::now();
    const AnnealingPath& path = *paths.at(cell.method);

    const Schedule schedule =
        cell.method == Method::ula
            ? Schedule::frozen(0.0)
            : Schedule::exponential_anneal(cell.T, std::min(1.0, path.tau_max()));

    RunPlan plan;
    plan.n_chains = cfg.n_chains;
    plan.n_steps = cfg.max_steps;
    plan.snapshot_iterations = snaps;
    plan.init_kind = cfg.init_kind;
    plan.init_point = cfg.init_point;
    plan.init_mean = cfg.init_mean.size() > 0 ? cfg.init_mean : default_init_point(target);
    plan.init_scale = cfg.init_scale;
    plan.max_sim_time = cfg.max_sim_time;

    const RunResult res = run(path, schedule, cfg.policy, plan, cfg.seed, pool);

    CellOutput out;
    out.method = cell.method;
    out.T = cell.T;
    out.steps_executed = res.steps_executed;
    out.stopped_by_time = res.stopped_by_time;
    out.marginal_kls.resize(static_cast<size_t>(n_axes));
    for (const Snapshot& s : res.snapshots) {
      out.iters.push_back(s.iteration);
      out.taus.push_back(s.tau);
      out.hs.push_back(s.iteration == 0 ? 0.0
                                        : res.history[static_cast<size_t>(s.iteration - 1)].h);
      if (dim <= 2) {
        out.kls.push_back(metrics::histogram_kl(s.states, target, *full_spec));
        if (std::binary_search(histo_iters.begin(), histo_iters.end(), s.iteration))
          out.histo_states.emplace(s.iteration, s.states);
      } else {
        for (int ax = 0; ax < n_axes; ++ax)
          out.marginal_kls[static_cast<size_t>(ax)].push_back(
              metrics::marginal_kl(s.states, target, ax, axis_specs[static_cast<size_t>(ax)]));
      }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.quiet) {
      std::lock_guard<std::mutex> g(log_mu);
      std::cout << "[tild] " << method_name(cell.method) << " T=" << csv::format_double(cell.T)
                << ": " << out.steps_executed << " steps in " << out.wall_seconds << " s";
      if (dim <= 2 && !out.kls.empty()) std::cout << ", final KL " << out.kls.back();
      std::cout << '\n' << std::flush;
    }
    return out;
  };

  if (cfg.parallel_cells && cfg.threads > 1 && cells.size() > 1) {
    std::atomic<size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    const auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        try {
          outputs[i] = run_cell(cells[i], nullptr);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    const size_t n_workers = std::min<size_t>(static_cast<size_t>(cfg.threads), cells.size());
    std::vector<std::thread> threads;
    for (size_t i = 1; i < n_workers; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  } else {
    std::optional<ThreadPool> pool;
    if (cfg.threads > 1) pool.emplace(cfg.threads);
    for (size_t i = 0; i < cells.size(); ++i)
      outputs[i] = run_cell(cells[i], pool ? &*pool : nullptr);
  }

  // ---- write phase: sequential and in a fixed order, so artifact bytes do
  // not depend on the execution mode.
  ExperimentResult result;
  const auto open_csv = [&](const std::filesystem::path& p) {
    result.files_written.push_back(p);
    return csv::CsvFile(p);
  };

  const auto cells_for_T = [&](double T) {
    std::vector<const CellOutput*> v;
    for (const auto& o : outputs)
      if (o.T == T) v.push_back(&o);
    return v;
  };
  // Row iterations: union over cells (cells can stop early on max_sim_time).
  const auto row_iters = [](const std::vector<const CellOutput*>& group) {
    std::vector<long> rows;
    for (const auto* o : group) rows.insert(rows.end(), o->iters.begin(), o->iters.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  };
  const auto kl_at = [](const CellOutput& o, long iter, const std::vector<double>& series) {
    const auto it = std::lower_bound(o.iters.begin(), o.iters.end(), iter);
    if (it == o.iters.end() || *it != iter) return std::string();
    return csv::format_double(series[static_cast<size_t>(it - o.iters.begin())]);
  };

  if (dim <= 2) {
    for (double T : cfg.T_values) {
      const auto group = cells_for_T(T);
      const auto dir = cfg.out_dir / ("T_" + format_T(T));

      {
        auto file = open_csv(dir / "KL_comparison.csv");
        std::vector<std::string> header{"iter", "KL_gt"};
        for (const auto* o : group) header.push_back(method_kl_column(o->method));
        file.write_row(header);
        const std::string base = csv::format_double(baseline_kl);
        for (long iter : row_iters(group)) {
          std::vector<std::string> row{std::to_string(iter), base};
          for (const auto* o : group) row.push_back(kl_at(*o, iter, o->kls));
          file.write_row(row);
        }
        file.close();
      }

      for (long k : histo_iters) {
        std::vector<const CellOutput*> have;
        for (const auto* o : group)
          if (o->histo_states.count(k)) have.push_back(o);
        if (have.empty()) continue;
        for (int ax = 0; ax < dim; ++ax) {
          const auto& axis = full_spec->axes[static_cast<size_t>(ax)];
          const std::string name = dim == 1
                                       ? "histo_comparison_iter_" + std::to_string(k) + ".csv"
                                       : "histo_comparison_iter_" + std::to_string(k) + "_axis" +
                                             std::to_string(ax) + ".csv";
          auto file = open_csv(dir / name);
          std::vector<std::string> header{"x"};
          std::vector<std::vector<double>> columns;
          for (const auto* o : have) {
            header.push_back(method_histo_column(o->method));
            columns.push_back(column_density(o->histo_states.at(k).col(ax), axis));
          }
          file.write_row(header);
          const double w = (axis.hi - axis.lo) / axis.bins;
          for (int b = 0; b < axis.bins; ++b) {
            std::vector<std::string> row{csv::format_double(axis.lo + (b + 0.5) * w)};
            for (const auto& col : columns) row.push_back(csv::format_double(col[static_cast<size_t>(b)]));
            file.write_row(row);
          }
          file.close();
        }
      }
    }

    // Ground-truth density on a grid finer than the histogram bins.
    for (int ax = 0; ax < dim; ++ax) {
      const auto& axis = full_spec->axes[static_cast<size_t>(ax)];
      const GaussianMixture marginal = dim == 1 ? target : target.marginal(ax);
      const std::string name =
          dim == 1 ? "gt_density.csv" : "gt_density_axis" + std::to_string(ax) + ".csv";
      auto file = open_csv(cfg.out_dir / name);
      file.write_row({"x", "Ground truth density"});
      const double w = (axis.hi - axis.lo) / (axis.bins * kGtSubdiv);
      VectorXd x(1);
      for (int i = 0; i < axis.bins * kGtSubdiv; ++i) {
        x(0) = axis.lo + (i + 0.5) * w;
        file.write_row({csv::format_double(x(0)),
                        csv::format_double(std::exp(marginal.log_density(x)))});
      }
      file.close();
    }
  } else {
    for (double T : cfg.T_values) {
      const auto group = cells_for_T(T);
      const auto rows = row_iters(group);
      for (int ax = 0; ax < n_axes; ++ax) {
        const std::string tag = "KL_" + std::to_string(ax) + "_";
        auto file = open_csv(cfg.out_dir /
                             ("T" + format_T(T) + "_KLmarginal" + std::to_string(ax) + ".csv"));
        std::vector<std::string> header{"iter", tag + "gt"};
        for (const auto* o : group) header.push_back(tag + method_marginal_column(o->method));
        file.write_row(header);
        const std::string base = csv::format_double(baseline_axis_kl[static_cast<size_t>(ax)]);
        for (long iter : rows) {
          std::vector<std::string> row{std::to_string(iter), base};
          for (const auto* o : group)
            row.push_back(kl_at(*o, iter, o->marginal_kls[static_cast<size_t>(ax)]));
          file.write_row(row);
        }
        file.close();
      }
    }
  }

  // ---- metadata.
  json meta;
  meta["seed"] = cfg.seed;
  meta["versions"] = {{"tild", "0.1.0"},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"compiler", __VERSION__}};
  meta["target"] = {{"dim", dim}, {"components", target.n_components()}};
  meta["run"] = {{"n_chains", cfg.n_chains},
                 {"max_steps", cfg.max_steps},
                 {"kl_every", cfg.kl_every},
                 {"policy", policy_name(cfg.policy.kind)},
                 {"threads", cfg.threads},
                 {"parallel_cells", cfg.parallel_cells}};
  meta["cells"] = json::array();
  for (const auto& o : outputs) {
    json cell;
    cell["method"] = method_name(o.method);
    cell["T"] = o.T;
    cell["steps_executed"] = o.steps_executed;
    cell["stopped_by_time"] = o.stopped_by_time;
    cell["wall_seconds"] = o.wall_seconds;
    // Traces are recorded at snapshot iterations; h is the step that led into
    // the snapshot (0 at iteration 0).
    cell["trace"] = {{"iter", o.iters}, {"tau", o.taus}, {"h", o.hs}};
    meta["cells"].push_back(std::move(cell));
  }
  meta["wall_seconds_total"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  {
    const auto p = cfg.out_dir / "metadata.json";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("run_experiment: cannot write " + p.string());
    result.files_written.push_back(p);
  }

  return result;
}

}  // namespace tild
