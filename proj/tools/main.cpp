#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tild/config.hpp"
#include "tild/experiment.hpp"
#include "tild/sampler.hpp"
#include "tild/verify.hpp"

namespace {

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("TILD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
    std::cerr << "warning: ignoring TILD_THREADS='" << env << "'\n";
  }
  return 1;
}

// Steps worth printing: 0, 1, 2, 5, 10, 20, 50, ... plus the final step.
bool is_table_row(long k, long last) {
  if (k == 0 || k == last) return true;
  long lead = k;
  while (lead >= 10 && lead % 10 == 0) lead /= 10;
  return lead == 1 || lead == 2 || lead == 5;
}

void print_constants(const tild::ExperimentConfig& cfg) {
  using namespace tild;
  for (Method m : cfg.methods) {
    std::unique_ptr<const AnnealingPath> path;
    switch (m) {
      case Method::ula: path = make_identity_path(*cfg.target); break;
      case Method::dilation: path = make_dilation_path(*cfg.target, cfg.dilation_tau_max); break;
      case Method::tempering:
        path = make_tempering_path(*cfg.target, make_default_reference(*cfg.target));
        break;
      case Method::convolution: path = make_convolution_path(*cfg.target); break;
      case Method::daz: path = make_daz_path(*cfg.target, cfg.prox, cfg.daz_tau_max); break;
      case Method::direct_sample: continue;
    }
    for (double T : cfg.T_values) {
      const Schedule schedule = m == Method::ula
                                    ? Schedule::frozen(0.0)
                                    : Schedule::exponential_anneal(T, std::min(1.0, path->tau_max()));
      std::cout << "method " << method_name(m) << ", T = " << T
                << ", tau_max = " << path->tau_max() << '\n';
      std::cout << std::setw(10) << "k" << std::setw(14) << "t" << std::setw(14) << "tau"
                << std::setw(14) << "a_tau" << std::setw(14) << "L_tau" << std::setw(14) << "h_k"
                << '\n';
      const long last = std::max<long>(cfg.max_steps - 1, 0);
      double t = 0.0;
      for (long k = 0; k <= last; ++k) {
        const StepDecision sd = next_step(cfg.policy, *path, schedule, k, t);
        if (is_table_row(k, last)) {
          const StepConstants c = path->step_constants(sd.tau);
          std::cout << std::setw(10) << k << std::setw(14) << std::setprecision(6) << t
                    << std::setw(14) << sd.tau << std::setw(14) << c.a << std::setw(14) << c.L
                    << std::setw(14) << sd.h << '\n';
        }
        t += sd.h;
      }
      std::cout << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tild: annealed Langevin sampling toolkit"};
  app.require_subcommand(1);

  std::string run_config, out_override;
  bool parallel = false;
  int threads_flag = 0;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config and write CSV artifacts");
  run_cmd->add_option("--config", run_config, "experiment config file")->required();
  run_cmd->add_flag("--parallel", parallel, "run the method x T cells on separate threads");
  run_cmd->add_option("--out", out_override, "override run.out_dir");
  run_cmd->add_option("--threads", threads_flag,
                      "worker threads (default: TILD_THREADS env var, else 1)");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle verification suite");

  std::string const_config;
  auto* const_cmd =
      app.add_subcommand("constants", "print a_tau, L_tau and h_k tables per method");
  const_cmd->add_option("--config", const_config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad usage is a config error
  }

  try {
    if (run_cmd->parsed()) {
      tild::ExperimentConfig cfg = tild::load_config(run_config);
      if (!out_override.empty()) cfg.out_dir = out_override;
      cfg.parallel_cells = parallel;
      cfg.threads = resolve_threads(threads_flag);
      const auto result = tild::run_experiment(cfg);
      std::cout << "[tild] wrote " << result.files_written.size() << " files under "
                << cfg.out_dir.string() << '\n';
      return 0;
    }
    if (verify_cmd->parsed()) return tild::run_verification(std::cout) ? 0 : 3;
    if (const_cmd->parsed()) {
      print_constants(tild::load_config(const_config));
      return 0;
    }
  } catch (const tild::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
