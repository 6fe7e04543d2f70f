#include "tild/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tild/rng.hpp"

namespace tild {

std::string method_name(Method m) {
  switch (m) {
    case Method::ula: return "ULA";
    case Method::dilation: return "dilation";
    case Method::tempering: return "tempering";
    case Method::convolution: return "convolution";
    case Method::daz: return "DAZ";
    case Method::direct_sample: return "direct_sample";
  }
  return "?";
}

std::string method_kl_column(Method m) {
  return m == Method::convolution ? "diffusion" : method_name(m);
}

std::string method_histo_column(Method m) {
  return m == Method::daz ? "daz" : method_kl_column(m);
}

std::string method_marginal_column(Method m) {
  return m == Method::daz ? "daz_scale1" : method_kl_column(m);
}

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

// Raw key/value store with consumption tracking so typos surface as errors.
class KeyTable {
 public:
  explicit KeyTable(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail("line " + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
      if (!kv_.emplace(key, value).second) fail("duplicate key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) fail("missing required key '" + key + "'");
    return *v;
  }

  bool any_with_prefix(const std::string& prefix) const {
    auto it = kv_.lower_bound(prefix);
    return it != kv_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

  void check_all_used() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) fail("unknown key '" + k + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

double to_double(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail("key '" + key + "': cannot parse '" + s + "' as a real number");
  return v;
}

long to_long(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail("key '" + key + "': cannot parse '" + s + "' as an integer");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail("key '" + key + "': cannot parse '" + s + "' as an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

std::vector<double> to_double_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) fail("key '" + key + "': empty list element");
    out.push_back(to_double(key, t));
  }
  return out;
}

std::vector<long> to_long_list(const std::string& key, const std::string& s) {
  std::vector<long> out;
  for (const auto& tok : split(s, ',')) {
    const std::string t = trim(tok);
    if (t.empty()) fail("key '" + key + "': empty list element");
    out.push_back(to_long(key, t));
  }
  return out;
}

// One vector: coordinates separated by spaces and/or commas.
VectorXd to_vector(const std::string& key, const std::string& s) {
  std::string norm = s;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream in(norm);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(to_double(key, tok));
  if (vals.empty()) fail("key '" + key + "': empty vector");
  VectorXd v(static_cast<long>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<long>(i)) = vals[i];
  return v;
}

// K vectors of size d, separated by ';'. For d == 1 a plain comma list is
// also accepted ("-2, 0, 2" means three scalar components).
std::vector<VectorXd> to_vector_list(const std::string& key, const std::string& s, int dim,
                                     size_t expect) {
  std::vector<std::string> groups = split(s, ';');
  std::vector<VectorXd> out;
  if (dim == 1 && groups.size() == 1) {
    for (double v : to_double_list(key, groups[0])) {
      VectorXd x(1);
      x(0) = v;
      out.push_back(x);
    }
  } else {
    for (const auto& g : groups) out.push_back(to_vector(key, trim(g)));
  }
  if (out.size() != expect)
    fail("key '" + key + "': expected " + std::to_string(expect) + " components, got " +
         std::to_string(out.size()));
  for (const auto& v : out)
    if (v.size() != dim)
      fail("key '" + key + "': component has " + std::to_string(v.size()) +
           " coordinates, target dimension is " + std::to_string(dim));
  return out;
}

Method parse_method(const std::string& token) {
  if (token == "ULA" || token == "ula") return Method::ula;
  if (token == "dilation") return Method::dilation;
  if (token == "tempering") return Method::tempering;
  if (token == "convolution" || token == "diffusion") return Method::convolution;
  if (token == "DAZ" || token == "daz") return Method::daz;
  if (token == "direct_sample") return Method::direct_sample;
  fail("unknown method '" + token +
       "' (expected ULA, dilation, tempering, convolution, DAZ or direct_sample)");
}

std::shared_ptr<const GaussianMixture> build_target(KeyTable& keys) {
  try {
    if (keys.any_with_prefix("target.random.")) {
      const int dim = static_cast<int>(to_long("target.random.dim", keys.require("target.random.dim")));
      if (dim < 1) fail("target.random.dim must be positive");
      const std::vector<double> w = to_double_list("target.random.weights", keys.require("target.random.weights"));
      const std::uint64_t gseed = to_u64("target.random.seed", keys.require("target.random.seed"));
      double mean_std = 1.0, sig_lo = 0.1, sig_hi = 0.4;
      if (auto v = keys.get("target.random.mean_std")) mean_std = to_double("target.random.mean_std", *v);
      if (auto v = keys.get("target.random.sigma_min")) sig_lo = to_double("target.random.sigma_min", *v);
      if (auto v = keys.get("target.random.sigma_max")) sig_hi = to_double("target.random.sigma_max", *v);
      if (!(mean_std > 0.0) || !(sig_lo > 0.0) || !(sig_hi >= sig_lo))
        fail("target.random: need mean_std > 0 and 0 < sigma_min <= sigma_max");

      // Component i, coordinate j: means from stream 0, std devs from stream 1.
      std::vector<VectorXd> means;
      std::vector<MatrixXd> covs;
      for (size_t i = 0; i < w.size(); ++i) {
        VectorXd m(dim);
        MatrixXd c = MatrixXd::Zero(dim, dim);
        for (int j = 0; j < dim; ++j) {
          m(j) = mean_std * rng::normal(gseed, i, 0, static_cast<std::uint64_t>(j));
          const double s = sig_lo + (sig_hi - sig_lo) * rng::uniform(gseed, i, 1, static_cast<std::uint64_t>(j));
          c(j, j) = s * s;
        }
        means.push_back(std::move(m));
        covs.push_back(std::move(c));
      }
      return std::make_shared<GaussianMixture>(w, std::move(means), std::move(covs));
    }

    const int dim = static_cast<int>(to_long("target.dim", keys.require("target.dim")));
    if (dim < 1) fail("target.dim must be positive");
    const std::vector<double> w = to_double_list("target.weights", keys.require("target.weights"));
    const std::vector<VectorXd> means =
        to_vector_list("target.means", keys.require("target.means"), dim, w.size());
    const std::vector<VectorXd> sig =
        to_vector_list("target.sigmas", keys.require("target.sigmas"), dim, w.size());
    std::vector<MatrixXd> covs;
    for (const auto& s : sig) {
      if ((s.array() <= 0.0).any()) fail("target.sigmas: standard deviations must be positive");
      covs.push_back(s.array().square().matrix().asDiagonal());
    }
    return std::make_shared<GaussianMixture>(w, means, std::move(covs));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("invalid target: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  KeyTable keys(text);
  ExperimentConfig cfg;

  cfg.target = build_target(keys);
  const int dim = cfg.target->dim();

  // Methods: dedup into canonical column order; the baseline needs no path.
  std::set<Method> seen;
  for (const auto& tok : split(keys.require("run.methods"), ','))
    seen.insert(parse_method(trim(tok)));
  if (seen.empty()) fail("run.methods must be nonempty");
  for (Method m : {Method::ula, Method::dilation, Method::tempering, Method::convolution,
                   Method::daz})
    if (seen.count(m)) cfg.methods.push_back(m);
  if (cfg.methods.empty())
    fail("run.methods must name at least one sampling method besides direct_sample");

  cfg.T_values = to_double_list("run.T", keys.require("run.T"));
  for (double T : cfg.T_values)
    if (!(T > 0.0)) fail("run.T values must be positive");

  cfg.n_chains = to_long("run.n_chains", keys.require("run.n_chains"));
  if (cfg.n_chains < 1) fail("run.n_chains must be >= 1");
  cfg.max_steps = to_long("run.max_steps", keys.require("run.max_steps"));
  if (cfg.max_steps < 0) fail("run.max_steps must be >= 0");
  if (auto v = keys.get("run.max_sim_time")) {
    cfg.max_sim_time = to_double("run.max_sim_time", *v);
    if (!(cfg.max_sim_time > 0.0)) fail("run.max_sim_time must be positive");
  }
  if (auto v = keys.get("run.kl_every")) {
    cfg.kl_every = to_long("run.kl_every", *v);
    if (cfg.kl_every < 0) fail("run.kl_every must be >= 0");
  }
  if (auto v = keys.get("run.histo_iters")) {
    cfg.histo_iterations = to_long_list("run.histo_iters", *v);
    std::sort(cfg.histo_iterations.begin(), cfg.histo_iterations.end());
    cfg.histo_iterations.erase(
        std::unique(cfg.histo_iterations.begin(), cfg.histo_iterations.end()),
        cfg.histo_iterations.end());
    for (long k : cfg.histo_iterations)
      if (k < 0 || k > cfg.max_steps)
        fail("run.histo_iters entries must lie in [0, run.max_steps]");
  }
  if (auto v = keys.get("run.seed")) cfg.seed = to_u64("run.seed", *v);
  cfg.out_dir = std::filesystem::path(keys.require("run.out_dir"));

  if (auto v = keys.get("run.init")) {
    if (*v == "point")
      cfg.init_kind = RunPlan::InitKind::point;
    else if (*v == "gaussian")
      cfg.init_kind = RunPlan::InitKind::gaussian;
    else
      fail("run.init must be 'point' or 'gaussian'");
  }
  if (auto v = keys.get("run.init_point")) {
    cfg.init_point = to_vector("run.init_point", *v);
    if (cfg.init_point.size() != dim) fail("run.init_point has the wrong dimension");
  }
  if (auto v = keys.get("run.init_mean")) {
    cfg.init_mean = to_vector("run.init_mean", *v);
    if (cfg.init_mean.size() != dim) fail("run.init_mean has the wrong dimension");
  }
  if (auto v = keys.get("run.init_scale")) {
    cfg.init_scale = to_double("run.init_scale", *v);
    if (!(cfg.init_scale > 0.0)) fail("run.init_scale must be positive");
  }

  if (auto v = keys.get("policy.kind")) {
    if (*v == "theory_max")
      cfg.policy.kind = StepPolicy::Kind::theory_max;
    else if (*v == "square_summable")
      cfg.policy.kind = StepPolicy::Kind::square_summable;
    else
      fail("policy.kind must be 'theory_max' or 'square_summable'");
  }
  if (auto v = keys.get("policy.h0")) cfg.policy.h0 = to_double("policy.h0", *v);
  if (auto v = keys.get("policy.p")) cfg.policy.p = to_double("policy.p", *v);
  if (auto v = keys.get("policy.h_max")) cfg.policy.h_max = to_double("policy.h_max", *v);
  try {
    cfg.policy.validate();
  } catch (const std::exception& e) {
    fail(std::string("invalid policy: ") + e.what());
  }

  if (auto v = keys.get("hist.bins")) {
    cfg.hist_bins = static_cast<int>(to_long("hist.bins", *v));
    if (*cfg.hist_bins < 2) fail("hist.bins must be >= 2");
  }
  if (auto v = keys.get("hist.lo")) cfg.hist_lo = to_double("hist.lo", *v);
  if (auto v = keys.get("hist.hi")) cfg.hist_hi = to_double("hist.hi", *v);
  if (cfg.hist_lo.has_value() != cfg.hist_hi.has_value())
    fail("hist.lo and hist.hi must be given together");
  if (cfg.hist_lo && !(*cfg.hist_lo < *cfg.hist_hi)) fail("hist.lo must be < hist.hi");
  if (auto v = keys.get("hist.marginal_axes")) {
    cfg.marginal_axes = static_cast<int>(to_long("hist.marginal_axes", *v));
    if (cfg.marginal_axes < 1) fail("hist.marginal_axes must be >= 1");
  }

  if (auto v = keys.get("paths.dilation.tau_max")) {
    cfg.dilation_tau_max = to_double("paths.dilation.tau_max", *v);
    if (!(cfg.dilation_tau_max > 0.0 && cfg.dilation_tau_max < 1.0))
      fail("paths.dilation.tau_max must lie in (0, 1)");
  }
  if (auto v = keys.get("paths.daz.tau_max")) {
    cfg.daz_tau_max = to_double("paths.daz.tau_max", *v);
    if (!(cfg.daz_tau_max > 0.0)) fail("paths.daz.tau_max must be positive");
  }
  if (auto v = keys.get("paths.daz.tolerance")) {
    cfg.prox.tolerance = to_double("paths.daz.tolerance", *v);
    if (!(cfg.prox.tolerance > 0.0)) fail("paths.daz.tolerance must be positive");
  }
  if (auto v = keys.get("paths.daz.max_iterations")) {
    cfg.prox.max_iterations = static_cast<int>(to_long("paths.daz.max_iterations", *v));
    if (cfg.prox.max_iterations < 1) fail("paths.daz.max_iterations must be >= 1");
  }
  if (auto v = keys.get("paths.daz.step_rule")) {
    if (*v == "backtracking")
      cfg.prox.step_rule = ProxSettings::StepRule::backtracking;
    else if (*v == "fixed")
      cfg.prox.step_rule = ProxSettings::StepRule::fixed;
    else
      fail("paths.daz.step_rule must be 'backtracking' or 'fixed'");
  }

  keys.check_all_used();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace tild
