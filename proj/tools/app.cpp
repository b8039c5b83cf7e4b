#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cpflow/asymptotics.hpp"
#include "cpflow/csv.hpp"
#include "cpflow/determination.hpp"
#include "cpflow/flow.hpp"
#include "cpflow/rng.hpp"
#include "cpflow/svg.hpp"

namespace fs = std::filesystem;

namespace cpflow::app {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("value for '" + what + "' is not a number: '" + text + "'", line);
  }
}

int parse_int(const std::string& text, const std::string& what, int line) {
  try {
    std::size_t pos = 0;
    long v = std::stol(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing junk");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("value for '" + what + "' is not an integer: '" + text + "'", line);
  }
}

}  // namespace

KvConfig KvConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string(), 0);
  KvConfig cfg;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value, got '" + trim(raw) + "'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    cfg.entries_.push_back({key, value, line_no});
  }
  return cfg;
}

const KvEntry* KvConfig::find(const std::string& key) const {
  const KvEntry* hit = nullptr;
  for (const auto& e : entries_)
    if (e.key == key) hit = &e;
  return hit;
}

void KvConfig::require_known(const std::set<std::string>& allowed) const {
  for (const auto& e : entries_)
    if (!allowed.count(e.key))
      throw ConfigError("unknown config key '" + e.key + "'", e.line);
}

Vec parse_vec(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) throw std::invalid_argument("empty component in vector '" + text + "'");
    std::size_t pos = 0;
    vals.push_back(std::stod(tok, &pos));
    if (pos != tok.size())
      throw std::invalid_argument("bad vector component '" + tok + "'");
  }
  if (vals.empty()) throw std::invalid_argument("empty vector literal");
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

namespace {

Vec unit_first(int dim) {
  Vec v = Vec::Zero(dim);
  v[0] = 1.0;
  return v;
}

std::shared_ptr<const ConvexFn> with_offset(std::shared_ptr<const ConvexFn> fn, double offset) {
  if (offset == 0.0) return fn;
  return std::make_shared<OffsetFn>(std::move(fn), offset);
}

std::vector<double> alpha_levels(const FnArgs& s) {
  int count = s.depth + 2;  // plateaus 0..depth plus the closing level
  if (s.alpha == "nsq") return alpha_quadratic_exponent(count);
  if (s.alpha == "geometric") return alpha_geometric(s.alpha_ratio, count);
  throw std::invalid_argument("unknown alpha schedule '" + s.alpha + "' (use nsq or geometric)");
}

}  // namespace

BuiltFn build_fn(const FnArgs& s) {
  BuiltFn out;
  auto describe_vec = [](const Vec& v) {
    std::string t = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) t += ",";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", v[i]);
      t += buf;
    }
    return t + ")";
  };

  if (s.id == "quadratic") {
    Vec a = s.a ? *s.a : Vec::Zero(s.dim);
    out.fn = with_offset(std::make_shared<QuadraticFn>(a), s.offset);
    out.describe = "0.5*|x-a|^2 with a=" + describe_vec(a);
    out.sample_box = Box::centered(static_cast<int>(a.size()), 3.0);
  } else if (s.id == "affine") {
    Vec a = s.a ? *s.a : unit_first(s.dim);
    out.fn = with_offset(std::make_shared<AffineFn>(a, s.b), s.offset);
    out.describe = "<a,x>+b with a=" + describe_vec(a);
    out.sample_box = Box::centered(static_cast<int>(a.size()), 3.0);
  } else if (s.id == "norm") {
    out.fn = with_offset(std::make_shared<NormFn>(s.dim), s.offset);
    out.describe = "|x| in dimension " + std::to_string(s.dim);
    out.sample_box = Box::centered(s.dim, 3.0);
  } else if (s.id == "abs_plus_linear") {
    std::vector<std::shared_ptr<const ConvexFn>> blocks{
        std::make_shared<AffineFn>(Vec::Ones(1), 0.0), std::make_shared<NormFn>(1)};
    out.fn = with_offset(std::make_shared<SeparableSumFn>(blocks), s.offset);
    out.describe = "x1 + |x2|";
    out.sample_box = Box::centered(2, 3.0);
  } else if (s.id == "quad_abs_sum") {
    Vec c(1);
    c[0] = 1.0;
    std::vector<std::shared_ptr<const ConvexFn>> blocks{std::make_shared<QuadraticFn>(c),
                                                        std::make_shared<NormFn>(1)};
    out.fn = with_offset(std::make_shared<SeparableSumFn>(blocks), s.offset);
    out.describe = "0.5*(x1-1)^2 + |x2|";
    out.sample_box = Box::centered(2, 3.0);
  } else if (s.id == "moreau_quadratic") {
    Vec a = s.a ? *s.a : Vec::Zero(s.dim);
    auto base = std::make_shared<QuadraticFn>(a);
    out.fn = with_offset(std::make_shared<MoreauEnvelopeFn>(base, s.lambda), s.offset);
    out.describe = "Moreau envelope (lambda=" + std::to_string(s.lambda) + ") of quadratic";
    out.sample_box = Box::centered(static_cast<int>(a.size()), 3.0);
  } else if (s.id == "moreau_norm") {
    auto base = std::make_shared<NormFn>(s.dim);
    out.fn = with_offset(std::make_shared<MoreauEnvelopeFn>(base, s.lambda), s.offset);
    out.describe = "Moreau envelope (lambda=" + std::to_string(s.lambda) + ") of |x|";
    out.sample_box = Box::centered(s.dim, 3.0);
  } else if (s.id == "moreau_abs_plus_linear") {
    std::vector<std::shared_ptr<const ConvexFn>> blocks{
        std::make_shared<AffineFn>(Vec::Ones(1), 0.0), std::make_shared<NormFn>(1)};
    auto base = std::make_shared<SeparableSumFn>(blocks);
    out.fn = with_offset(std::make_shared<MoreauEnvelopeFn>(base, s.lambda), s.offset);
    out.describe = "Moreau envelope (lambda=" + std::to_string(s.lambda) + ") of x1+|x2|";
    out.sample_box = Box::centered(2, 3.0);
  } else if (s.id == "potential1d") {
    if (s.tmax <= 1.0) throw std::invalid_argument("--tmax must exceed 1");
    auto phi = [](double t) { return 1.0 / (1.0 + t); };
    Potential1D pot = build_potential(phi, s.tmax);
    out.fn = with_offset(std::make_shared<PotentialFn>(std::move(pot)), s.offset);
    out.describe = "1-D potential with speed profile 1/(1+t) on [0," + std::to_string(s.tmax) + "]";
    out.sample_box = Box::centered(1, 1.0);
  } else if (s.id == "counterexample2d") {
    if (s.depth < 1)
      throw std::invalid_argument("need at least two plateaus: --depth must be >= 1");
    Counterexample2D ce = build_counterexample(alpha_levels(s), s.depth, s.t_budget);
    out.describe = "2-D oscillating construction, depth " + std::to_string(s.depth);
    out.sample_box = Box::centered(2, 1.0);
    out.fn = with_offset(ce.fn, s.offset);
    out.ce = std::move(ce);
  } else {
    throw std::invalid_argument(
        "unknown function id '" + s.id +
        "' (available: quadratic, affine, norm, abs_plus_linear, quad_abs_sum, "
        "moreau_quadratic, moreau_norm, moreau_abs_plus_linear, potential1d, counterexample2d)");
  }
  return out;
}

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("CPFLOW_OUT"); env && *env) return env;
  return "out";
}

namespace {

// ---------------------------------------------------------------------------
// Shared CLI plumbing
// ---------------------------------------------------------------------------

struct FnFlagNames {
  std::string fn, a, b, lambda, offset, dim, depth, tmax, alpha, alpha_ratio, t_budget;
};

/// Config keys use underscores; the matching command-line flags use hyphens.
std::string flag_for_key(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

FnFlagNames fn_flags(const std::string& suffix) {
  return {"fn" + suffix,     "a" + suffix,     "b" + suffix,
          "lambda" + suffix, "offset" + suffix, "dim" + suffix,
          "depth" + suffix,  "tmax" + suffix,  "alpha" + suffix,
          "alpha_ratio" + suffix, "t_budget" + suffix};
}

struct FnCli {
  std::string id;
  std::string a_text;
  double b = 0.0;
  double lambda = 0.5;
  double offset = 0.0;
  int dim = 2;
  int depth = 6;
  double tmax = 100.0;
  std::string alpha = "nsq";
  double alpha_ratio = 2.0;
  double t_budget = 1e30;

  FnArgs to_args() const {
    FnArgs s;
    s.id = id;
    if (!a_text.empty()) s.a = parse_vec(a_text);
    s.b = b;
    s.lambda = lambda;
    s.offset = offset;
    s.dim = dim;
    s.depth = depth;
    s.tmax = tmax;
    s.alpha = alpha;
    s.alpha_ratio = alpha_ratio;
    s.t_budget = t_budget;
    return s;
  }
};

void add_fn_options(CLI::App* cmd, FnCli& f, const std::string& suffix, bool require_fn) {
  auto names = fn_flags(suffix);
  auto* fn_opt = cmd->add_option("--" + names.fn, f.id,
                                 "Function id (quadratic, affine, norm, abs_plus_linear, "
                                 "quad_abs_sum, moreau_quadratic, moreau_norm, "
                                 "moreau_abs_plus_linear, potential1d, counterexample2d)");
  if (require_fn) fn_opt->required();
  cmd->add_option("--" + names.a, f.a_text,
                  "Comma-separated vector parameter (quadratic center / affine slope)");
  cmd->add_option("--" + names.b, f.b, "Affine intercept");
  cmd->add_option("--" + names.lambda, f.lambda, "Moreau envelope parameter (lambda > 0)");
  cmd->add_option("--" + names.offset, f.offset, "Additive constant applied to the function");
  cmd->add_option("--" + names.dim, f.dim, "Ambient dimension for norm-type functions");
  cmd->add_option("--" + names.depth, f.depth,
                  "Number of speed-drop events in the 2-D construction");
  cmd->add_option("--" + names.tmax, f.tmax, "Time span covered by the 1-D potential builder");
  cmd->add_option("--" + names.alpha, f.alpha,
                  "Plateau level schedule for the 2-D construction: nsq (2^-n^2) or geometric");
  cmd->add_option(flag_for_key(names.alpha_ratio), f.alpha_ratio,
                  "Ratio of the geometric plateau schedule (> 1)");
  cmd->add_option(flag_for_key(names.t_budget), f.t_budget,
                  "Abort the 2-D construction if a breakpoint would exceed this time");
}

/// Applies config values to options the user did not pass on the command
/// line, then rejects unknown keys.  Value setters keyed by config key.
struct ConfigBinding {
  CLI::App* cmd;
  std::map<std::string, std::function<void(const KvEntry&)>> setters;

  void add_double(const std::string& key, double& target) {
    setters[key] = [key, &target](const KvEntry& e) {
      target = parse_double(e.value, key, e.line);
    };
  }
  void add_int(const std::string& key, int& target) {
    setters[key] = [key, &target](const KvEntry& e) {
      target = parse_int(e.value, key, e.line);
    };
  }
  void add_string(const std::string& key, std::string& target) {
    setters[key] = [&target](const KvEntry& e) { target = e.value; };
  }

  void apply(const KvConfig& cfg) {
    std::set<std::string> allowed;
    for (const auto& [k, _] : setters) allowed.insert(k);
    cfg.require_known(allowed);
    for (const auto& [key, setter] : setters) {
      const KvEntry* e = cfg.find(key);
      if (!e) continue;
      // command line wins over config
      if (cmd->count(flag_for_key(key)) > 0) continue;
      setter(*e);
    }
  }
};

void bind_fn_config(ConfigBinding& b, FnCli& f, const std::string& suffix) {
  auto names = fn_flags(suffix);
  b.add_string(names.fn, f.id);
  b.add_string(names.a, f.a_text);
  b.add_double(names.b, f.b);
  b.add_double(names.lambda, f.lambda);
  b.add_double(names.offset, f.offset);
  b.add_int(names.dim, f.dim);
  b.add_int(names.depth, f.depth);
  b.add_double(names.tmax, f.tmax);
  b.add_string(names.alpha, f.alpha);
  b.add_double(names.alpha_ratio, f.alpha_ratio);
  b.add_double(names.t_budget, f.t_budget);
}

FlowConfig make_flow_config(double h, double horizon, const std::string& policy, int ppd) {
  FlowConfig cfg;
  cfg.step = h;
  cfg.horizon = horizon;
  cfg.points_per_decade = ppd;
  if (policy == "fixed")
    cfg.policy = StepPolicy::fixed;
  else if (policy == "geometric")
    cfg.policy = StepPolicy::geometric;
  else
    throw std::invalid_argument("unknown step policy '" + policy + "' (use fixed or geometric)");
  return cfg;
}

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // collapse negative zero in human-readable output
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string vec_text(const Vec& v) {
  std::string t;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) t += ",";
    t += fmt(v[i]);
  }
  return t;
}

void write_cp_combined(const fs::path& path, const std::vector<CPEstimate>& ests) {
  if (ests.empty()) return;
  int d = static_cast<int>(ests.front().p.size());
  std::vector<std::string> header{"method", "t"};
  for (int i = 0; i < d; ++i) header.push_back("p_" + std::to_string(i));
  header.push_back("norm");
  CsvWriter w(path);
  w.header(header);
  auto emit = [&w](CPMethod m, double t, const Vec& p) {
    std::vector<double> nums{t};
    for (Eigen::Index i = 0; i < p.size(); ++i) nums.push_back(p[i]);
    nums.push_back(p.norm());
    w.row({cp_method_name(m)}, nums);
  };
  for (const auto& est : ests) {
    for (const auto& [t, p] : est.history) emit(est.method, t, p);
    emit(est.method, est.horizon, est.p);
  }
}

void write_speed_svg(const fs::path& path, const Trajectory& traj, bool log_axes) {
  SvgPlot plot("Flow speed", "t", "speed");
  std::vector<double> ts, ss;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    ts.push_back(traj.times[k]);
    ss.push_back(traj.speeds[k]);
  }
  if (log_axes) {
    plot.set_log_x(true);
    plot.set_log_y(true);
  }
  plot.add_line(ts, ss, "speed", "#1f77b4");
  plot.write(path);
}

void write_secants_svg(const fs::path& path, const SecantSet& sec, bool log_t) {
  // Secant direction angle against sample time; only meaningful in the plane.
  if (sec.samples.empty() || sec.samples.front().second.size() != 2) return;
  SvgPlot plot("Secant directions", "t", "angle (rad)");
  if (log_t) plot.set_log_x(true);
  std::vector<double> ts, angs;
  for (const auto& [t, u] : sec.samples) {
    ts.push_back(t);
    angs.push_back(std::atan2(u[1], u[0]));
  }
  plot.add_scatter(ts, angs, "secants", "#d62728");
  plot.write(path);
}

void write_profile_svg(const fs::path& path, const Counterexample2D& ce) {
  SvgPlot plot("Speed profiles", "t", "level");
  plot.set_log_x(true);
  plot.set_log_y(true);
  std::vector<double> ts;
  double t_end = ce.horizon;
  for (double t = 1e-2; t <= t_end * 1.0001; t *= 1.3) ts.push_back(t);
  std::vector<double> phis, psis;
  for (double t : ts) {
    phis.push_back(ce.phi_potential.backend().phi(t));
    psis.push_back(ce.psi_potential.backend().phi(t));
  }
  plot.add_line(ts, phis, "phi", "#1f77b4");
  plot.add_line(ts, psis, "psi", "#ff7f0e");
  plot.write(path);
}

// ---------------------------------------------------------------------------
// Subcommand: run-flow
// ---------------------------------------------------------------------------

struct RunFlowCli {
  FnCli fn;
  std::string x0_text;
  double h = 0.1;
  double horizon = -1.0;  // -1 = default (50, or construction horizon)
  std::string policy;     // empty = default per function
  int ppd = 48;
  unsigned long long seed = 1;
  std::string out_flag;
  std::string config_path;
  double cluster_tol = 0.1;
  double rmin = 10.0;
};

int run_flow(const RunFlowCli& cli_args, CLI::App* cmd) {
  RunFlowCli a = cli_args;
  if (!a.config_path.empty()) {
    KvConfig cfg = KvConfig::load(a.config_path);
    ConfigBinding b{cmd, {}};
    bind_fn_config(b, a.fn, "");
    b.add_string("x0", a.x0_text);
    b.add_double("h", a.h);
    b.add_double("T", a.horizon);
    b.add_string("policy", a.policy);
    b.add_int("ppd", a.ppd);
    b.add_string("out", a.out_flag);
    b.add_double("cluster_tol", a.cluster_tol);
    b.add_double("rmin", a.rmin);
    b.setters["seed"] = [&a](const KvEntry& e) {
      a.seed = static_cast<unsigned long long>(std::stoull(e.value));
    };
    b.apply(cfg);
  }
  if (a.fn.id.empty()) throw std::invalid_argument("--fn is required (flag or config)");

  BuiltFn built = build_fn(a.fn.to_args());
  bool is_construction = a.fn.id == "counterexample2d";

  double horizon = a.horizon > 0 ? a.horizon : (built.ce ? built.ce->horizon : 50.0);
  std::string policy = !a.policy.empty() ? a.policy : (is_construction ? "geometric" : "fixed");
  FlowConfig fcfg = make_flow_config(a.h, horizon, policy, a.ppd);

  Vec x0;
  if (!a.x0_text.empty()) {
    x0 = parse_vec(a.x0_text);
  } else if (is_construction) {
    x0 = Vec::Zero(built.fn->dimension());
  } else {
    Rng rng(a.seed);
    x0 = rng.in_box(built.sample_box);
  }

  fs::path out_dir = resolve_out_dir(a.out_flag);
  fs::create_directories(out_dir);

  Trajectory traj = integrate_flow(*built.fn, x0, fcfg);
  write_trajectory_csv(out_dir / "flow.csv", traj);
  write_speed_svg(out_dir / "speed.svg", traj, fcfg.policy == StepPolicy::geometric);

  std::vector<CPEstimate> ests;
  ests.push_back(cp_pazy_ratio(*built.fn, x0, fcfg));
  ests.push_back(cp_limit_velocity(*built.fn, x0, fcfg));
  std::vector<Vec> seeds{x0};
  ests.push_back(cp_min_norm_search(*built.fn, seeds, fcfg));
  write_cp_combined(out_dir / "cp.csv", ests);

  std::cout << "fn=" << built.describe << "\n";
  std::cout << "x0=" << vec_text(x0) << "\n";
  std::cout << "policy=" << policy << " h=" << fmt(a.h) << " horizon=" << fmt(horizon) << "\n";
  std::cout << "rows=" << traj.size() << "\n";
  if (traj.aborted_at) {
    std::cout << "aborted_at=" << fmt(traj.times[*traj.aborted_at])
              << " reason=" << traj.abort_reason << "\n";
  }
  std::cout << "final_value=" << fmt(traj.values.back()) << "\n";
  std::cout << "final_speed=" << fmt(traj.speeds.back()) << "\n";
  for (const auto& est : ests) {
    std::cout << "cp_" << cp_method_name(est.method) << "=" << vec_text(est.p)
              << " norm=" << fmt(est.p.norm()) << " converged=" << (est.converged ? "yes" : "no")
              << "\n";
  }

  try {
    SecantSet sec = cosmic_secants(traj, a.cluster_tol, a.rmin);
    write_secants_csv(out_dir / "secants.csv", sec);
    write_secants_svg(out_dir / "secants.svg", sec, fcfg.policy == StepPolicy::geometric);
    std::cout << "secants_oscillating=" << (sec.oscillating ? "true" : "false")
              << " clusters=" << sec.directions.size() << "\n";
  } catch (const FlowBoundedError& e) {
    std::cout << "secants=undefined (flow stayed within radius " << fmt(a.rmin)
              << ", travel=" << fmt(e.travel) << ")\n";
  }
  std::cout << "out=" << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommand: run-determine
// ---------------------------------------------------------------------------

struct RunDetermineCli {
  FnCli fn_f;
  FnCli fn_g;
  int probes = 64;
  double box = 3.0;
  double h = 0.01;
  double horizon = 50.0;
  std::string out_flag;
  std::string config_path;
};

int run_determine(const RunDetermineCli& cli_args, CLI::App* cmd) {
  RunDetermineCli a = cli_args;
  if (!a.config_path.empty()) {
    KvConfig cfg = KvConfig::load(a.config_path);
    ConfigBinding b{cmd, {}};
    bind_fn_config(b, a.fn_f, "");
    bind_fn_config(b, a.fn_g, "2");
    b.add_int("probes", a.probes);
    b.add_double("box", a.box);
    b.add_double("h", a.h);
    b.add_double("T", a.horizon);
    b.add_string("out", a.out_flag);
    b.apply(cfg);
  }
  if (a.fn_f.id.empty()) throw std::invalid_argument("--fn is required (flag or config)");
  if (a.fn_g.id.empty()) throw std::invalid_argument("--fn2 is required (flag or config)");

  BuiltFn f = build_fn(a.fn_f.to_args());
  BuiltFn g = build_fn(a.fn_g.to_args());
  if (f.fn->dimension() != g.fn->dimension())
    throw std::invalid_argument("function dimensions differ: " + std::to_string(f.fn->dimension()) +
                                " vs " + std::to_string(g.fn->dimension()));

  if (a.probes < 1) throw std::invalid_argument("--probes must be positive");
  Box box = Box::centered(f.fn->dimension(), a.box);
  std::vector<Vec> probes = halton_probes(box, a.probes);

  FlowConfig fcfg;
  fcfg.step = a.h;
  fcfg.horizon = a.horizon;

  fs::path out_dir = resolve_out_dir(a.out_flag);
  fs::create_directories(out_dir);

  DeterminationReport report = determine(*f.fn, *g.fn, probes, fcfg);
  write_report(out_dir / "report.txt", report);

  std::cout << "f=" << f.describe << "\n";
  std::cout << "g=" << g.describe << "\n";
  std::cout << "verdict=" << verdict_name(report.verdict) << "\n";
  std::cout << "constant=" << fmt(report.constant) << "\n";
  std::cout << "slope_gap=" << fmt(report.slope_gap) << "\n";
  std::cout << "cp_gap=" << fmt(report.cp_gap) << "\n";
  std::cout << "constancy_spread=" << fmt(report.constancy_spread) << "\n";
  for (const auto& n : report.notes) std::cout << "note=" << n << "\n";
  std::cout << "report=" << (out_dir / "report.txt").string() << "\n";
  return verdict_exit_code(report.verdict);
}

// ---------------------------------------------------------------------------
// Subcommand: run-counterexample
// ---------------------------------------------------------------------------

struct RunCounterexampleCli {
  int depth = 6;
  std::string alpha = "nsq";
  double alpha_ratio = 2.0;
  double t_budget = 1e30;
  double h = 0.1;
  int ppd = 48;
  double horizon = -1.0;
  std::string out_flag;
  std::string config_path;
  double cluster_tol = 0.1;
  double rmin = 10.0;
};

int run_counterexample(const RunCounterexampleCli& cli_args, CLI::App* cmd) {
  RunCounterexampleCli a = cli_args;
  if (!a.config_path.empty()) {
    KvConfig cfg = KvConfig::load(a.config_path);
    ConfigBinding b{cmd, {}};
    b.add_int("depth", a.depth);
    b.add_string("alpha", a.alpha);
    b.add_double("alpha_ratio", a.alpha_ratio);
    b.add_double("t_budget", a.t_budget);
    b.add_double("h", a.h);
    b.add_int("ppd", a.ppd);
    b.add_double("T", a.horizon);
    b.add_string("out", a.out_flag);
    b.add_double("cluster_tol", a.cluster_tol);
    b.add_double("rmin", a.rmin);
    b.apply(cfg);
  }
  if (a.depth < 1)
    throw std::invalid_argument("need at least two plateaus: --depth must be >= 1");

  FnArgs spec;
  spec.id = "counterexample2d";
  spec.depth = a.depth;
  spec.alpha = a.alpha;
  spec.alpha_ratio = a.alpha_ratio;
  spec.t_budget = a.t_budget;
  BuiltFn built = build_fn(spec);
  const Counterexample2D& ce = *built.ce;

  fs::path out_dir = resolve_out_dir(a.out_flag);
  fs::create_directories(out_dir);

  write_schedule_csv(out_dir / "schedule.csv", ce.schedule);
  write_profile_svg(out_dir / "profile.svg", ce);

  double horizon = a.horizon > 0 ? a.horizon : ce.horizon;
  FlowConfig fcfg = make_flow_config(a.h, horizon, "geometric", a.ppd);
  Vec x0 = Vec::Zero(2);
  Trajectory traj = integrate_flow(*ce.fn, x0, fcfg);
  write_trajectory_csv(out_dir / "flow.csv", traj);
  write_speed_svg(out_dir / "speed.svg", traj, true);

  CPEstimate est = cp_limit_velocity(*ce.fn, x0, fcfg);
  write_cp_combined(out_dir / "cp.csv", {est});

  std::cout << "depth=" << a.depth << "\n";
  std::cout << "alpha=" << a.alpha;
  if (a.alpha == "geometric") std::cout << " ratio=" << fmt(a.alpha_ratio);
  std::cout << "\n";
  std::cout << "horizon=" << fmt(ce.horizon) << "\n";
  std::cout << "breakpoints=" << ce.schedule.size() << "\n";
  for (const auto& row : ce.schedule) {
    std::cout << "  n=" << row.n << " t=" << fmt(row.t_n) << " alpha=" << fmt(row.alpha)
              << " ratio=" << fmt(row.ratio_achieved) << " target=" << fmt(row.ratio_target)
              << "\n";
  }
  double plateau = ce.alpha[static_cast<std::size_t>(a.depth)];
  std::cout << "cp_estimate_norm=" << fmt(est.p.norm()) << " plateau_level=" << fmt(plateau)
            << "\n";
  if (a.alpha == "geometric")
    std::cout << "warning=ratio targets bounded (constant ratio), oscillation witness weak\n";

  try {
    SecantSet sec = cosmic_secants(traj, a.cluster_tol, a.rmin);
    write_secants_csv(out_dir / "secants.csv", sec);
    write_secants_svg(out_dir / "secants.svg", sec, true);
    std::cout << "oscillating=" << (sec.oscillating ? "true" : "false")
              << " clusters=" << sec.directions.size() << "\n";
  } catch (const FlowBoundedError& e) {
    std::cout << "oscillating=undefined (flow stayed within radius " << fmt(a.rmin)
              << ", travel=" << fmt(e.travel) << ")\n";
  }
  std::cout << "out=" << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{
      "cpflow: a numerical laboratory for convex subgradient flows.\n"
      "Integrates x' in -grad f(x) by proximal stepping, estimates the limiting\n"
      "direction of x(t)/t, clusters the directions the trajectory visits, and\n"
      "decides whether two convex functions differ by a constant."};
  app.require_subcommand(1);
  app.fallthrough(false);
  // --h is the step-size flag (mirroring the config key h), so help is
  // reachable through --help only.
  app.set_help_flag("--help", "Print help and exit");

  RunFlowCli rf;
  auto* flow_cmd = app.add_subcommand(
      "run-flow",
      "Integrate the subgradient flow of one function; write the trajectory, "
      "speed plot, limiting-direction estimates, and secant clusters");
  flow_cmd->set_help_flag("--help", "Print help and exit");
  add_fn_options(flow_cmd, rf.fn, "", false);
  flow_cmd->add_option("--x0", rf.x0_text, "Start point (comma-separated); default random in box");
  flow_cmd->add_option("--h", rf.h, "Step size (fixed policy) or first step (geometric)");
  flow_cmd->add_option("--T", rf.horizon, "Time horizon (default 50, or the construction's own)");
  flow_cmd->add_option("--policy", rf.policy, "Step policy: fixed or geometric");
  flow_cmd->add_option("--ppd", rf.ppd, "Grid points per decade for the geometric policy");
  flow_cmd->add_option("--seed", rf.seed, "Seed for the random start point");
  flow_cmd->add_option("--out", rf.out_flag, "Output directory (else CPFLOW_OUT, else ./out)");
  flow_cmd->add_option("--config", rf.config_path, "key=value config file");
  flow_cmd->add_option("--cluster-tol", rf.cluster_tol, "Secant clustering radius");
  flow_cmd->add_option("--rmin", rf.rmin, "Escape radius below which secants are undefined");

  RunDetermineCli rd;
  auto* det_cmd = app.add_subcommand(
      "run-determine",
      "Decide whether two convex functions are equal up to an additive constant, "
      "by comparing slopes, limiting directions, and the recovered constant");
  det_cmd->set_help_flag("--help", "Print help and exit");
  add_fn_options(det_cmd, rd.fn_f, "", false);
  add_fn_options(det_cmd, rd.fn_g, "2", false);
  det_cmd->add_option("--probes", rd.probes, "Number of low-discrepancy probe points");
  det_cmd->add_option("--box", rd.box, "Half-width of the probe box");
  det_cmd->add_option("--h", rd.h, "Flow step size");
  det_cmd->add_option("--T", rd.horizon, "Flow horizon for limiting-direction estimates");
  det_cmd->add_option("--out", rd.out_flag, "Output directory (else CPFLOW_OUT, else ./out)");
  det_cmd->add_option("--config", rd.config_path, "key=value config file");

  RunCounterexampleCli rc;
  auto* ce_cmd = app.add_subcommand(
      "run-counterexample",
      "Build the 2-D construction whose flow direction oscillates between the "
      "axes; write its breakpoint schedule, profiles, flow, and secant clusters");
  ce_cmd->set_help_flag("--help", "Print help and exit");
  ce_cmd->add_option("--depth", rc.depth, "Number of speed-drop events (>= 1)");
  ce_cmd->add_option("--alpha", rc.alpha, "Plateau schedule: nsq (2^-n^2) or geometric");
  ce_cmd->add_option("--alpha-ratio", rc.alpha_ratio, "Ratio for the geometric schedule (> 1)");
  ce_cmd->add_option("--t-budget", rc.t_budget,
                     "Abort if a breakpoint would exceed this time");
  ce_cmd->add_option("--h", rc.h, "First step of the geometric time grid");
  ce_cmd->add_option("--ppd", rc.ppd, "Grid points per decade");
  ce_cmd->add_option("--T", rc.horizon, "Flow horizon (default: the construction's own)");
  ce_cmd->add_option("--out", rc.out_flag, "Output directory (else CPFLOW_OUT, else ./out)");
  ce_cmd->add_option("--config", rc.config_path, "key=value config file");
  ce_cmd->add_option("--cluster-tol", rc.cluster_tol, "Secant clustering radius");
  ce_cmd->add_option("--rmin", rc.rmin, "Escape radius below which secants are undefined");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, returns 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (flow_cmd->parsed()) return run_flow(rf, flow_cmd);
    if (det_cmd->parsed()) return run_determine(rd, det_cmd);
    if (ce_cmd->parsed()) return run_counterexample(rc, ce_cmd);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    if (e.line > 0)
      std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
    else
      std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ScheduleOverflowError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cpflow::app
