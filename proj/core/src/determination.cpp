#include "cpflow/determination.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cpflow/csv.hpp"

namespace cpflow {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::equal_up_to_constant: return "equal_up_to_constant";
    case Verdict::slope_mismatch: return "slope_mismatch";
    case Verdict::cp_mismatch: return "cp_mismatch";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

int verdict_exit_code(Verdict v) {
  switch (v) {
    case Verdict::equal_up_to_constant: return 0;
    case Verdict::slope_mismatch: return 3;
    case Verdict::cp_mismatch: return 3;
    case Verdict::inconclusive: return 4;
  }
  return 4;
}

double audit_slopes(const ConvexFn& f, const ConvexFn& g, std::span<const Vec> probes,
                    std::vector<SlopeAuditRow>* rows) {
  double gap = 0.0;
  for (const Vec& x : probes) {
    const double sf = slope(f, x);
    const double sg = slope(g, x);
    if (rows) rows->push_back({x, sf, sg});
    double d;
    if (std::isinf(sf) && std::isinf(sg))
      d = 0.0;  // both slopes infinite: no witnessed difference at this probe
    else if (std::isinf(sf) || std::isinf(sg))
      d = kInf;
    else
      d = std::abs(sf - sg);
    gap = std::max(gap, d);
  }
  return gap;
}

ConstantRecovery recover_constant(const ConvexFn& f, const ConvexFn& g,
                                  std::span<const Vec> probes, double push_T,
                                  const FlowConfig& cfg) {
  const int d = f.dimension();
  ConstantRecovery out;
  const Vec origin = Vec::Zero(d);
  out.constant = eval(f, origin) - eval(g, origin);

  auto add_point = [&](const Vec& x) {
    const double diff = eval(f, x) - eval(g, x);
    if (!std::isfinite(diff)) return;
    out.evidence.emplace_back(x, diff);
    out.spread = std::max(out.spread, std::abs(diff - out.constant));
  };

  FlowConfig push_cfg = cfg;
  push_cfg.horizon = push_T;
  for (const Vec& x : probes) {
    add_point(x);
    const Trajectory traj = integrate_flow(g, x, push_cfg);
    add_point(traj.points.back());
  }
  return out;
}

HessianIdentityResidual hessian_gradient_identity(const ConvexFn& f, const ConvexFn& g,
                                                  const Vec& x, double h) {
  auto one_side = [&](const ConvexFn& fn, Vec* hd_out) {
    const Vec grad = min_norm_subgrad(fn, x);
    const Mat H = fd_hessian(fn, x, h);
    const Vec hd = H * grad;
    // Central difference of q(y) = 0.5 ||grad fn(y)||^2 against H * grad.
    Vec q_grad(x.size());
    for (int j = 0; j < x.size(); ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double qp = 0.5 * min_norm_subgrad(fn, xp).squaredNorm();
      const double qm = 0.5 * min_norm_subgrad(fn, xm).squaredNorm();
      q_grad[j] = (qp - qm) / (2.0 * h);
    }
    *hd_out = hd;
    return (q_grad - hd).norm();
  };
  HessianIdentityResidual out{};
  Vec hf, hg;
  out.cross_f = one_side(f, &hf);
  out.cross_g = one_side(g, &hg);
  out.pair_residual = (hf - hg).norm();
  return out;
}

double phi_monotonicity(const ConvexFn& f, const ConvexFn& g, const Vec& x0,
                        const FlowConfig& cfg) {
  const Trajectory traj = integrate_flow(g, x0, cfg);
  double min_inc = kInf;
  double prev = 0.0;
  bool first = true;
  for (const Vec& x : traj.points) {
    const double phi = 0.5 * (min_norm_subgrad(f, x) - min_norm_subgrad(g, x)).squaredNorm();
    if (!first) min_inc = std::min(min_inc, phi - prev);
    prev = phi;
    first = false;
  }
  return min_inc;
}

DeterminationReport determine(const ConvexFn& f, const ConvexFn& g,
                              std::span<const Vec> probes, const FlowConfig& cfg,
                              const Tolerances& tols) {
  if (f.dimension() != g.dimension())
    throw DimensionError("determine: functions have different dimensions");
  if (probes.empty()) throw std::invalid_argument("determine: needs at least one probe");

  DeterminationReport rep;
  rep.tols = tols;
  rep.probe_count = static_cast<int>(probes.size());

  rep.slope_gap = audit_slopes(f, g, probes, &rep.slope_rows);
  if (rep.slope_gap > tols.slope_eq) {
    rep.verdict = Verdict::slope_mismatch;
    std::ostringstream n;
    n << "slope gap " << g17(rep.slope_gap) << " exceeds " << g17(tols.slope_eq);
    rep.notes.push_back(n.str());
    return rep;
  }

  // Direction estimates: limit-velocity method from the first three probes;
  // the estimate with the smallest last-step drift wins (deterministic).
  const std::size_t n_seeds = std::min<std::size_t>(3, probes.size());
  auto best_estimate = [&](const ConvexFn& fn) {
    CPEstimate best;
    double best_drift = kInf;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      CPEstimate est = cp_limit_velocity(fn, probes[i], cfg, tols.cp);
      double drift = kInf;
      if (est.history.size() >= 2)
        drift = (est.history[est.history.size() - 2].second - est.history.back().second).norm();
      if (drift < best_drift) {
        best_drift = drift;
        best = std::move(est);
      }
    }
    return best;
  };
  rep.p_f = best_estimate(f);
  rep.p_g = best_estimate(g);
  rep.cp_gap = (rep.p_f.p - rep.p_g.p).norm();
  if (rep.cp_gap > 2.0 * tols.cp) {
    rep.verdict = Verdict::cp_mismatch;
    std::ostringstream n;
    n << "direction gap " << g17(rep.cp_gap) << " exceeds " << g17(2.0 * tols.cp);
    rep.notes.push_back(n.str());
    return rep;
  }

  const ConstantRecovery rec = recover_constant(f, g, probes, 10.0, cfg);
  rep.constant = rec.constant;
  rep.constancy_spread = rec.spread;
  rep.difference_evidence = rec.evidence;
  if (rec.spread <= tols.constant) {
    rep.verdict = Verdict::equal_up_to_constant;
  } else {
    rep.verdict = Verdict::inconclusive;
    std::ostringstream n;
    n << "slopes and directions agree but the difference varies by " << g17(rec.spread)
      << " across probes (tolerance " << g17(tols.constant)
      << "); no verdict at this probe set";
    rep.notes.push_back(n.str());
  }
  return rep;
}

void write_report(const std::filesystem::path& path, const DeterminationReport& report,
                  bool with_evidence) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_report: cannot open " + path.string());

  auto vec_str = [](const Vec& v) {
    std::string s;
    for (int j = 0; j < v.size(); ++j) {
      if (j) s += ',';
      s += g17(v[j]);
    }
    return s;
  };

  out << "verdict=" << verdict_name(report.verdict) << '\n';
  out << "exit_code=" << verdict_exit_code(report.verdict) << '\n';
  out << "constant=" << g17(report.constant) << '\n';
  out << "slope_gap=" << g17(report.slope_gap) << '\n';
  out << "cp_gap=" << g17(report.cp_gap) << '\n';
  out << "constancy_spread=" << g17(report.constancy_spread) << '\n';
  out << "probe_count=" << report.probe_count << '\n';
  out << "tol_slope=" << g17(report.tols.slope_eq) << '\n';
  out << "tol_cp=" << g17(report.tols.cp) << '\n';
  out << "tol_constant=" << g17(report.tols.constant) << '\n';
  if (report.p_f.p.size() > 0) {
    out << "cp_f=" << vec_str(report.p_f.p) << '\n';
    out << "cp_f_method=" << cp_method_name(report.p_f.method) << '\n';
    out << "cp_f_converged=" << (report.p_f.converged ? 1 : 0) << '\n';
  }
  if (report.p_g.p.size() > 0) {
    out << "cp_g=" << vec_str(report.p_g.p) << '\n';
    out << "cp_g_method=" << cp_method_name(report.p_g.method) << '\n';
    out << "cp_g_converged=" << (report.p_g.converged ? 1 : 0) << '\n';
  }
  for (std::size_t i = 0; i < report.notes.size(); ++i)
    out << "note_" << i << "=" << report.notes[i] << '\n';

  if (!with_evidence) return;

  const std::filesystem::path dir = path.parent_path();
  const std::string stem = path.stem().string();
  if (!report.slope_rows.empty()) {
    const int d = static_cast<int>(report.slope_rows.front().x.size());
    CsvWriter w(dir / (stem + "_slope_audit.csv"));
    std::vector<std::string> head;
    for (int j = 0; j < d; ++j) head.push_back("x_" + std::to_string(j));
    head.push_back("slope_f");
    head.push_back("slope_g");
    w.header(head);
    for (const auto& r : report.slope_rows) {
      std::vector<double> row;
      for (int j = 0; j < d; ++j) row.push_back(r.x[j]);
      row.push_back(r.slope_f);
      row.push_back(r.slope_g);
      w.row(row);
    }
  }
  if (!report.difference_evidence.empty()) {
    const int d = static_cast<int>(report.difference_evidence.front().first.size());
    CsvWriter w(dir / (stem + "_difference.csv"));
    std::vector<std::string> head;
    for (int j = 0; j < d; ++j) head.push_back("x_" + std::to_string(j));
    head.push_back("f_minus_g");
    w.header(head);
    for (const auto& [x, diff] : report.difference_evidence) {
      std::vector<double> row;
      for (int j = 0; j < d; ++j) row.push_back(x[j]);
      row.push_back(diff);
      w.row(row);
    }
  }
}

}  // namespace cpflow
