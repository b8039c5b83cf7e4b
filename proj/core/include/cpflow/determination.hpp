#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cpflow/asymptotics.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/flow.hpp"
#include "cpflow/types.hpp"

namespace cpflow {

enum class Verdict {
  equal_up_to_constant,
  slope_mismatch,
  cp_mismatch,
  inconclusive,
};

const char* verdict_name(Verdict v);

/// Exit status contract shared with the CLI: 0 equal-up-to-constant,
/// 3 mismatch (slope or direction), 4 inconclusive.
int verdict_exit_code(Verdict v);

struct SlopeAuditRow {
  Vec x;
  double slope_f;
  double slope_g;
};

/// max |slope_f - slope_g| over the probes; rows returned for evidence.
double audit_slopes(const ConvexFn& f, const ConvexFn& g, std::span<const Vec> probes,
                    std::vector<SlopeAuditRow>* rows = nullptr);

struct ConstantRecovery {
  double constant = 0.0;  // f(0) - g(0), the candidate additive constant
  double spread = 0.0;    // max over evidence points of |(f-g)(x) - constant|
  std::vector<std::pair<Vec, double>> evidence;  // (point, (f-g)(point))
};

/// Candidate constant f(0) - g(0); the spread is measured over the probes
/// plus each probe advanced time `push_T` along the flow of g.
ConstantRecovery recover_constant(const ConvexFn& f, const ConvexFn& g,
                                  std::span<const Vec> probes, double push_T = 10.0,
                                  const FlowConfig& cfg = {});

struct HessianIdentityResidual {
  double pair_residual;  // ||H_f grad f - H_g grad g|| at x (finite differences)
  double cross_f;        // || FD-grad of 0.5||grad f||^2  -  H_f grad f ||
  double cross_g;
};

/// Finite-difference check of the gradient-flow alignment identity
/// grad(0.5 ||grad f||^2) = H_f grad f, compared between f and g.
/// Meaningful where both functions are twice differentiable near x.
HessianIdentityResidual hessian_gradient_identity(const ConvexFn& f, const ConvexFn& g,
                                                  const Vec& x, double h);

/// Integrates the flow of g from x0 and returns the minimum increment of
/// t -> 0.5 ||grad f - grad g||^2 along it (nonnegative when f and g differ
/// by a constant; a negative increment certifies a genuine difference).
double phi_monotonicity(const ConvexFn& f, const ConvexFn& g, const Vec& x0,
                        const FlowConfig& cfg);

struct DeterminationReport {
  Verdict verdict = Verdict::inconclusive;
  double constant = 0.0;
  double slope_gap = 0.0;
  double cp_gap = 0.0;
  double constancy_spread = 0.0;
  int probe_count = 0;
  Tolerances tols;

  std::vector<SlopeAuditRow> slope_rows;
  CPEstimate p_f, p_g;
  std::vector<std::pair<Vec, double>> difference_evidence;
  std::vector<std::string> notes;
};

/// Decision pipeline: slope audit -> direction-estimate comparison ->
/// constant recovery. Stops at the first mismatch; equal slopes and
/// directions with a small constancy spread yield equal_up_to_constant,
/// anything else is reported inconclusive (a first-class outcome, not an
/// error). Direction estimates use the limit-velocity method from the first
/// three probes as seeds.
DeterminationReport determine(const ConvexFn& f, const ConvexFn& g,
                              std::span<const Vec> probes, const FlowConfig& cfg = {},
                              const Tolerances& tols = {});

/// key=value serialization; grammar documented in the README. Evidence
/// tables (slope audit, difference probes) are written as CSV siblings when
/// `with_evidence` is set.
void write_report(const std::filesystem::path& path, const DeterminationReport& report,
                  bool with_evidence = true);

}  // namespace cpflow
