#pragma once

// Verification works from node samples and the problem evaluators only; it never
// touches Birkhoff matrices or the transcription.

#include "bps/ocp.hpp"
#include "bps/ode.hpp"
#include "bps/solution.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace bps {

enum class InterpolationRule { PiecewiseLinear, ZeroOrderHold };

const char* to_string(InterpolationRule r);
InterpolationRule parse_interpolation_rule(const std::string& s);

/// u#(t) = sum_i u(t_i) zeta_i(t) with zeta_i(t_j) = delta_ij.
class ControlSignal {
 public:
  ControlSignal(Eigen::VectorXd breakpoints, Eigen::MatrixXd values, InterpolationRule rule);

  Eigen::VectorXd operator()(double t) const;
  const Eigen::VectorXd& breakpoints() const { return t_; }
  const Eigen::MatrixXd& values() const { return u_; }  // row i is u(t_i)
  InterpolationRule rule() const { return rule_; }
  int dim() const { return static_cast<int>(u_.cols()); }

 private:
  Eigen::VectorXd t_;
  Eigen::MatrixXd u_;
  InterpolationRule rule_;
};

/// Throws InvalidArgument on fewer than two samples or non-increasing times.
ControlSignal interpolate_control(const Eigen::VectorXd& t, const Eigen::MatrixXd& u,
                                  InterpolationRule rule = InterpolationRule::PiecewiseLinear);

struct PropagationResult {
  std::vector<double> t;
  Eigen::MatrixXd x;  // one row per sample
  Eigen::VectorXd terminal;
  Eigen::VectorXd terminal_error;  // event-bound violation at (xa, x#(tb)), >= 0
  double path_violation = 0.0;     // max path-bound violation over the samples
};

/// Integrates x#' = f(x#, u#(t), t, p) from xa over [ta, tb]. Control breakpoints
/// inside the span split the integration. With the default options N+1
/// breakpoints give at least 10(N+1) samples.
PropagationResult propagate_ivp(const OcpDefinition& ocp, const ControlSignal& control, const Eigen::VectorXd& xa,
                                double ta, double tb, const Eigen::VectorXd& p = {}, const OdeOptions& opts = {});

struct FeasibilityReport {
  double terminal_error_inf = 0.0;
  double path_violation_inf = 0.0;
  double tol_bc = 1e-3;
  double tol_path = 1e-3;
  bool verdict = false;
};

FeasibilityReport feasibility_certificate(const PropagationResult& prop, double tol_bc = 1e-3,
                                          double tol_path = 1e-3);

/// One scored residual. Unavailable checks (no duals, no endpoint node, fixed
/// times) are reported but do not count against the verdict.
struct NamedCheck {
  std::string name;
  bool available = true;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;
};

NamedCheck make_check(std::string name, double value, double tolerance, std::string detail = {});
NamedCheck unavailable_check(std::string name, std::string detail);

using SolutionCheck = std::function<NamedCheck(const TrajectorySolution&)>;

struct PontryaginOptions {
  double active_tol = 1e-5;        // |h - bound| below this counts as active
  double complementarity_tol = 1e-3;
  double stationarity_tol = 1e-3;
  double adjoint_tol = 2e-2;
  double hamiltonian_tol = 1e-2;
  double transversality_tol = 1e-2;
  double jump_factor = 5.0;        // gap |dlambda| > factor * median marks a jump
};

struct PontryaginReport {
  bool available = false;
  std::vector<NamedCheck> checks;

  const NamedCheck* find(const std::string& name) const;
  bool passed() const;
};

/// Necessary-condition residuals, each normalized by the dual scale
/// max(cost_scale, |lambda|_inf, |mu|_inf):
///   hmc_complementarity, hmc_stationarity, adjoint_consistency,
///   hamiltonian_value, hamiltonian_evolution, transversality,
/// followed by the problem-specific checks.
PontryaginReport pontryagin_report(const OcpDefinition& ocp, const TrajectorySolution& sol,
                                   const std::vector<SolutionCheck>& extra = {}, const PontryaginOptions& opts = {});

/// Node gaps (k, k+1) whose costate change exceeds jump_factor times the median.
std::vector<int> costate_jumps(const Eigen::MatrixXd& lambda, double jump_factor = 5.0);

struct VerifyOptions {
  InterpolationRule rule = InterpolationRule::PiecewiseLinear;
  OdeOptions ode;
  double tol_bc = 1e-3;
  double tol_path = 1e-3;
  PontryaginOptions pontryagin;
};

struct VnvReport {
  FeasibilityReport feasibility;
  PontryaginReport pontryagin;
  PropagationResult propagation;
  bool passed() const { return feasibility.verdict && pontryagin.passed(); }
};

/// Control interpolation, IVP propagation, feasibility certificate and the
/// Pontryagin report for one solution.
VnvReport verify_solution(const OcpDefinition& ocp, const TrajectorySolution& sol,
                          const std::vector<SolutionCheck>& extra = {}, const VerifyOptions& opts = {});

}  // namespace bps
