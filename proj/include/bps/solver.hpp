#pragma once

#include "bps/nlp.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace bps {

struct SolverOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-6;
  double complementarity_tol = 1e-6;
  int max_outer_iters = 60;    // barrier-parameter reductions
  int max_inner_iters = 500;   // Newton iterations over the whole solve
  double initial_penalty = 10.0;  // l1 merit-function penalty
  double penalty_growth = 10.0;
  double initial_barrier = 0.1;
  std::optional<Eigen::VectorXd> initial_guess;
  int print_level = 0;  // 1: one line per iteration on stderr

  /// Throws InvalidArgument when a tolerance is not positive or growth <= 1.
  void validate() const;
};

enum class SolveStatus { Optimal, Feasible, MaxIter, Diverged };

const char* to_string(SolveStatus s);
SolveStatus parse_status(const std::string& s);

/// Stationarity is ||grad f + J^T y - z_L + z_U||_inf / (1 + largest multiplier);
/// feasibility is the largest absolute violation of an equality or of a slacked
/// inequality; complementarity the largest bound-slack times bound-multiplier.
struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
};

struct NlpResult {
  Eigen::VectorXd z;
  Eigen::VectorXd y;                 // one multiplier per constraint row
  Eigen::VectorXd bound_multipliers;  // z_U - z_L duals: >= 0 at an upper bound
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  KktResiduals kkt;
  int iterations = 0;
  int barrier_updates = 0;
  std::string message;
};

/// Primal-dual interior-point solve. Inequalities are slacked; equality rows
/// named by the problem's basis partition are eliminated through its basis
/// factorization and the step is computed in the remaining reduced space.
NlpResult solve_nlp(const NlpProblem& problem, const SolverOptions& opts = {});

}  // namespace bps
