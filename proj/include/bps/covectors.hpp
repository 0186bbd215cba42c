#pragma once

#include "bps/solver.hpp"
#include "bps/transcription.hpp"

#include <Eigen/Core>

namespace bps {

/// Solver output split along the constraint blocks of a TranscribedNlp.
struct NlpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd y_linear;       // nx * (N + 2), node-major
  Eigen::VectorXd y_collocation;  // nx * (N + 1)
  Eigen::VectorXd y_events;       // ne
  Eigen::VectorXd y_path;         // nh * (N + 1)
  Eigen::VectorXd bound_multipliers;
  double objective = 0.0;  // includes cost_scale
  SolveStatus status = SolveStatus::MaxIter;
  KktResiduals kkt;
  int iterations = 0;
  std::string message;
};

NlpSolution split_solution(const TranscribedNlp& nlp, const NlpResult& result);

/// solve_nlp followed by split_solution.
NlpSolution solve_transcribed(const TranscribedNlp& nlp, const SolverOptions& opts = {});

/// Costates, path and event covectors sampled at the nodes. Columns are nodes.
/// All values carry the cost_scale factor of the transcription; divide by it
/// to compare with an unscaled problem.
struct DualTrajectories {
  Eigen::MatrixXd lambda;  // nx x (N + 1)
  Eigen::MatrixXd mu;      // nh x (N + 1), per unit time
  Eigen::VectorXd nu;      // ne
  Eigen::VectorXd hamiltonian;  // cost_scale * F + lambda^T f at each node
};

/// lambda_k = -y_collocation_k / wB_k and mu_k = y_path_k / (gamma wB_k), so that
/// H_u + mu^T h_u = 0 holds at every node with H = cost_scale * F + lambda^T f.
DualTrajectories extract_covectors(const NlpSolution& sol, const TranscribedNlp& nlp);

}  // namespace bps
