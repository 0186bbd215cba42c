#pragma once

#include "bps/covectors.hpp"
#include "bps/grids.hpp"
#include "bps/ocp.hpp"
#include "bps/solution.hpp"

#include <vector>

namespace bps {

struct OcpSolveResult {
  NlpSolution nlp;
  DualTrajectories duals;
  TrajectorySolution solution;
  std::vector<int> orders;  // grid orders solved, last is the target
  std::vector<SolveStatus> statuses;
};

/// Pack a transcription solution into the grid-agnostic record.
TrajectorySolution make_solution(const TranscribedNlp& nlp, const NlpSolution& sol, const DualTrajectories& duals);

/// Piecewise-linear trajectory through the nodes of a solution, extended to
/// [ta, tf] with xa and xb. Controls are held at the end values outside the nodes.
std::function<void(double, Eigen::VectorXd&, Eigen::VectorXd&)> warm_start_trajectory(const TrajectorySolution& s);

/// Solve on each order of `ladder` below spec.order (ascending), each warm-started
/// from the previous one, then on spec.order. An initial_guess in opts skips the ladder.
OcpSolveResult solve_ocp(const OcpDefinition& ocp, const GridSpec& spec, const SolverOptions& opts = {},
                         const std::vector<int>& ladder = {});

}  // namespace bps
