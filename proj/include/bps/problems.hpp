#pragma once

#include "bps/grids.hpp"
#include "bps/ocp.hpp"
#include "bps/solver.hpp"
#include "bps/vnv.hpp"

#include <string>
#include <vector>

namespace bps {

struct BenchmarkProblem {
  std::string name;
  OcpDefinition ocp;
  GridSpec grid;            // recommended grid and order
  std::vector<int> ladder;  // warm-start orders below grid.order
  SolverOptions solver;
  VerifyOptions verify;  // tolerances the preset is judged at
  std::vector<SolutionCheck> checks;  // problem-specific necessary conditions
};

/// Vertical moon landing with mass depletion; free final time, bang-bang thrust.
BenchmarkProblem ml1();
/// Double integrator with the state constraint x <= 0.1.
BenchmarkProblem breakwell();
/// Low-thrust circle-to-circle transfer, minimum time, cost scaled by 0.01.
BenchmarkProblem orbit_transfer();
/// Double integrator rest-to-rest with closed-form solution u = 6 - 12t.
BenchmarkProblem lq_oracle();

/// Names accepted by make_problem: ml1, breakwell, orbit-xfer, lq.
std::vector<std::string> problem_names();
/// Throws UnknownName listing the valid names.
BenchmarkProblem make_problem(const std::string& name);

inline constexpr double kMl1ThrustMax = 1.227;
inline constexpr double kMl1Exhaust = 2.349;
inline constexpr double kBreakwellLimit = 0.1;
inline constexpr double kBreakwellDirac = 22.22;
inline constexpr double kOrbitThrust = 5e-4;

}  // namespace bps
