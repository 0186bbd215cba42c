#pragma once

#include "bps/solver.hpp"

#include <Eigen/Core>

#include <string>

namespace bps {

/// Grid-agnostic record of a primal-dual solution; the interchange format
/// between solving and verification. Matrices are node-major: row k holds the
/// values at t[k].
struct TrajectorySolution {
  std::string problem;
  std::string grid;   // e.g. "cgl"; empty when produced outside the solver
  int order = 0;      // N

  Eigen::VectorXd t;
  Eigen::MatrixXd X, V, U;  // (N+1) x nx, (N+1) x nx, (N+1) x nu
  Eigen::VectorXd xa, xb, p;
  double ta = 0.0;
  double tf = 0.0;

  bool has_duals = false;
  Eigen::MatrixXd lambda;  // (N+1) x nx
  Eigen::MatrixXd mu;      // (N+1) x nh
  Eigen::VectorXd nu;
  Eigen::VectorXd hamiltonian;
  Eigen::VectorXd quadrature_weights;  // on [-1, 1]; t-domain weights are gamma * w

  double objective = 0.0;   // without cost_scale
  double cost_scale = 1.0;  // the duals and hamiltonian carry this factor
  std::string status = "Optimal";
  KktResiduals kkt;
  int iterations = 0;

  int nodes() const { return static_cast<int>(t.size()); }
};

}  // namespace bps
