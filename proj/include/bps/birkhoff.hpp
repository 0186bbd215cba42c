#pragma once

#include "bps/grids.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace bps {

/// Birkhoff integration matrices of a grid.
///   Ba(k, j) =  integral of L_j over [-1, tau_k]
///   Bb(k, j) = -integral of L_j over [tau_k, 1]
///   wB(j)    =  integral of L_j over [-1, 1]
/// where L_j is the j-th Lagrange cardinal polynomial of the grid.
struct BirkhoffSystem {
  Grid grid;
  Eigen::MatrixXd Ba;
  Eigen::MatrixXd Bb;
  Eigen::VectorXd wB;

  int order() const { return grid.order(); }
};

BirkhoffSystem build_birkhoff(const Grid& grid);

/// Max-abs residual of one matrix identity. Identities that only hold for
/// some grid kinds are reported with applicable = false on the others.
struct IdentityResidual {
  std::string name;
  bool applicable = true;
  double value = 0.0;
};

/// Residuals named prop3, weights-match, exchange, last-row and row0.
std::vector<IdentityResidual> identity_residuals(const BirkhoffSystem& sys);

struct ConditionReport {
  int order = 0;
  double cond_full = 0.0;   // [A_a, -C_a], (N+2) x (2N+4)
  double cond_block = 0.0;  // [I, -Ba],    (N+1) x (2N+2)
};

ConditionReport condition_report(const Grid& grid);
ConditionReport condition_report(const BirkhoffSystem& sys);

/// 2-norm condition number (ratio of extreme singular values).
double condition_number(const Eigen::MatrixXd& m);

/// Lagrange cardinals of `nodes` evaluated at `points`: out(q, j) = L_j(points[q]).
/// Uses the barycentric form with log-scaled weights so large N does not overflow.
Eigen::MatrixXd lagrange_cardinals(const Eigen::VectorXd& nodes, const Eigen::VectorXd& points);

}  // namespace bps
