#include "bps/birkhoff.hpp"

#include "bps/error.hpp"
#include "bps/linear_system.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bps {
namespace {

// P_0..P_{nmax} at x, written into row `row` of out.
void legendre_row(double x, int nmax, Eigen::MatrixXd& out, Eigen::Index row) {
  out(row, 0) = 1.0;
  if (nmax >= 1) out(row, 1) = x;
  for (int n = 1; n < nmax; ++n) {
    out(row, n + 1) = ((2.0 * n + 1.0) * x * out(row, n) - n * out(row, n - 1)) / (n + 1.0);
  }
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

Eigen::MatrixXd lagrange_cardinals(const Eigen::VectorXd& nodes, const Eigen::VectorXd& points) {
  const Eigen::Index n = nodes.size();
  // Barycentric weights 1 / prod_{m != j} (tau_j - tau_m), kept as log-magnitude and sign.
  Eigen::VectorXd log_mag(n);
  Eigen::VectorXd sign(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0.0;
    int negatives = 0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (m == j) continue;
      const double d = nodes[j] - nodes[m];
      acc -= std::log(std::abs(d));
      if (d < 0) ++negatives;
    }
    log_mag[j] = acc;
    sign[j] = (negatives % 2 == 0) ? 1.0 : -1.0;
  }
  const double shift = n > 0 ? log_mag.maxCoeff() : 0.0;
  Eigen::VectorXd bary(n);
  for (Eigen::Index j = 0; j < n; ++j) bary[j] = sign[j] * std::exp(log_mag[j] - shift);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(points.size(), n);
  Eigen::VectorXd terms(n);
  for (Eigen::Index q = 0; q < points.size(); ++q) {
    const double s = points[q];
    Eigen::Index hit = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = s - nodes[j];
      if (d == 0.0) {
        hit = j;
        break;
      }
      terms[j] = bary[j] / d;
    }
    if (hit >= 0) {
      out(q, hit) = 1.0;
      continue;
    }
    out.row(q) = terms.transpose() / terms.sum();
  }
  return out;
}

BirkhoffSystem build_birkhoff(const Grid& grid) {
  const int n = grid.order();
  if (n < 1 || n > kMaxGridOrder) {
    throw Error(ErrorCode::InvalidOrder, "Birkhoff matrices need 1 <= N <= " +
                                             std::to_string(kMaxGridOrder) + ", got " +
                                             std::to_string(n));
  }
  if (grid.nodes.size() != n + 1 || grid.weights.size() != n + 1) {
    throw Error(ErrorCode::Shape, "grid arrays do not have N+1 entries");
  }

  // Legendre coefficients of every cardinal, by an (N+1)-point Gauss rule (exact to degree 2N+1).
  const Grid gauss = make_grid({GridFamily::Legendre, GridKind::Gauss, n});
  const Eigen::MatrixXd L = lagrange_cardinals(grid.nodes, gauss.nodes);  // (q, j)
  Eigen::MatrixXd P(n + 1, n + 1);                                        // (q, m)
  for (int q = 0; q <= n; ++q) legendre_row(gauss.nodes[q], n, P, q);
  Eigen::MatrixXd coeff = L.transpose() * gauss.weights.asDiagonal() * P;  // (j, m)
  for (int m = 0; m <= n; ++m) coeff.col(m) *= (2.0 * m + 1.0) / 2.0;

  // Antiderivatives of P_m at the grid nodes.
  Eigen::MatrixXd Pk(n + 1, n + 2);
  for (int k = 0; k <= n; ++k) legendre_row(grid.nodes[k], n + 1, Pk, k);
  Eigen::MatrixXd Qa(n + 1, n + 1);  // integral over [-1, tau_k]
  Eigen::MatrixXd Qb(n + 1, n + 1);  // minus the integral over [tau_k, 1]
  for (int k = 0; k <= n; ++k) {
    const double tau = grid.nodes[k];
    Qa(k, 0) = tau + 1.0;
    Qb(k, 0) = tau - 1.0;
    for (int m = 1; m <= n; ++m) {
      const double v = (Pk(k, m + 1) - Pk(k, m - 1)) / (2.0 * m + 1.0);
      Qa(k, m) = v;
      Qb(k, m) = v;
    }
  }

  BirkhoffSystem sys;
  sys.grid = grid;
  sys.Ba = Qa * coeff.transpose();
  sys.Bb = Qb * coeff.transpose();
  sys.wB = 2.0 * coeff.col(0);
  return sys;
}

std::vector<IdentityResidual> identity_residuals(const BirkhoffSystem& sys) {
  const Eigen::Index n1 = sys.wB.size();
  const GridKind kind = sys.grid.spec.kind;
  const bool lobatto = kind == GridKind::Lobatto;
  const bool left_node = kind != GridKind::Gauss;

  std::vector<IdentityResidual> out;
  const Eigen::MatrixXd diff =
      sys.Ba - sys.Bb - Eigen::VectorXd::Ones(n1) * sys.wB.transpose();
  out.push_back({"prop3", true, max_abs(diff)});
  out.push_back({"weights-match", true, max_abs(sys.wB - sys.grid.weights)});

  IdentityResidual exchange{"exchange", lobatto, 0.0};
  IdentityResidual last_row{"last-row", lobatto, 0.0};
  if (lobatto) {
    // (E Bb E)(k, j) = Bb(N-k, N-j)
    const Eigen::MatrixXd flipped = sys.Bb.reverse();
    exchange.value = max_abs(sys.Ba + flipped);
    last_row.value = max_abs(sys.Ba.row(n1 - 1).transpose() - sys.wB);
  }
  out.push_back(exchange);
  out.push_back(last_row);

  IdentityResidual row0{"row0", left_node, 0.0};
  if (left_node) row0.value = max_abs(sys.Ba.row(0));
  out.push_back(row0);
  return out;
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || !sv.allFinite()) {
    throw Error(ErrorCode::Numeric, "singular value decomposition failed");
  }
  const double smin = sv[sv.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv[0] / smin;
}

ConditionReport condition_report(const BirkhoffSystem& sys) {
  const Eigen::Index n1 = sys.wB.size();
  const LinearSystem lin = assemble_linear_system(sys);

  Eigen::MatrixXd full(lin.A.rows(), lin.A.cols() + lin.C.cols());
  full << lin.A, -lin.C;
  Eigen::MatrixXd block(n1, 2 * n1);
  block << Eigen::MatrixXd::Identity(n1, n1), -sys.Ba;

  ConditionReport rep;
  rep.order = sys.order();
  rep.cond_full = condition_number(full);
  rep.cond_block = condition_number(block);
  return rep;
}

ConditionReport condition_report(const Grid& grid) { return condition_report(build_birkhoff(grid)); }

}  // namespace bps
