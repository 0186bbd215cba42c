#pragma once

#include "bps/birkhoff.hpp"
#include "bps/nlp.hpp"
#include "bps/ocp.hpp"

#include <memory>

namespace bps {

/// Affine time map t = Gamma(tau) = gamma * tau + (tb + ta) / 2, gamma = (tb - ta) / 2.
struct DomainMap {
  double ta = -1.0;
  double tb = 1.0;

  double gamma() const { return 0.5 * (tb - ta); }
  double operator()(double tau) const { return gamma() * tau + 0.5 * (tb + ta); }
};

DomainMap affine_domain_map(double ta, double tb);

/// Index map of the decision vector z = [X, V, U, xa, xb, tb?, p].
/// X, V and U are stored node-major: entry (k, i) lives at k * dim + i.
struct DecisionLayout {
  int nx = 0, nu = 0, np = 0;
  int nodes = 0;  // N + 1
  bool free_tb = false;

  int x(int k, int i) const { return k * nx + i; }
  int v(int k, int i) const { return v0() + k * nx + i; }
  int u(int k, int i) const { return u0() + k * nu + i; }
  int xa(int i) const { return xa0() + i; }
  int xb(int i) const { return xb0() + i; }
  int tb() const { return free_tb ? xb0() + nx : -1; }
  int p(int i) const { return p0() + i; }

  int v0() const { return nx * nodes; }
  int u0() const { return 2 * nx * nodes; }
  int xa0() const { return u0() + nu * nodes; }
  int xb0() const { return xa0() + nx; }
  int p0() const { return xb0() + nx + (free_tb ? 1 : 0); }
  int size() const { return p0() + np; }
};

/// Row map of the constraint vector: linear Birkhoff rows (k = 0..N+1, node-major),
/// collocation rows V_k - gamma f_k, events, then path rows node-major.
struct ConstraintLayout {
  int nx = 0, ne = 0, nh = 0;
  int nodes = 0;

  int linear(int k, int i) const { return k * nx + i; }  // k in [0, N+1]
  int collocation(int k, int i) const { return collocation0() + k * nx + i; }
  int event(int i) const { return event0() + i; }
  int path(int k, int i) const { return path0() + k * nh + i; }

  int collocation0() const { return nx * (nodes + 1); }
  int event0() const { return collocation0() + nx * nodes; }
  int path0() const { return event0() + ne; }
  int size() const { return path0() + nh * nodes; }
};

/// Problem P_a as an NLP: minimize cost_scale * (E + gamma * wB^T F) subject to the
/// linear Birkhoff block, collocation V = gamma f, event bounds and path bounds at
/// every node.
class TranscribedNlp : public NlpProblem {
 public:
  TranscribedNlp(OcpDefinition ocp, std::shared_ptr<const BirkhoffSystem> sys);

  const OcpDefinition& ocp() const { return ocp_; }
  const BirkhoffSystem& birkhoff() const { return *sys_; }
  const Grid& grid() const { return sys_->grid; }
  const DecisionLayout& layout() const { return layout_; }
  const ConstraintLayout& rows() const { return rows_; }

  /// Final time encoded in z (the fixed value when tb is not a decision).
  double final_time(const Eigen::VectorXd& z) const;
  DomainMap domain(const Eigen::VectorXd& z) const;
  /// Node times Gamma(tau_k).
  Eigen::VectorXd node_times(const Eigen::VectorXd& z) const;

  /// Default guess: straight-line X between the guess endpoints (or the guess
  /// trajectory), constant U, midpoint tb when none is given, V = gamma f(X, U).
  Eigen::VectorXd default_guess() const;
  /// Guess built from a trajectory callback on [ta, tb].
  Eigen::VectorXd guess_from(double tb,
                             const std::function<void(double, Eigen::VectorXd&, Eigen::VectorXd&)>& traj,
                             const Eigen::VectorXd& p) const;

  int num_variables() const override { return layout_.size(); }
  int num_constraints() const override { return rows_.size(); }
  NlpBounds bounds() const override;
  Eigen::VectorXd initial_point() const override;
  void set_initial_point(Eigen::VectorXd z);

  double objective(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override;
  SparseMatrix jacobian(const Eigen::VectorXd& z) const override;
  SparseMatrix hessian(const Eigen::VectorXd& z, double obj_factor,
                       const Eigen::VectorXd& y) const override;

  /// Basic variables X, V, xb against the linear and collocation rows.
  BasisPartition basis_partition() const override;
  std::unique_ptr<BasisFactorization> factor_basis(const Eigen::VectorXd& z,
                                                   const SparseMatrix& jac) const override;

  /// Throws NonFinite naming the evaluator if any block is not finite at z.
  void check_finite(const Eigen::VectorXd& z) const;

 private:
  struct NodeView;
  NodeView node(const Eigen::VectorXd& z, int k) const;

  OcpDefinition ocp_;
  std::shared_ptr<const BirkhoffSystem> sys_;
  DecisionLayout layout_;
  ConstraintLayout rows_;
  Eigen::VectorXd start_;
};

struct NlpEvaluation {
  double objective = 0.0;
  Eigen::VectorXd constraints;
  SparseMatrix jacobian;
};

/// Objective, constraint vector and Jacobian at z. Throws NonFinite naming the
/// first offending constraint row.
NlpEvaluation evaluate_nlp(const TranscribedNlp& nlp, const Eigen::VectorXd& z);

/// Throws NonFinite naming the evaluator when the default guess is not finite.
std::shared_ptr<TranscribedNlp> transcribe(const OcpDefinition& ocp,
                                           std::shared_ptr<const BirkhoffSystem> sys);

}  // namespace bps
