#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace bps {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Bounds of a generic NLP. Infinite entries mean "no bound"; a constraint row
/// with c_lower == c_upper is an equality.
struct NlpBounds {
  Eigen::VectorXd z_lower, z_upper;
  Eigen::VectorXd c_lower, c_upper;
};

/// Square sub-block B = J(rows, variables) of the constraint Jacobian.
class BasisFactorization {
 public:
  virtual ~BasisFactorization() = default;
  /// B D = R, column by column. R is indexed by basis rows, D by basic variables.
  virtual Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const = 0;
  /// B^T y = g. g is indexed by basic variables, y by basis rows.
  virtual Eigen::VectorXd solve_transpose(const Eigen::VectorXd& g) const = 0;
};

/// Equality rows that can be solved for an equal number of variables. The
/// remaining variables parameterize the reduced space used by the solver.
struct BasisPartition {
  std::vector<int> rows;
  std::vector<int> variables;
};

/// min f(z)  s.t.  c_lower <= c(z) <= c_upper,  z_lower <= z <= z_upper.
/// Multiplier convention: grad f + J^T y = 0 at a stationary point, so a
/// row active at its upper bound has y >= 0 and at its lower bound y <= 0.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;
  virtual NlpBounds bounds() const = 0;
  virtual Eigen::VectorXd initial_point() const = 0;

  virtual double objective(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd constraints(const Eigen::VectorXd& z) const = 0;
  virtual SparseMatrix jacobian(const Eigen::VectorXd& z) const = 0;

  /// Full symmetric Hessian of obj_factor * f + y^T c. The default takes
  /// central differences of the Lagrangian gradient, one variable at a time.
  virtual SparseMatrix hessian(const Eigen::VectorXd& z, double obj_factor,
                               const Eigen::VectorXd& y) const;

  virtual BasisPartition basis_partition() const { return {}; }
  /// Default: dense LU of the basis block extracted from `jac`.
  virtual std::unique_ptr<BasisFactorization> factor_basis(const Eigen::VectorXd& z,
                                                           const SparseMatrix& jac) const;
};

/// Small dense NLP assembled from closures; convenient for tests and examples.
class DenseNlp : public NlpProblem {
 public:
  int n = 0;
  int m = 0;
  NlpBounds limits;
  Eigen::VectorXd start;
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // optional
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> c;      // optional when m == 0
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac;    // optional

  int num_variables() const override { return n; }
  int num_constraints() const override { return m; }
  NlpBounds bounds() const override { return limits; }
  Eigen::VectorXd initial_point() const override { return start; }
  double objective(const Eigen::VectorXd& z) const override { return f(z); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override;
  SparseMatrix jacobian(const Eigen::VectorXd& z) const override;
};

}  // namespace bps
