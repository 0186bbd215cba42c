#include "bps/nlp.hpp"

#include "bps/error.hpp"

#include <Eigen/LU>

#include <cmath>

namespace bps {
namespace {

double hessian_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

class DenseLuBasis : public BasisFactorization {
 public:
  explicit DenseLuBasis(const Eigen::MatrixXd& b) : lu_(b) {}
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const override { return lu_.solve(rhs); }
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& g) const override {
    return lu_.transpose().solve(g);
  }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

SparseMatrix NlpProblem::hessian(const Eigen::VectorXd& z, double obj_factor,
                                 const Eigen::VectorXd& y) const {
  const int n = num_variables();
  auto lagrangian_gradient = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd g = obj_factor * gradient(w);
    if (num_constraints() > 0) g += jacobian(w).transpose() * y;
    return g;
  };
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd w = z;
  for (int j = 0; j < n; ++j) {
    const double step = hessian_step(z[j]);
    w[j] = z[j] + step;
    const Eigen::VectorXd gp = lagrangian_gradient(w);
    w[j] = z[j] - step;
    const Eigen::VectorXd gm = lagrangian_gradient(w);
    w[j] = z[j];
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  return sym.sparseView();
}

std::unique_ptr<BasisFactorization> NlpProblem::factor_basis(const Eigen::VectorXd&,
                                                             const SparseMatrix& jac) const {
  const BasisPartition part = basis_partition();
  const Eigen::Index nb = static_cast<Eigen::Index>(part.rows.size());
  if (static_cast<Eigen::Index>(part.variables.size()) != nb) {
    throw Error(ErrorCode::Shape, "basis partition is not square");
  }
  const Eigen::MatrixXd dense = Eigen::MatrixXd(jac);
  Eigen::MatrixXd b(nb, nb);
  for (Eigen::Index r = 0; r < nb; ++r) {
    for (Eigen::Index c = 0; c < nb; ++c) b(r, c) = dense(part.rows[r], part.variables[c]);
  }
  return std::make_unique<DenseLuBasis>(b);
}

Eigen::VectorXd DenseNlp::gradient(const Eigen::VectorXd& z) const {
  if (grad) return grad(z);
  Eigen::VectorXd g(n);
  Eigen::VectorXd w = z;
  for (int j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(z[j]));
    w[j] = z[j] + step;
    const double fp = f(w);
    w[j] = z[j] - step;
    const double fm = f(w);
    w[j] = z[j];
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Eigen::VectorXd DenseNlp::constraints(const Eigen::VectorXd& z) const {
  if (m == 0) return Eigen::VectorXd(0);
  return c(z);
}

SparseMatrix DenseNlp::jacobian(const Eigen::VectorXd& z) const {
  if (m == 0) return SparseMatrix(0, n);
  if (jac) return jac(z).sparseView();
  Eigen::MatrixXd j(m, n);
  Eigen::VectorXd w = z;
  for (int col = 0; col < n; ++col) {
    const double step = 1e-6 * std::max(1.0, std::abs(z[col]));
    w[col] = z[col] + step;
    const Eigen::VectorXd cp = c(w);
    w[col] = z[col] - step;
    const Eigen::VectorXd cm = c(w);
    w[col] = z[col];
    j.col(col) = (cp - cm) / (2.0 * step);
  }
  return j.sparseView();
}

}  // namespace bps
