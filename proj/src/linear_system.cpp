#include "bps/linear_system.hpp"

namespace bps {

LinearSystem assemble_linear_system(const BirkhoffSystem& sys) {
  const Eigen::Index n1 = sys.wB.size();
  LinearSystem lin;
  lin.A = Eigen::MatrixXd::Zero(n1 + 1, 2 * n1);
  lin.A.topLeftCorner(n1, n1).setIdentity();
  lin.A.topRightCorner(n1, n1) = -sys.Ba;
  lin.A.bottomRightCorner(1, n1) = sys.wB.transpose();

  lin.C = Eigen::MatrixXd::Zero(n1 + 1, 2);
  lin.C.col(0).setOnes();
  lin.C(n1, 0) = -1.0;
  lin.C(n1, 1) = 1.0;
  return lin;
}

}  // namespace bps
