#pragma once

#include "bps/birkhoff.hpp"

#include <Eigen/Core>

namespace bps {

/// The linear block of the a-form discretization:
///   A_a = [ I    -Ba  ]      C_a = [ 1  0 ]
///         [ 0^T  wB^T ]            [ :  : ]
///                                  [ 1  0 ]
///                                  [-1  1 ]
/// so that A_a [X; V] = C_a [xa; xb] reads x_k = xa + sum_j Ba_kj v_j and
/// xb = xa + sum_j wB_j v_j (one copy per state component).
struct LinearSystem {
  Eigen::MatrixXd A;  // (N+2) x (2N+2)
  Eigen::MatrixXd C;  // (N+2) x 2
};

LinearSystem assemble_linear_system(const BirkhoffSystem& sys);

}  // namespace bps
