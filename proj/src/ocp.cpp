#include "bps/ocp.hpp"

#include "bps/error.hpp"

#include <cmath>

namespace bps {

void PointFunction::evaluate(ConstVec x, ConstVec u, double t, ConstVec p, OutVec out) const {
  if (empty()) {
    out.setZero();
    return;
  }
  eval(x, u, t, p, out);
}

void PointFunction::differentiate(ConstVec x, ConstVec u, double t, ConstVec p, OutMat jac) const {
  const Eigen::Index nx = x.size(), nu = u.size(), np = p.size();
  if (empty()) {
    jac.setZero();
    return;
  }
  if (jacobian) {
    jacobian(x, u, t, p, jac);
    return;
  }
  Eigen::VectorXd arg(nx + nu + 1 + np);
  arg << x, u, t, p;
  Eigen::VectorXd plus(rows), minus(rows);
  for (Eigen::Index c = 0; c < arg.size(); ++c) {
    const double h = fd_step(arg[c]);
    Eigen::VectorXd a = arg;
    a[c] = arg[c] + h;
    eval(a.head(nx), a.segment(nx, nu), a[nx + nu], a.tail(np), plus);
    a[c] = arg[c] - h;
    eval(a.head(nx), a.segment(nx, nu), a[nx + nu], a.tail(np), minus);
    jac.col(c) = (plus - minus) / (2.0 * h);
  }
}

void EndpointFunction::evaluate(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p,
                                OutVec out) const {
  if (empty()) {
    out.setZero();
    return;
  }
  eval(xa, xb, ta, tb, p, out);
}

void EndpointFunction::differentiate(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p,
                                     OutMat jac) const {
  const Eigen::Index nx = xa.size(), np = p.size();
  if (empty()) {
    jac.setZero();
    return;
  }
  if (jacobian) {
    jacobian(xa, xb, ta, tb, p, jac);
    return;
  }
  Eigen::VectorXd arg(2 * nx + 2 + np);
  arg << xa, xb, ta, tb, p;
  Eigen::VectorXd plus(rows), minus(rows);
  for (Eigen::Index c = 0; c < arg.size(); ++c) {
    const double h = fd_step(arg[c]);
    Eigen::VectorXd a = arg;
    a[c] = arg[c] + h;
    eval(a.head(nx), a.segment(nx, nx), a[2 * nx], a[2 * nx + 1], a.tail(np), plus);
    a[c] = arg[c] - h;
    eval(a.head(nx), a.segment(nx, nx), a[2 * nx], a[2 * nx + 1], a.tail(np), minus);
    jac.col(c) = (plus - minus) / (2.0 * h);
  }
}

void OcpDefinition::validate() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "problem '" + name + "': " + what);
  };
  if (nx < 1) fail("needs at least one state");
  if (nu < 0 || np < 0) fail("negative dimension");
  if (dynamics.empty() || dynamics.rows != nx) fail("dynamics must return nx values");
  if (!running_cost.empty() && running_cost.rows != 1) fail("running cost must be scalar");
  if (!endpoint_cost.empty() && endpoint_cost.rows != 1) fail("endpoint cost must be scalar");
  const int ne = num_events(), nh = num_path();
  if (events_lower.size() != ne || events_upper.size() != ne) fail("event bounds do not match event count");
  if (path_lower.size() != nh || path_upper.size() != nh) fail("path bounds do not match path count");
  for (int i = 0; i < ne; ++i) {
    if (!(events_lower[i] <= events_upper[i])) fail("event bound " + std::to_string(i) + " has lower > upper");
  }
  for (int i = 0; i < nh; ++i) {
    if (!(path_lower[i] <= path_upper[i])) fail("path bound " + std::to_string(i) + " has lower > upper");
  }
  if (p_lower.size() != 0 && p_lower.size() != np) fail("parameter lower bound has wrong size");
  if (p_upper.size() != 0 && p_upper.size() != np) fail("parameter upper bound has wrong size");
  if (!(cost_scale > 0.0) || !std::isfinite(cost_scale)) fail("cost_scale must be positive");
  if (time_mode == TimeMode::FixedBoth) {
    if (!(tb > ta)) {
      throw Error(ErrorCode::InvalidInterval, "problem '" + name + "': final time must exceed initial time");
    }
  } else {
    if (!(tb_lower > ta) || !(tb_upper >= tb_lower)) {
      throw Error(ErrorCode::InvalidInterval,
                  "problem '" + name + "': final-time bounds must satisfy ta < tb_lower <= tb_upper");
    }
  }
}

}  // namespace bps
