#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace bps {

using ConstVec = Eigen::Ref<const Eigen::VectorXd>;
using OutVec = Eigen::Ref<Eigen::VectorXd>;
using OutMat = Eigen::Ref<Eigen::MatrixXd>;

/// g(x, u, t, p) -> R^rows, evaluated at one instant.
/// The optional jacobian fills a rows x (nx + nu + 1 + np) matrix with columns
/// ordered [x, u, t, p]. Without it, central differences are used.
struct PointFunction {
  int rows = 0;
  std::function<void(ConstVec x, ConstVec u, double t, ConstVec p, OutVec out)> eval;
  std::function<void(ConstVec x, ConstVec u, double t, ConstVec p, OutMat jac)> jacobian;

  bool empty() const { return rows == 0 || !eval; }
  void evaluate(ConstVec x, ConstVec u, double t, ConstVec p, OutVec out) const;
  void differentiate(ConstVec x, ConstVec u, double t, ConstVec p, OutMat jac) const;
};

/// g(xa, xb, ta, tb, p) -> R^rows. Jacobian columns ordered [xa, xb, ta, tb, p].
struct EndpointFunction {
  int rows = 0;
  std::function<void(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p, OutVec out)> eval;
  std::function<void(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p, OutMat jac)> jacobian;

  bool empty() const { return rows == 0 || !eval; }
  void evaluate(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p, OutVec out) const;
  void differentiate(ConstVec xa, ConstVec xb, double ta, double tb, ConstVec p, OutMat jac) const;
};

/// Central-difference step used when no analytic jacobian is supplied.
inline double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

enum class TimeMode { FixedBoth, FreeFinal };

struct OcpGuess {
  double tb = 0.0;           // 0 selects the midpoint of the tb bounds
  Eigen::VectorXd xa, xb;    // straight-line state guess between these
  Eigen::VectorXd u;         // constant control guess (zeros when empty)
  Eigen::VectorXd p;
  // Optional full trajectory guess on [ta, tb]; overrides xa/xb/u when set.
  std::function<void(double t, Eigen::VectorXd& x, Eigen::VectorXd& u)> trajectory;
};

/// Bolza problem
///   minimize   cost_scale * ( E(xa, xb, ta, tb, p) + integral of F(x, u, t, p) dt )
///   subject to x' = f(x, u, t, p),
///              e_lower <= e(xa, xb, ta, tb, p) <= e_upper,
///              h_lower <= h(x, u, t, p) <= h_upper on [ta, tb].
struct OcpDefinition {
  std::string name;
  int nx = 0;
  int nu = 0;
  int np = 0;

  EndpointFunction endpoint_cost;  // rows 1, or empty for E = 0
  PointFunction running_cost;      // rows 1, or empty for F = 0
  PointFunction dynamics;          // rows nx

  EndpointFunction events;
  Eigen::VectorXd events_lower, events_upper;
  PointFunction path;
  Eigen::VectorXd path_lower, path_upper;

  TimeMode time_mode = TimeMode::FixedBoth;
  double ta = 0.0;
  double tb = 1.0;  // FixedBoth only
  double tb_lower = 0.0, tb_upper = 0.0;  // FreeFinal only

  Eigen::VectorXd p_lower, p_upper;  // empty means unbounded
  double cost_scale = 1.0;

  OcpGuess guess;

  bool free_final_time() const { return time_mode == TimeMode::FreeFinal; }
  int num_events() const { return events.empty() ? 0 : events.rows; }
  int num_path() const { return path.empty() ? 0 : path.rows; }

  /// Throws InvalidArgument on inconsistent dimensions or bounds.
  void validate() const;
};

}  // namespace bps
