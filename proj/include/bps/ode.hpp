#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace bps {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dxdt)>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double fixed_step = 0.0;      // > 0 selects classical RK4 with this step
  int samples_per_segment = 10;  // at least this many output points per breakpoint
};

struct OdeSamples {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
};

/// Integrates x' = rhs(t, x) from x0 across increasing `breakpoints`, restarting
/// the integrator at each one so kinks of the right-hand side are not stepped over.
/// Adaptive mode uses the Dormand-Prince 5(4) pair. Throws Propagation on failure.
OdeSamples integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& x0, const std::vector<double>& breakpoints,
                         const OdeOptions& opts = {});

}  // namespace bps
