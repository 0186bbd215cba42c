#include "bps/ode.hpp"

#include "bps/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>

namespace bps {
namespace {

using State = std::vector<double>;
namespace odeint = boost::numeric::odeint;

}  // namespace

OdeSamples integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& x0, const std::vector<double>& breakpoints,
                         const OdeOptions& opts) {
  if (breakpoints.size() < 2) throw Error(ErrorCode::InvalidArgument, "integration needs at least two breakpoints");
  for (size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "breakpoints must be strictly increasing");
    }
  }
  if (opts.samples_per_segment < 1 || !(opts.rtol > 0.0) || !(opts.atol > 0.0) || opts.fixed_step < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid integrator options");
  }
  const Eigen::Index n = x0.size();
  Eigen::VectorXd xe(n), dx(n);
  auto system = [&](const State& x, State& dxdt, double t) {
    for (Eigen::Index i = 0; i < n; ++i) xe[i] = x[static_cast<size_t>(i)];
    rhs(t, xe, dx);
    for (Eigen::Index i = 0; i < n; ++i) dxdt[static_cast<size_t>(i)] = dx[i];
  };
  auto to_eigen = [n](const State& s) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = s[static_cast<size_t>(i)];
    return v;
  };

  // Output intervals per piece, chosen so the total sample count is at least
  // samples_per_segment times the number of breakpoints.
  const size_t pieces = breakpoints.size() - 1;
  const int m = static_cast<int>((static_cast<size_t>(opts.samples_per_segment) * breakpoints.size() + pieces - 1) /
                                 pieces);
  OdeSamples out;
  State x(x0.data(), x0.data() + n);
  out.t.push_back(breakpoints.front());
  out.x.push_back(x0);
  try {
    for (size_t seg = 0; seg + 1 < breakpoints.size(); ++seg) {
      const double t0 = breakpoints[seg], t1 = breakpoints[seg + 1];
      std::vector<double> times(static_cast<size_t>(m) + 1);
      for (int i = 0; i <= m; ++i) times[static_cast<size_t>(i)] = t0 + (t1 - t0) * i / m;
      times.back() = t1;
      std::vector<double> seg_t;
      std::vector<Eigen::VectorXd> seg_x;
      auto observer = [&](const State& s, double t) {
        seg_t.push_back(t);
        seg_x.push_back(to_eigen(s));
      };
      if (opts.fixed_step > 0.0) {
        odeint::runge_kutta4<State> stepper;
        // Whole number of steps per output interval so samples land on the grid.
        for (int i = 0; i < m; ++i) {
          const double a = times[static_cast<size_t>(i)], b = times[static_cast<size_t>(i) + 1];
          const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / opts.fixed_step - 1e-9)));
          const double h = (b - a) / steps;
          double t = a;
          for (int k = 0; k < steps; ++k, t += h) stepper.do_step(system, x, t, h);
          observer(x, b);
        }
      } else {
        auto stepper = odeint::make_dense_output(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_times(stepper, system, x, times.begin(), times.end(), (t1 - t0) / (10.0 * m),
                                observer, odeint::max_step_checker(100000));
        seg_t.erase(seg_t.begin());
        seg_x.erase(seg_x.begin());
      }
      for (size_t i = 0; i < seg_t.size(); ++i) {
        if (!seg_x[i].allFinite()) {
          throw Error(ErrorCode::Propagation, "state became non-finite at t = " + std::to_string(seg_t[i]));
        }
        out.t.push_back(seg_t[i]);
        out.x.push_back(seg_x[i]);
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Propagation, std::string("integration failed: ") + e.what());
  }
  return out;
}

}  // namespace bps
