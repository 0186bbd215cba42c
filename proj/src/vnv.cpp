#include "bps/vnv.hpp"

#include "bps/error.hpp"

#include <algorithm>
#include <cmath>

namespace bps {
namespace {

double inf_norm(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a) + std::abs(b)); }

// Bound violation of each row, zero when inside [lo, hi].
Eigen::VectorXd violation(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::max({lo[i] - v[i], v[i] - hi[i], 0.0});
  return out;
}

// Partial derivatives of the Lagrangian of the Hamiltonian
//   Hbar = cost_scale * F + lambda^T f + mu^T h
// at one node, with respect to x, u and t.
struct HamiltonianPartials {
  double value = 0.0;      // cost_scale * F + lambda^T f
  double magnitude = 0.0;  // |cost_scale * F| + sum |lambda_i f_i|
  Eigen::VectorXd hx, hu;
  double ht = 0.0;
};

HamiltonianPartials partials(const OcpDefinition& ocp, const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t,
                             const Eigen::VectorXd& p, const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu) {
  const int nx = ocp.nx, nu = ocp.nu, np = ocp.np;
  const int cols = nx + nu + 1 + np;
  HamiltonianPartials out;
  Eigen::VectorXd f(nx);
  ocp.dynamics.evaluate(x, u, t, p, f);
  Eigen::MatrixXd jf(nx, cols);
  ocp.dynamics.differentiate(x, u, t, p, jf);
  Eigen::RowVectorXd g = lambda.transpose() * jf;
  out.value = lambda.dot(f);
  out.magnitude = lambda.cwiseProduct(f).cwiseAbs().sum();
  if (!ocp.running_cost.empty()) {
    Eigen::VectorXd F(1);
    ocp.running_cost.evaluate(x, u, t, p, F);
    Eigen::MatrixXd jF(1, cols);
    ocp.running_cost.differentiate(x, u, t, p, jF);
    g += ocp.cost_scale * jF.row(0);
    out.value += ocp.cost_scale * F[0];
    out.magnitude += std::abs(ocp.cost_scale * F[0]);
  }
  const int nh = ocp.num_path();
  if (nh > 0 && mu.size() == nh) {
    Eigen::MatrixXd jh(nh, cols);
    ocp.path.differentiate(x, u, t, p, jh);
    g += mu.transpose() * jh;
  }
  out.hx = g.segment(0, nx).transpose();
  out.hu = g.segment(nx, nu).transpose();
  out.ht = g[nx + nu];
  return out;
}

}  // namespace

const char* to_string(InterpolationRule r) {
  return r == InterpolationRule::ZeroOrderHold ? "zoh" : "linear";
}

InterpolationRule parse_interpolation_rule(const std::string& s) {
  if (s == "linear" || s == "pwl") return InterpolationRule::PiecewiseLinear;
  if (s == "zoh") return InterpolationRule::ZeroOrderHold;
  throw Error(ErrorCode::UnknownName, "unknown interpolation rule '" + s + "' (valid: linear, zoh)");
}

ControlSignal::ControlSignal(Eigen::VectorXd breakpoints, Eigen::MatrixXd values, InterpolationRule rule)
    : t_(std::move(breakpoints)), u_(std::move(values)), rule_(rule) {
  if (t_.size() < 2) throw Error(ErrorCode::InvalidArgument, "control interpolation needs at least two samples");
  if (u_.rows() != t_.size()) throw Error(ErrorCode::Shape, "control samples do not match breakpoints");
  for (Eigen::Index i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "control breakpoints must be strictly increasing (index " +
                                                  std::to_string(i) + ")");
    }
  }
}

Eigen::VectorXd ControlSignal::operator()(double t) const {
  const Eigen::Index n = t_.size();
  if (t <= t_[0]) return u_.row(0).transpose();
  if (t >= t_[n - 1]) return u_.row(n - 1).transpose();
  const Eigen::Index hi = std::upper_bound(t_.data(), t_.data() + n, t) - t_.data();
  const Eigen::Index lo = hi - 1;
  if (rule_ == InterpolationRule::ZeroOrderHold) return u_.row(lo).transpose();
  const double s = (t - t_[lo]) / (t_[hi] - t_[lo]);
  return ((1.0 - s) * u_.row(lo) + s * u_.row(hi)).transpose();
}

ControlSignal interpolate_control(const Eigen::VectorXd& t, const Eigen::MatrixXd& u, InterpolationRule rule) {
  return ControlSignal(t, u, rule);
}

PropagationResult propagate_ivp(const OcpDefinition& ocp, const ControlSignal& control, const Eigen::VectorXd& xa,
                                double ta, double tb, const Eigen::VectorXd& p_in, const OdeOptions& opts) {
  if (!(tb > ta)) throw Error(ErrorCode::InvalidInterval, "propagation needs tb > ta");
  if (xa.size() != ocp.nx) throw Error(ErrorCode::Shape, "initial state has the wrong dimension");
  if (control.dim() != ocp.nu) throw Error(ErrorCode::Shape, "control has the wrong dimension");
  const Eigen::VectorXd p = p_in.size() == ocp.np ? p_in : Eigen::VectorXd::Zero(ocp.np);

  std::vector<double> cuts{ta};
  for (Eigen::Index i = 0; i < control.breakpoints().size(); ++i) {
    const double t = control.breakpoints()[i];
    if (t > cuts.back() + 1e-12 * (1.0 + std::abs(t)) && t < tb - 1e-12 * (1.0 + std::abs(tb))) cuts.push_back(t);
  }
  cuts.push_back(tb);

  OdeRhs rhs = [&](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx.resize(ocp.nx);
    ocp.dynamics.evaluate(x, control(t), t, p, dx);
  };
  const OdeSamples samples = integrate_ode(rhs, xa, cuts, opts);

  PropagationResult r;
  r.t = samples.t;
  r.x.resize(static_cast<Eigen::Index>(samples.x.size()), ocp.nx);
  for (size_t i = 0; i < samples.x.size(); ++i) r.x.row(static_cast<Eigen::Index>(i)) = samples.x[i].transpose();
  r.terminal = samples.x.back();

  const int ne = ocp.num_events();
  r.terminal_error = Eigen::VectorXd::Zero(ne);
  if (ne > 0) {
    Eigen::VectorXd e(ne);
    ocp.events.evaluate(xa, r.terminal, ta, tb, p, e);
    r.terminal_error = violation(e, ocp.events_lower, ocp.events_upper);
  }
  const int nh = ocp.num_path();
  if (nh > 0) {
    Eigen::VectorXd h(nh);
    for (size_t i = 0; i < r.t.size(); ++i) {
      const Eigen::VectorXd x = samples.x[i];
      ocp.path.evaluate(x, control(r.t[i]), r.t[i], p, h);
      r.path_violation = std::max(r.path_violation, inf_norm(violation(h, ocp.path_lower, ocp.path_upper)));
    }
  }
  return r;
}

FeasibilityReport feasibility_certificate(const PropagationResult& prop, double tol_bc, double tol_path) {
  FeasibilityReport f;
  f.terminal_error_inf = inf_norm(prop.terminal_error);
  f.path_violation_inf = prop.path_violation;
  f.tol_bc = tol_bc;
  f.tol_path = tol_path;
  f.verdict = std::isfinite(f.terminal_error_inf) && std::isfinite(f.path_violation_inf) &&
              f.terminal_error_inf <= tol_bc && f.path_violation_inf <= tol_path;
  return f;
}

NamedCheck make_check(std::string name, double value, double tolerance, std::string detail) {
  NamedCheck c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.passed = std::isfinite(value) && value <= tolerance;
  c.detail = std::move(detail);
  return c;
}

NamedCheck unavailable_check(std::string name, std::string detail) {
  NamedCheck c;
  c.name = std::move(name);
  c.available = false;
  c.passed = true;
  c.value = std::numeric_limits<double>::quiet_NaN();
  c.detail = std::move(detail);
  return c;
}

const NamedCheck* PontryaginReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool PontryaginReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const NamedCheck& c) { return !c.available || c.passed; });
}

std::vector<int> costate_jumps(const Eigen::MatrixXd& lambda, double jump_factor) {
  const Eigen::Index n = lambda.rows();
  std::vector<int> out;
  if (n < 3) return out;
  std::vector<double> gaps(static_cast<size_t>(n - 1));
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    gaps[static_cast<size_t>(k)] = (lambda.row(k + 1) - lambda.row(k)).cwiseAbs().maxCoeff();
  }
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double floor = 1e-8 * (1.0 + inf_norm(lambda));
  for (size_t k = 0; k < gaps.size(); ++k) {
    if (gaps[k] > jump_factor * median + floor) out.push_back(static_cast<int>(k));
  }
  return out;
}

PontryaginReport pontryagin_report(const OcpDefinition& ocp, const TrajectorySolution& sol,
                                   const std::vector<SolutionCheck>& extra, const PontryaginOptions& opts) {
  static const char* kNames[] = {"hmc_complementarity", "hmc_stationarity",      "adjoint_consistency",
                                 "hamiltonian_value",   "hamiltonian_evolution", "transversality"};
  PontryaginReport rep;
  const int n = sol.nodes();
  const int nx = ocp.nx, nu = ocp.nu, nh = ocp.num_path(), ne = ocp.num_events();
  const bool primal_ok = n >= 2 && sol.X.rows() == n && sol.X.cols() == nx && sol.U.rows() == n && sol.U.cols() == nu;
  const bool shapes_ok = primal_ok && sol.has_duals && sol.lambda.rows() == n && sol.lambda.cols() == nx &&
                         (nh == 0 || (sol.mu.rows() == n && sol.mu.cols() == nh));
  if (!shapes_ok) {
    for (const char* name : kNames) rep.checks.push_back(unavailable_check(name, "duals missing or mis-shaped"));
    // Preset checks index the duals directly: run them on zero duals only to learn their names.
    TrajectorySolution probe;
    if (primal_ok) {
      probe = sol;
      probe.lambda = Eigen::MatrixXd::Zero(n, nx);
      probe.mu = Eigen::MatrixXd::Zero(n, nh);
      probe.nu = Eigen::VectorXd::Zero(2 * nx);
      probe.quadrature_weights = Eigen::VectorXd::Zero(n);
      probe.hamiltonian = Eigen::VectorXd::Zero(n);
    }
    for (const auto& check : extra) {
      NamedCheck c = unavailable_check("preset", "duals missing");
      if (primal_ok) {
        try {
          c = unavailable_check(check(probe).name, "duals missing");
        } catch (const std::exception&) {
        }
      }
      rep.checks.push_back(c);
    }
    return rep;
  }
  rep.available = true;
  const Eigen::VectorXd p = sol.p.size() == ocp.np ? sol.p : Eigen::VectorXd::Zero(ocp.np);
  const double sigma = sol.cost_scale;
  const double lam_inf = inf_norm(sol.lambda);
  const double mu_inf = nh > 0 ? inf_norm(sol.mu) : 0.0;
  const double dual_scale = std::max({sigma, lam_inf, mu_inf});

  std::vector<HamiltonianPartials> hp(static_cast<size_t>(n));
  double magnitude = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd mu = nh > 0 ? Eigen::VectorXd(sol.mu.row(k).transpose()) : Eigen::VectorXd(0);
    hp[static_cast<size_t>(k)] = partials(ocp, sol.X.row(k).transpose(), sol.U.row(k).transpose(), sol.t[k], p,
                                          sol.lambda.row(k).transpose(), mu);
    magnitude = std::max(magnitude, hp[static_cast<size_t>(k)].magnitude);
  }
  const double h_scale = std::max(magnitude, 1e-300);

  // (a) complementarity sign rule and stationarity of the Hamiltonian in u.
  if (nh > 0) {
    double worst = 0.0;
    int where = -1;
    Eigen::VectorXd h(nh);
    for (int k = 0; k < n; ++k) {
      ocp.path.evaluate(sol.X.row(k).transpose(), sol.U.row(k).transpose(), sol.t[k], p, h);
      for (int i = 0; i < nh; ++i) {
        const double lo = ocp.path_lower[i], hi = ocp.path_upper[i], m = sol.mu(k, i);
        const bool at_lo = std::isfinite(lo) && h[i] - lo <= opts.active_tol * (1.0 + std::abs(lo));
        const bool at_hi = std::isfinite(hi) && hi - h[i] <= opts.active_tol * (1.0 + std::abs(hi));
        double r = 0.0;
        if (at_lo && at_hi) r = 0.0;
        else if (at_lo) r = std::max(m, 0.0);
        else if (at_hi) r = std::max(-m, 0.0);
        else r = std::abs(m);
        if (r > worst) {
          worst = r;
          where = k;
        }
      }
    }
    rep.checks.push_back(make_check(kNames[0], worst / dual_scale, opts.complementarity_tol,
                                    where >= 0 ? "worst node " + std::to_string(where) : ""));
  } else {
    rep.checks.push_back(unavailable_check(kNames[0], "no path constraints"));
  }
  if (nu > 0) {
    double worst = 0.0;
    for (const auto& q : hp) worst = std::max(worst, q.hu.cwiseAbs().maxCoeff());
    rep.checks.push_back(make_check(kNames[1], worst / dual_scale, opts.stationarity_tol));
  } else {
    rep.checks.push_back(unavailable_check(kNames[1], "no controls"));
  }

  // (b) adjoint: lambda(k+2) - lambda(k) against the Simpson integral of -Hbar_x over
  // the two gaps (nonuniform spacing), skipping windows next to detected costate jumps.
  // With fewer than three nodes a single trapezoid gap is used.
  {
    const std::vector<int> jumps = costate_jumps(sol.lambda, opts.jump_factor);
    std::vector<char> skip(static_cast<size_t>(n), 0);
    for (int j : jumps) {
      for (int k = std::max(0, j - 1); k <= std::min(n - 2, j + 1); ++k) skip[static_cast<size_t>(k)] = 1;
    }
    auto hx = [&](int k) -> const Eigen::VectorXd& { return hp[static_cast<size_t>(k)].hx; };
    double worst = 0.0;
    int used = 0;
    if (n == 2) {
      if (!skip[0]) {
        const Eigen::VectorXd lhs = (sol.lambda.row(1) - sol.lambda.row(0)).transpose();
        const Eigen::VectorXd rhs = -0.5 * (sol.t[1] - sol.t[0]) * (hx(0) + hx(1));
        worst = (lhs - rhs).cwiseAbs().maxCoeff();
        used = 1;
      }
    }
    for (int k = 0; k + 2 < n; ++k) {
      if (skip[static_cast<size_t>(k)] || skip[static_cast<size_t>(k + 1)]) continue;
      const double h0 = sol.t[k + 1] - sol.t[k], h1 = sol.t[k + 2] - sol.t[k + 1];
      const double c0 = 2.0 - h1 / h0, c1 = (h0 + h1) * (h0 + h1) / (h0 * h1), c2 = 2.0 - h0 / h1;
      const Eigen::VectorXd lhs = (sol.lambda.row(k + 2) - sol.lambda.row(k)).transpose();
      const Eigen::VectorXd rhs = -(h0 + h1) / 6.0 * (c0 * hx(k) + c1 * hx(k + 1) + c2 * hx(k + 2));
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
      ++used;
    }
    rep.checks.push_back(make_check(kNames[2], worst / dual_scale, opts.adjoint_tol,
                                    std::to_string(used) + " windows, " + std::to_string(jumps.size()) + " jumps"));
  }

  // Endpoint Lagrangian Ebar = cost_scale * E + nu^T e and its partials.
  const int cols = 2 * nx + 2 + ocp.np;
  Eigen::VectorXd ebar = Eigen::VectorXd::Zero(cols);
  const bool nu_ok = ne == 0 || sol.nu.size() == ne;
  const Eigen::VectorXd xa = sol.xa.size() == nx ? sol.xa : Eigen::VectorXd(sol.X.row(0).transpose());
  const Eigen::VectorXd xb = sol.xb.size() == nx ? sol.xb : Eigen::VectorXd(sol.X.row(n - 1).transpose());
  if (nu_ok) {
    if (!ocp.endpoint_cost.empty()) {
      Eigen::MatrixXd je(1, cols);
      ocp.endpoint_cost.differentiate(xa, xb, sol.ta, sol.tf, p, je);
      ebar += sigma * je.row(0).transpose();
    }
    if (ne > 0) {
      Eigen::MatrixXd je(ne, cols);
      ocp.events.differentiate(xa, xb, sol.ta, sol.tf, p, je);
      ebar += je.transpose() * sol.nu;
    }
  }
  const bool left_node = near(sol.t[0], sol.ta);
  const bool right_node = near(sol.t[n - 1], sol.tf);

  // (c) Hamiltonian value at a free final time: H(tb) = -dEbar/dtb.
  if (!ocp.free_final_time()) {
    rep.checks.push_back(unavailable_check(kNames[3], "initial and final times are fixed"));
  } else if (!nu_ok || !right_node) {
    rep.checks.push_back(unavailable_check(kNames[3], nu_ok ? "no node at the final time" : "nu missing"));
  } else {
    const double target = -ebar[2 * nx + 1];
    const double r = std::abs(hp[static_cast<size_t>(n - 1)].value - target);
    rep.checks.push_back(make_check(kNames[3], r / std::max(h_scale, std::abs(target)), opts.hamiltonian_tol,
                                    "H(tb) = " + std::to_string(hp[static_cast<size_t>(n - 1)].value)));
  }

  // (d) Hamiltonian evolution: H(k+1) - H(k) against the trapezoid integral of Hbar_t.
  {
    double worst = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double dt = sol.t[k + 1] - sol.t[k];
      const double dh = hp[static_cast<size_t>(k + 1)].value - hp[static_cast<size_t>(k)].value;
      const double integral = 0.5 * dt * (hp[static_cast<size_t>(k)].ht + hp[static_cast<size_t>(k + 1)].ht);
      worst = std::max(worst, std::abs(dh - integral));
    }
    rep.checks.push_back(make_check(kNames[4], worst / h_scale, opts.hamiltonian_tol));
  }

  // (e) transversality: lambda(ta) = -dEbar/dxa, lambda(tb) = +dEbar/dxb.
  if (!nu_ok) {
    rep.checks.push_back(unavailable_check(kNames[5], "nu missing"));
  } else if (!left_node && !right_node) {
    rep.checks.push_back(unavailable_check(kNames[5], "no node at either endpoint"));
  } else {
    double worst = 0.0;
    if (left_node) worst = (sol.lambda.row(0).transpose() + ebar.segment(0, nx)).cwiseAbs().maxCoeff();
    if (right_node) {
      worst = std::max(worst, (sol.lambda.row(n - 1).transpose() - ebar.segment(nx, nx)).cwiseAbs().maxCoeff());
    }
    rep.checks.push_back(make_check(kNames[5], worst / dual_scale, opts.transversality_tol,
                                    left_node && right_node ? "both endpoints" : (left_node ? "ta only" : "tb only")));
  }

  for (const auto& check : extra) {
    try {
      rep.checks.push_back(check(sol));
    } catch (const std::exception& e) {
      NamedCheck c = make_check("preset", std::numeric_limits<double>::infinity(), 0.0, e.what());
      rep.checks.push_back(c);
    }
  }
  return rep;
}

VnvReport verify_solution(const OcpDefinition& ocp, const TrajectorySolution& sol,
                          const std::vector<SolutionCheck>& extra, const VerifyOptions& opts) {
  ocp.validate();
  if (sol.nodes() < 2 || sol.U.rows() != sol.nodes() || sol.U.cols() != ocp.nu || sol.X.cols() != ocp.nx) {
    throw Error(ErrorCode::Shape, "solution samples do not match the problem dimensions");
  }
  VnvReport rep;
  const ControlSignal u = interpolate_control(sol.t, sol.U, opts.rule);
  const Eigen::VectorXd xa = sol.xa.size() == ocp.nx ? sol.xa : Eigen::VectorXd(sol.X.row(0).transpose());
  rep.propagation = propagate_ivp(ocp, u, xa, sol.ta, sol.tf, sol.p, opts.ode);
  rep.feasibility = feasibility_certificate(rep.propagation, opts.tol_bc, opts.tol_path);
  rep.pontryagin = pontryagin_report(ocp, sol, extra, opts.pontryagin);
  return rep;
}

}  // namespace bps
