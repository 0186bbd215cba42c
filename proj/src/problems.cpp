#include "bps/problems.hpp"

#include "bps/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bps {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double inf_norm(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool ends_at(const TrajectorySolution& s, int k, double t) {
  return std::abs(s.t[k] - t) <= 1e-9 * (1.0 + std::abs(t));
}

// Largest deviation of y from its least-squares line in t.
double line_fit_deviation(const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(t.size(), 2);
  a.col(0) = t;
  a.col(1).setOnes();
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  return inf_norm(a * c - y);
}

// Events fixing every component of xa listed in `initial` and of xb listed in `final`.
EndpointFunction fixed_endpoints(int nx, std::vector<int> initial, std::vector<int> final) {
  EndpointFunction e;
  e.rows = static_cast<int>(initial.size() + final.size());
  e.eval = [initial, final](ConstVec xa, ConstVec xb, double, double, ConstVec, OutVec out) {
    Eigen::Index r = 0;
    for (int i : initial) out[r++] = xa[i];
    for (int i : final) out[r++] = xb[i];
  };
  e.jacobian = [nx, initial, final](ConstVec, ConstVec, double, double, ConstVec, OutMat jac) {
    jac.setZero();
    Eigen::Index r = 0;
    for (int i : initial) jac(r++, i) = 1.0;
    for (int i : final) jac(r++, nx + i) = 1.0;
  };
  return e;
}

EndpointFunction final_time_cost(int nx) {
  EndpointFunction e;
  e.rows = 1;
  e.eval = [](ConstVec, ConstVec, double, double tb, ConstVec, OutVec out) { out[0] = tb; };
  e.jacobian = [nx](ConstVec, ConstVec, double, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 2 * nx + 1) = 1.0;
  };
  return e;
}

// Hamiltonian cost_scale * F + lambda^T f recomputed at node k.
double node_hamiltonian(const OcpDefinition& ocp, const TrajectorySolution& s, int k) {
  Eigen::VectorXd f(ocp.nx);
  const Eigen::VectorXd p = s.p.size() == ocp.np ? s.p : Eigen::VectorXd::Zero(ocp.np);
  const Eigen::VectorXd x = s.X.row(k).transpose(), u = s.U.row(k).transpose();
  ocp.dynamics.evaluate(x, u, s.t[k], p, f);
  double h = s.lambda.row(k).dot(f);
  if (!ocp.running_cost.empty()) {
    Eigen::VectorXd F(1);
    ocp.running_cost.evaluate(x, u, s.t[k], p, F);
    h += s.cost_scale * F[0];
  }
  return h;
}

}  // namespace

BenchmarkProblem ml1() {
  BenchmarkProblem b;
  b.name = "ml1";
  OcpDefinition& o = b.ocp;
  o.name = "ml1";
  o.nx = 3;
  o.nu = 1;
  o.running_cost.rows = 1;
  o.running_cost.eval = [](ConstVec, ConstVec u, double, ConstVec, OutVec out) { out[0] = u[0] / kMl1Exhaust; };
  o.running_cost.jacobian = [](ConstVec, ConstVec, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 3) = 1.0 / kMl1Exhaust;
  };
  o.dynamics.rows = 3;
  o.dynamics.eval = [](ConstVec x, ConstVec u, double, ConstVec, OutVec out) {
    out[0] = x[1];
    out[1] = -1.0 + u[0] / x[2];
    out[2] = -u[0] / kMl1Exhaust;
  };
  o.dynamics.jacobian = [](ConstVec x, ConstVec u, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 1) = 1.0;
    jac(1, 2) = -u[0] / (x[2] * x[2]);
    jac(1, 3) = 1.0 / x[2];
    jac(2, 3) = -1.0 / kMl1Exhaust;
  };
  o.events = fixed_endpoints(3, {0, 1, 2}, {0, 1});
  o.events_lower = vec({1.0, -0.783, 1.0, 0.0, 0.0});
  o.events_upper = o.events_lower;
  o.path.rows = 1;
  o.path.eval = [](ConstVec, ConstVec u, double, ConstVec, OutVec out) { out[0] = u[0]; };
  o.path.jacobian = [](ConstVec, ConstVec, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 3) = 1.0;
  };
  o.path_lower = vec({0.0});
  o.path_upper = vec({kMl1ThrustMax});
  o.time_mode = TimeMode::FreeFinal;
  o.ta = 0.0;
  o.tb_lower = 0.2;
  o.tb_upper = 5.0;
  o.guess.tb = 1.5;
  o.guess.xa = vec({1.0, -0.783, 1.0});
  o.guess.xb = vec({0.0, 0.0, 0.6});
  o.guess.u = vec({0.6});
  b.grid = {GridFamily::Chebyshev, GridKind::Lobatto, 80};
  b.ladder = {};
  // End-node weights are O(1/N^2), so the barrier keeps those thrust samples about
  // mu / (gamma w |mu_k|) off the bound; a small final barrier pins them within 1e-3.
  b.solver.complementarity_tol = 1e-10;

  // Bang-bang structure: count of thrust samples away from both bounds.
  b.checks.push_back([](const TrajectorySolution& s) {
    int interior = 0, switches = 0;
    int last = -1;
    for (int k = 0; k < s.nodes(); ++k) {
      const double T = s.U(k, 0);
      const bool off = std::abs(T) <= 1e-3, on = std::abs(T - kMl1ThrustMax) <= 1e-3;
      if (!off && !on) ++interior;
      const int state = on ? 1 : (off ? 0 : -1);
      if (state >= 0) {
        if (last >= 0 && state != last) ++switches;
        last = state;
      }
    }
    return make_check("bang_bang", interior, 2.0,
                      std::to_string(interior) + " intermediate samples, " + std::to_string(switches) + " switches");
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    double worst = 0.0;
    for (int k = 0; k < s.nodes(); ++k) {
      const double T = s.U(k, 0), mu = s.mu(k, 0);
      if (std::abs(T) <= 1e-3) worst = std::max(worst, mu);
      if (std::abs(T - kMl1ThrustMax) <= 1e-3) worst = std::max(worst, -mu);
    }
    return make_check("thrust_complementarity", worst / s.cost_scale, 1e-3, "mu <= 0 at T = 0, mu >= 0 at T = max");
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    const Eigen::VectorXd l = s.lambda.col(0);
    const double dev = (l.array() - l.mean()).abs().maxCoeff();
    return make_check("lambda_h_constant", dev / std::max(s.cost_scale, inf_norm(s.lambda)), 1e-2);
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    const Eigen::VectorXd l = s.lambda.col(1);
    const double range = l.maxCoeff() - l.minCoeff();
    return make_check("lambda_v_affine", line_fit_deviation(s.t, l) / std::max(range, 1e-300), 1e-2);
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    const int n = s.nodes();
    if (!ends_at(s, n - 1, s.tf)) return unavailable_check("lambda_m_final", "no node at the final time");
    return make_check("lambda_m_final", std::abs(s.lambda(n - 1, 2)) / s.cost_scale, 1e-3);
  });
  return b;
}

BenchmarkProblem breakwell() {
  BenchmarkProblem b;
  b.name = "breakwell";
  OcpDefinition& o = b.ocp;
  o.name = "breakwell";
  o.nx = 2;
  o.nu = 1;
  o.running_cost.rows = 1;
  o.running_cost.eval = [](ConstVec, ConstVec u, double, ConstVec, OutVec out) { out[0] = 0.5 * u[0] * u[0]; };
  o.running_cost.jacobian = [](ConstVec, ConstVec u, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 2) = u[0];
  };
  o.dynamics.rows = 2;
  o.dynamics.eval = [](ConstVec x, ConstVec u, double, ConstVec, OutVec out) {
    out[0] = x[1];
    out[1] = u[0];
  };
  o.dynamics.jacobian = [](ConstVec, ConstVec, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 1) = 1.0;
    jac(1, 2) = 1.0;
  };
  o.events = fixed_endpoints(2, {0, 1}, {0, 1});
  o.events_lower = vec({0.0, 1.0, 0.0, -1.0});
  o.events_upper = o.events_lower;
  o.path.rows = 1;
  o.path.eval = [](ConstVec x, ConstVec, double, ConstVec, OutVec out) { out[0] = x[0]; };
  o.path.jacobian = [](ConstVec, ConstVec, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 0) = 1.0;
  };
  o.path_lower = vec({-kInf});
  o.path_upper = vec({kBreakwellLimit});
  o.ta = 0.0;
  o.tb = 1.0;
  o.guess.xa = vec({0.0, 1.0});
  o.guess.xb = vec({0.0, -1.0});
  o.guess.u = vec({-2.0});
  b.grid = {GridFamily::Chebyshev, GridKind::Lobatto, 100};

  const double l = kBreakwellLimit;
  const double contacts[2] = {3.0 * l, 1.0 - 3.0 * l};
  // Downward jumps of lambda_x, grouped into runs of consecutive flagged gaps.
  // Gaps touching the two outermost nodes at either end are skipped: there the
  // O(1/N^2) weights amplify the multiplier error of a nonsmooth costate.
  b.checks.push_back([contacts](const TrajectorySolution& s) {
    const Eigen::MatrixXd lx = s.lambda.col(0);
    const int last_gap = s.nodes() - 2;
    std::vector<int> gaps;
    for (int g : costate_jumps(lx)) {
      if (g >= 2 && g <= last_gap - 2) gaps.push_back(g);
    }
    std::vector<std::pair<double, double>> runs;  // (location, total change)
    for (size_t i = 0; i < gaps.size();) {
      size_t j = i;
      double wsum = 0.0, tsum = 0.0, change = 0.0;
      while (j < gaps.size() && (j == i || gaps[j] == gaps[j - 1] + 1)) {
        const int g = gaps[j];
        const double d = lx(g + 1, 0) - lx(g, 0);
        wsum += std::abs(d);
        tsum += std::abs(d) * 0.5 * (s.t[g] + s.t[g + 1]);
        change += d;
        ++j;
      }
      runs.emplace_back(tsum / wsum, change);
      i = j;
    }
    if (runs.size() != 2) {
      return make_check("lambda_x_staircase", kInf, 0.02, std::to_string(runs.size()) + " jumps found");
    }
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (runs[static_cast<size_t>(i)].second >= 0.0) {
        return make_check("lambda_x_staircase", kInf, 0.02, "jump is not downward");
      }
      worst = std::max(worst, std::abs(runs[static_cast<size_t>(i)].first - contacts[i]));
    }
    return make_check("lambda_x_staircase", worst, 0.02,
                      "jumps at t = " + std::to_string(runs[0].first) + ", " + std::to_string(runs[1].first));
  });
  // Quadrature mass of mu around each contact against the Dirac strength.
  b.checks.push_back([contacts](const TrajectorySolution& s) {
    if (s.quadrature_weights.size() != s.nodes()) {
      return unavailable_check("dirac_mass", "quadrature weights missing");
    }
    const double gamma = 0.5 * (s.tf - s.ta);
    const double mu_max = inf_norm(s.mu);
    double worst = 0.0;
    int most_nodes = 0;
    std::string detail;
    for (double tc : contacts) {
      double mass = 0.0;
      int count = 0;
      for (int k = 0; k < s.nodes(); ++k) {
        if (std::abs(s.t[k] - tc) > 0.05) continue;
        mass += gamma * s.quadrature_weights[k] * s.mu(k, 0) / s.cost_scale;
        if (std::abs(s.mu(k, 0)) > 1e-3 * mu_max) ++count;
      }
      worst = std::max(worst, std::abs(mass - kBreakwellDirac) / kBreakwellDirac);
      most_nodes = std::max(most_nodes, count);
      detail += (detail.empty() ? "masses " : ", ") + std::to_string(mass) + " (" + std::to_string(count) + " nodes)";
    }
    if (most_nodes > 3) worst = std::max(worst, kInf);
    return make_check("dirac_mass", worst, 0.1, detail);
  });
  // Boundary arc: x = l and u = 0 strictly inside [3l, 1 - 3l].
  b.checks.push_back([contacts](const TrajectorySolution& s) {
    double worst = 0.0;
    for (int k = 0; k < s.nodes(); ++k) {
      if (s.t[k] < contacts[0] + 0.02 || s.t[k] > contacts[1] - 0.02) continue;
      worst = std::max({worst, std::abs(s.X(k, 0) - kBreakwellLimit), 1e-2 * std::abs(s.U(k, 0))});
    }
    return make_check("boundary_arc", worst, 1e-3);
  });
  return b;
}

BenchmarkProblem orbit_transfer() {
  BenchmarkProblem b;
  b.name = "orbit-xfer";
  OcpDefinition& o = b.ocp;
  o.name = "orbit-xfer";
  o.nx = 4;
  o.nu = 1;
  o.endpoint_cost = final_time_cost(4);
  o.dynamics.rows = 4;
  o.dynamics.eval = [](ConstVec x, ConstVec u, double, ConstVec, OutVec out) {
    const double r = x[0], vr = x[2], vt = x[3];
    out[0] = vr;
    out[1] = vt / r;
    out[2] = vt * vt / r - 1.0 / (r * r) + kOrbitThrust * std::sin(u[0]);
    out[3] = -vr * vt / r + kOrbitThrust * std::cos(u[0]);
  };
  o.dynamics.jacobian = [](ConstVec x, ConstVec u, double, ConstVec, OutMat jac) {
    const double r = x[0], vr = x[2], vt = x[3];
    jac.setZero();
    jac(0, 2) = 1.0;
    jac(1, 0) = -vt / (r * r);
    jac(1, 3) = 1.0 / r;
    jac(2, 0) = -vt * vt / (r * r) + 2.0 / (r * r * r);
    jac(2, 3) = 2.0 * vt / r;
    jac(2, 4) = kOrbitThrust * std::cos(u[0]);
    jac(3, 0) = vr * vt / (r * r);
    jac(3, 2) = -vt / r;
    jac(3, 3) = -vr / r;
    jac(3, 4) = -kOrbitThrust * std::sin(u[0]);
  };
  o.events = fixed_endpoints(4, {0, 1, 2, 3}, {0, 2, 3});
  o.events_lower = vec({1.0, 0.0, 0.0, 1.0, 6.0, 0.0, std::sqrt(1.0 / 6.0)});
  o.events_upper = o.events_lower;
  o.time_mode = TimeMode::FreeFinal;
  o.ta = 0.0;
  o.tb_lower = 100.0;
  o.tb_upper = 5000.0;
  o.cost_scale = 0.01;

  // Tangential-thrust spiral: with a the thrust acceleration, r = (1 - a t)^-2 on
  // near-circular orbits, which reaches r = 6 at t = (1 - 1/sqrt 6) / a.
  const double a = kOrbitThrust;
  const double tf = (1.0 - 1.0 / std::sqrt(6.0)) / a;
  o.guess.tb = tf;
  o.guess.trajectory = [a](double t, Eigen::VectorXd& x, Eigen::VectorXd& u) {
    const double s = 1.0 - a * t;
    x.resize(4);
    x[0] = 1.0 / (s * s);
    x[1] = (1.0 - s * s * s * s) / (4.0 * a);
    x[2] = 2.0 * a / (s * s * s);
    x[3] = std::sqrt(1.0 / x[0]);
    u.resize(1);
    u[0] = 0.0;
  };
  b.grid = {GridFamily::Chebyshev, GridKind::Lobatto, 600};
  b.ladder = {20, 80};
  // Terminal radius is judged at 1e-2 for this transfer.
  b.verify.tol_bc = 1e-2;
  b.solver.max_inner_iters = 400;

  const OcpDefinition ocp = o;
  b.checks.push_back([](const TrajectorySolution& s) {
    return make_check("lambda_theta_zero", inf_norm(s.lambda.col(1)) / inf_norm(s.lambda), 1e-3);
  });
  b.checks.push_back([ocp](const TrajectorySolution& s) {
    double worst = 0.0;
    for (int k = 0; k < s.nodes(); ++k) {
      worst = std::max(worst, std::abs(node_hamiltonian(ocp, s, k) / s.cost_scale + 1.0));
    }
    return make_check("hamiltonian_minus_one", worst, 1e-2);
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    double worst = -kInf;
    for (int k = 0; k < s.nodes(); ++k) {
      const double al = s.U(k, 0);
      worst = std::max(worst, s.lambda(k, 2) * std::sin(al) + s.lambda(k, 3) * std::cos(al));
    }
    return make_check("hmc_inequality", worst / inf_norm(s.lambda), 1e-3);
  });
  return b;
}

BenchmarkProblem lq_oracle() {
  BenchmarkProblem b;
  b.name = "lq";
  OcpDefinition& o = b.ocp;
  o.name = "lq";
  o.nx = 2;
  o.nu = 1;
  o.running_cost.rows = 1;
  o.running_cost.eval = [](ConstVec, ConstVec u, double, ConstVec, OutVec out) { out[0] = 0.5 * u[0] * u[0]; };
  o.running_cost.jacobian = [](ConstVec, ConstVec u, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 2) = u[0];
  };
  o.dynamics.rows = 2;
  o.dynamics.eval = [](ConstVec x, ConstVec u, double, ConstVec, OutVec out) {
    out[0] = x[1];
    out[1] = u[0];
  };
  o.dynamics.jacobian = [](ConstVec, ConstVec, double, ConstVec, OutMat jac) {
    jac.setZero();
    jac(0, 1) = 1.0;
    jac(1, 2) = 1.0;
  };
  o.events = fixed_endpoints(2, {0, 1}, {0, 1});
  o.events_lower = vec({0.0, 0.0, 1.0, 0.0});
  o.events_upper = o.events_lower;
  o.ta = 0.0;
  o.tb = 1.0;
  o.guess.xa = vec({0.0, 0.0});
  o.guess.xb = vec({1.0, 0.0});
  b.grid = {GridFamily::Chebyshev, GridKind::Lobatto, 20};

  b.checks.push_back([](const TrajectorySolution& s) {
    double worst = 0.0;
    for (int k = 0; k < s.nodes(); ++k) worst = std::max(worst, std::abs(s.U(k, 0) - (6.0 - 12.0 * s.t[k])));
    return make_check("control_closed_form", worst, 1e-2);
  });
  b.checks.push_back([](const TrajectorySolution& s) {
    double worst = 0.0;
    for (int k = 0; k < s.nodes(); ++k) {
      worst = std::max(worst, std::abs(s.lambda(k, 0) / s.cost_scale + 12.0));
      worst = std::max(worst, std::abs(s.lambda(k, 1) / s.cost_scale - (-6.0 + 12.0 * s.t[k])));
    }
    return make_check("costate_closed_form", worst, 1e-2);
  });
  return b;
}

std::vector<std::string> problem_names() { return {"ml1", "breakwell", "orbit-xfer", "lq"}; }

BenchmarkProblem make_problem(const std::string& name) {
  if (name == "ml1") return ml1();
  if (name == "breakwell") return breakwell();
  if (name == "orbit-xfer") return orbit_transfer();
  if (name == "lq") return lq_oracle();
  throw Error(ErrorCode::UnknownName, "unknown problem '" + name + "' (valid: ml1, breakwell, orbit-xfer, lq)");
}

}  // namespace bps
