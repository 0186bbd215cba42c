// One line per acceptance criterion: [PASS] or [FAIL], number, name, wall time, detail.
// Exit status is nonzero when any criterion fails.

#include "bps/birkhoff.hpp"
#include "bps/error.hpp"
#include "bps/grids.hpp"
#include "bps/pipeline.hpp"
#include "bps/problems.hpp"
#include "bps/solution_io.hpp"
#include "bps/vnv.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace bps;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  // Records a failed condition; the first few failures are kept in the detail.
  void require(bool cond, const std::string& what) {
    if (cond) return;
    if (ok || detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
    ok = false;
  }
  void note(const std::string& what) {
    if (ok) detail += (detail.empty() ? "" : "; ") + what;
  }
};

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<GridSpec> all_kinds(int order) {
  std::vector<GridSpec> out;
  for (GridFamily fam : {GridFamily::Legendre, GridFamily::Chebyshev})
    for (GridKind kind : {GridKind::Lobatto, GridKind::Radau, GridKind::Gauss}) out.push_back({fam, kind, order});
  return out;
}

const NamedCheck* check_named(const VnvReport& r, const std::string& name, Outcome& o) {
  const NamedCheck* c = r.pontryagin.find(name);
  o.require(c != nullptr, name + " missing");
  if (!c) return nullptr;
  o.require(c->available && c->passed, name + " = " + fmt("%.3g", c->value) + " (tol " + fmt("%.3g", c->tolerance) +
                                           ")" + (c->available ? "" : " unavailable"));
  return c;
}

Outcome grids() {
  Outcome o;
  double worst_sum = 0.0, worst_exact = 0.0;
  for (int n : {1, 2, 4, 8, 16, 32, 64}) {
    for (const GridSpec& spec : all_kinds(n)) {
      const std::string tag = grid_name(spec) + " N=" + std::to_string(n);
      const Grid g = make_grid(spec);
      o.require(g.size() == n + 1, tag + " size");
      for (Eigen::Index j = 0; j + 1 < g.size(); ++j) o.require(g.nodes[j] < g.nodes[j + 1], tag + " order");
      o.require(g.nodes.minCoeff() >= -1.0 && g.nodes.maxCoeff() <= 1.0, tag + " range");
      o.require((g.nodes[0] == -1.0) == g.includes_left(), tag + " left end");
      o.require((g.nodes[n] == 1.0) == g.includes_right(), tag + " right end");
      o.require(g.weights.minCoeff() > 0.0, tag + " positive weights");
      const double sum = std::abs(g.weights.sum() - 2.0);
      worst_sum = std::max(worst_sum, sum);
      o.require(sum <= 1e-13, tag + " sum " + fmt("%.2e", sum));
      const int degree = exactness_degree(spec);
      for (int m = 0; m <= degree; ++m) {
        const Eigen::VectorXd y = g.nodes.array().pow(m);
        const double exact = m % 2 == 0 ? 2.0 / (m + 1) : 0.0;
        const double d = std::abs(quadrature_defect(y, g, exact));
        worst_exact = std::max(worst_exact, d);
        o.require(d <= 1e-12, tag + " degree " + std::to_string(m) + " defect " + fmt("%.2e", d));
      }
    }
  }
  o.note("max |sum w - 2| " + fmt("%.1e", worst_sum) + ", max monomial defect " + fmt("%.1e", worst_exact));
  return o;
}

Outcome quadrature_defect_exp() {
  Outcome o;
  const double exact = std::exp(1.0) - std::exp(-1.0);
  for (GridFamily fam : {GridFamily::Chebyshev, GridFamily::Legendre}) {
    const Grid g = make_grid({fam, GridKind::Lobatto, 12});
    const double q = std::abs(quadrature_defect(g.nodes.array().exp(), g, exact));
    o.require(q < 1e-10, grid_name(g.spec) + " |Q| " + fmt("%.2e", q));
    o.note(grid_name(g.spec) + " |Q| " + fmt("%.1e", q));
  }
  return o;
}

Outcome identities() {
  Outcome o;
  double worst = 0.0;
  for (int n = 1; n <= 128; n *= 2) {
    for (const GridSpec& spec : all_kinds(n)) {
      const BirkhoffSystem sys = build_birkhoff(make_grid(spec));
      for (const IdentityResidual& r : identity_residuals(sys)) {
        if (!r.applicable) {
          o.require(spec.kind != GridKind::Lobatto, grid_name(spec) + " " + r.name + " not applicable");
          continue;
        }
        worst = std::max(worst, r.value);
        o.require(r.value <= 1e-11, grid_name(spec) + " N=" + std::to_string(n) + " " + r.name + " " +
                                        fmt("%.2e", r.value));
      }
    }
  }
  o.note("max residual " + fmt("%.1e", worst));
  return o;
}

Outcome interpolant_agreement() {
  Outcome o;
  for (const GridSpec& spec : all_kinds(20)) {
    const BirkhoffSystem sys = build_birkhoff(make_grid(spec));
    const Eigen::VectorXd dy = sys.grid.nodes.array().exp();
    const Eigen::VectorXd a = (std::exp(-1.0) + (sys.Ba * dy).array()).matrix();
    const Eigen::VectorXd b = (std::exp(1.0) + (sys.Bb * dy).array()).matrix();
    const double d = (a - b).cwiseAbs().maxCoeff();
    o.require(d <= 1e-10, grid_name(spec) + " " + fmt("%.2e", d));
    o.note(grid_name(spec) + " " + fmt("%.0e", d));
  }
  return o;
}

Outcome conditioning() {
  Outcome o;
  const auto cgl = [](int n) { return condition_report(make_grid({GridFamily::Chebyshev, GridKind::Lobatto, n})); };
  const ConditionReport big = cgl(500);
  o.require(std::abs(big.cond_block - 1.76) <= 0.05, "cond_block " + fmt("%.4f", big.cond_block));
  o.require(std::abs(big.cond_full / 22.0 - 1.0) <= 0.2, "cond_full " + fmt("%.3f", big.cond_full));
  o.note("N=500 cond_block " + fmt("%.4f", big.cond_block) + " cond_full " + fmt("%.3f", big.cond_full));
  for (int n : {50, 100}) {
    const double ratio = cgl(4 * n).cond_full / cgl(n).cond_full;
    o.require(std::abs(ratio / 2.0 - 1.0) <= 0.15, "ratio at N=" + std::to_string(n) + " " + fmt("%.3f", ratio));
    o.note("cond(" + std::to_string(4 * n) + ")/cond(" + std::to_string(n) + ") " + fmt("%.3f", ratio));
  }
  return o;
}

Outcome lq() {
  Outcome o;
  const BenchmarkProblem b = lq_oracle();
  const OcpSolveResult r = solve_ocp(b.ocp, {GridFamily::Chebyshev, GridKind::Lobatto, 20}, b.solver);
  const TrajectorySolution& s = r.solution;
  o.require(std::abs(s.objective - 6.0) <= 1e-4, "J " + fmt("%.8f", s.objective));
  double lx = 0.0;
  for (int k = 0; k < s.nodes(); ++k) lx = std::max(lx, std::abs(s.lambda(k, 0) / s.cost_scale + 12.0));
  o.require(lx <= 1e-2, "lambda_x deviation " + fmt("%.2e", lx));
  const double v0 = s.lambda(0, 1) / s.cost_scale, v1 = s.lambda(s.nodes() - 1, 1) / s.cost_scale;
  o.require(std::abs(v0 + 6.0) <= 1e-2 && std::abs(v1 - 6.0) <= 1e-2,
            "lambda_v ends " + fmt("%.5f", v0) + ", " + fmt("%.5f", v1));
  VerifyOptions vo = b.verify;
  vo.tol_bc = vo.tol_path = 1e-6;
  const VnvReport rep = verify_solution(b.ocp, s, b.checks, vo);
  o.require(rep.feasibility.verdict, "terminal error " + fmt("%.2e", rep.feasibility.terminal_error_inf));
  o.note("J " + fmt("%.10f", s.objective) + ", lambda_v " + fmt("%.5f", v0) + " -> " + fmt("%.5f", v1) +
         ", terminal error " + fmt("%.1e", rep.feasibility.terminal_error_inf));
  return o;
}

Outcome landing() {
  Outcome o;
  const BenchmarkProblem b = ml1();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver, b.ladder);
  const TrajectorySolution& s = r.solution;
  o.require(r.nlp.status == SolveStatus::Optimal, std::string("status ") + to_string(r.nlp.status));
  int interior = 0;
  double overshoot = 0.0;
  for (int k = 0; k < s.nodes(); ++k) {
    const double u = s.U(k, 0);
    overshoot = std::max({overshoot, -u, u - kMl1ThrustMax});
    if (std::abs(u) > 1e-3 && std::abs(u - kMl1ThrustMax) > 1e-3) ++interior;
  }
  o.require(interior <= 2, std::to_string(interior) + " nodes off the thrust bounds");
  o.require(overshoot <= 1e-3, "thrust exceeds bounds by " + fmt("%.2e", overshoot));

  const VnvReport rep = verify_solution(b.ocp, s, b.checks, b.verify);
  for (const char* name : {"thrust_complementarity", "lambda_h_constant", "lambda_v_affine", "lambda_m_final"})
    check_named(rep, name, o);
  const double term = rep.feasibility.terminal_error_inf;
  o.require(term < 1e-3, "terminal error " + fmt("%.2e", term));

  // Coarse solve interpolated onto the fine nodes in normalized time.
  const OcpSolveResult coarse = solve_ocp(b.ocp, {b.grid.family, b.grid.kind, 20}, b.solver);
  o.require(coarse.nlp.status == SolveStatus::Optimal, "N=20 status " + std::string(to_string(coarse.nlp.status)));
  const TrajectorySolution& c = coarse.solution;
  const auto normalized = [](const TrajectorySolution& x) {
    return ((2.0 * (x.t.array() - x.ta) / (x.tf - x.ta)) - 1.0).matrix().eval();
  };
  const Eigen::MatrixXd L = lagrange_cardinals(normalized(c), normalized(s));
  const double gap = (L * c.X - s.X).cwiseAbs().maxCoeff();
  o.require(gap <= 1e-2, "N=20 vs N=80 state gap " + fmt("%.2e", gap));

  const oracle::LandingSwitch ref = oracle::landing_switch(1.0, -0.783, 1.0, kMl1ThrustMax, kMl1Exhaust);
  o.note("J " + fmt("%.7f", s.objective) + " (closed form " + fmt("%.7f", ref.fuel) + "), tf " + fmt("%.6f", s.tf) +
         " (" + fmt("%.6f", ref.tf) + "), terminal error " + fmt("%.1e", term) + ", N=20 gap " + fmt("%.1e", gap));
  return o;
}

Outcome constrained_integrator() {
  Outcome o;
  const BenchmarkProblem b = breakwell();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver, b.ladder);
  const TrajectorySolution& s = r.solution;
  o.require(r.nlp.status == SolveStatus::Optimal || r.nlp.status == SolveStatus::Feasible,
            std::string("status ") + to_string(r.nlp.status));
  const VnvReport rep = verify_solution(b.ocp, s, b.checks, b.verify);
  const double path = rep.propagation.path_violation;
  o.require(path <= 1e-3, "propagated path violation " + fmt("%.2e", path));
  // J of the three-arc analytic control, 1/2 int u^2 with u affine on [0, 3l] and mirrored.
  const double l = kBreakwellLimit;
  const double j_ref = 2.0 * static_cast<double>(oracle::simpson(
                                 [l](long double t) {
                                   const long double u = -2.0L / (3 * l) * (1.0L - t / (3 * l));
                                   return 0.5L * u * u;
                                 },
                                 0.0L, 3.0L * l));
  o.require(std::abs(s.objective - j_ref) <= 1e-2, "J " + fmt("%.5f", s.objective) + " vs " + fmt("%.5f", j_ref));
  const NamedCheck* stair = check_named(rep, "lambda_x_staircase", o);
  const NamedCheck* dirac = check_named(rep, "dirac_mass", o);
  o.note("J " + fmt("%.5f", s.objective) + " (analytic " + fmt("%.5f", j_ref) + "), path violation " +
         fmt("%.1e", path) + (stair ? ", staircase: " + stair->detail : "") +
         (dirac ? ", dirac: " + dirac->detail : ""));
  return o;
}

Outcome orbit() {
  Outcome o;
  const BenchmarkProblem b = orbit_transfer();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver, b.ladder);
  const TrajectorySolution& s = r.solution;
  o.require(r.nlp.status == SolveStatus::Optimal || r.nlp.status == SolveStatus::Feasible,
            std::string("status ") + to_string(r.nlp.status));
  VerifyOptions vo = b.verify;
  vo.tol_bc = 1e-2;
  const VnvReport rep = verify_solution(b.ocp, s, b.checks, vo);
  o.require(rep.feasibility.verdict, "terminal error " + fmt("%.2e", rep.feasibility.terminal_error_inf) +
                                         ", path " + fmt("%.2e", rep.feasibility.path_violation_inf));
  for (const char* name : {"lambda_theta_zero", "hamiltonian_minus_one", "hmc_inequality"}) check_named(rep, name, o);
  o.note(std::string(to_string(r.nlp.status)) + ", tf " + fmt("%.3f", s.tf) + ", terminal error " +
         fmt("%.1e", rep.feasibility.terminal_error_inf));
  return o;
}

Outcome independent_verification() {
  Outcome o;
  std::ifstream in(BPS_TEST_DATA "/lq_analytic.json");
  o.require(static_cast<bool>(in), "cannot open lq_analytic.json");
  if (!in) return o;
  std::stringstream text;
  text << in.rdbuf();
  const TrajectorySolution s = solution_from_json(text.str());
  const BenchmarkProblem b = make_problem(s.problem);
  const VnvReport rep = verify_solution(b.ocp, s, b.checks, b.verify);
  o.require(rep.feasibility.verdict, "feasibility");
  o.require(rep.pontryagin.available, "duals not read");
  for (const NamedCheck& c : rep.pontryagin.checks)
    o.require(!c.available || c.passed, c.name + " " + fmt("%.2e", c.value));
  int scored = 0;
  for (const NamedCheck& c : rep.pontryagin.checks) scored += c.available ? 1 : 0;
  o.note(std::to_string(s.nodes()) + " hand-written samples, " + std::to_string(scored) +
         " Pontryagin checks scored, terminal error " + fmt("%.1e", rep.feasibility.terminal_error_inf));
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "grid nodes and weights", 1.0, grids},
      {2, "quadrature defect on exp", 1.0, quadrature_defect_exp},
      {3, "Birkhoff identities", 10.0, identities},
      {4, "a- and b-form agreement", 10.0, interpolant_agreement},
      {5, "conditioning", 120.0, conditioning},
      {6, "LQ oracle", 10.0, lq},
      {7, "ML1 landing", 60.0, landing},
      {8, "Breakwell", 60.0, constrained_integrator},
      {9, "orbit transfer", 900.0, orbit},
      {10, "solver-independent verification", 10.0, independent_verification},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      o.ok = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    failed += o.ok ? 0 : 1;
    std::printf("[%s] %d %s (%.2f s) %s\n", o.ok ? "PASS" : "FAIL", c.number, c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
