#include "bps/error.hpp"
#include "bps/pipeline.hpp"
#include "bps/problems.hpp"
#include "bps/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace bps;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DenseNlp square_above_one(bool as_row) {
  DenseNlp p;
  p.n = 1;
  p.f = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  p.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 2.0 * x[0]); };
  p.start = Eigen::VectorXd::Constant(1, 3.0);
  if (as_row) {
    p.m = 1;
    p.c = [](const Eigen::VectorXd& x) { return x; };
    p.jac = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
    p.limits = {Eigen::VectorXd::Constant(1, -kInf), Eigen::VectorXd::Constant(1, kInf),
                Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, kInf)};
  } else {
    p.limits = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, kInf), Eigen::VectorXd(0),
                Eigen::VectorXd(0)};
  }
  return p;
}

OcpSolveResult solve_lq(int n, double scale = 1.0) {
  BenchmarkProblem b = lq_oracle();
  b.ocp.cost_scale = scale;
  return solve_ocp(b.ocp, {GridFamily::Chebyshev, GridKind::Lobatto, n}, b.solver);
}

}  // namespace

TEST_CASE("x^2 subject to x >= 1") {
  // Stationarity 2x - z_L = 0 at x = 1 gives a lower-bound dual of 2; the
  // solver reports z_U - z_L.
  const NlpResult bound = solve_nlp(square_above_one(false));
  CHECK(bound.status == SolveStatus::Optimal);
  CHECK(bound.z[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(-bound.bound_multipliers[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(bound.objective == doctest::Approx(1.0).epsilon(1e-7));

  // As a constraint row: grad f + J^T y = 0 gives y = -2 at the lower bound.
  const NlpResult row = solve_nlp(square_above_one(true));
  CHECK(row.status == SolveStatus::Optimal);
  CHECK(row.z[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(row.y[0] == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("equality-constrained quadratic") {
  // min x^2 + 2 y^2 s.t. x + y = 3: x = 2, y = 1, multiplier -4.
  DenseNlp p;
  p.n = 2;
  p.m = 1;
  p.f = [](const Eigen::VectorXd& z) { return z[0] * z[0] + 2 * z[1] * z[1]; };
  p.c = [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z[0] + z[1]); };
  p.start = Eigen::VectorXd::Zero(2);
  p.limits = {Eigen::VectorXd::Constant(2, -kInf), Eigen::VectorXd::Constant(2, kInf), Eigen::VectorXd::Constant(1, 3),
              Eigen::VectorXd::Constant(1, 3)};
  const NlpResult r = solve_nlp(p);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.z[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.z[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.y[0] == doctest::Approx(-4.0).epsilon(1e-6));
}

TEST_CASE("LQ oracle at N = 20") {
  const OcpSolveResult r = solve_lq(20);
  const NlpSolution& s = r.nlp;
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.objective - 6.0) <= 1e-4);
  const SolverOptions tol;
  CHECK(s.kkt.stationarity <= tol.optimality_tol);
  CHECK(s.kkt.feasibility <= tol.feasibility_tol);
  CHECK(s.kkt.complementarity <= tol.complementarity_tol);

  const DualTrajectories& d = r.duals;
  const Eigen::VectorXd t = r.solution.t;
  for (int k = 0; k < t.size(); ++k) {
    CHECK(std::abs(d.lambda(0, k) + 12.0) <= 1e-2);
    CHECK(std::abs(d.lambda(1, k) - (-6.0 + 12.0 * t[k])) <= 1e-2);
    CHECK(std::abs(r.solution.U(k, 0) - (6.0 - 12.0 * t[k])) <= 1e-2);
  }
  CHECK(d.lambda(1, 0) == doctest::Approx(-6.0).epsilon(1e-3));
  CHECK(d.lambda(1, t.size() - 1) == doctest::Approx(6.0).epsilon(1e-3));
}

TEST_CASE("LQ oracle on every grid kind") {
  const BenchmarkProblem b = lq_oracle();
  for (GridFamily fam : {GridFamily::Legendre, GridFamily::Chebyshev}) {
    for (GridKind kind : {GridKind::Lobatto, GridKind::Radau, GridKind::Gauss}) {
      const OcpSolveResult r = solve_ocp(b.ocp, {fam, kind, 20}, b.solver);
      CAPTURE(grid_name({fam, kind, 20}));
      CHECK(r.nlp.status == SolveStatus::Optimal);
      CHECK(std::abs(r.nlp.objective - 6.0) <= 1e-3);
    }
  }
}

TEST_CASE("cost scaling scales the duals and leaves the primal alone") {
  const OcpSolveResult base = solve_lq(16, 1.0);
  for (double s : {0.01, 100.0}) {
    const OcpSolveResult r = solve_lq(16, s);
    REQUIRE(r.nlp.status == SolveStatus::Optimal);
    CAPTURE(s);
    CHECK((r.solution.X - base.solution.X).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((r.solution.U - base.solution.U).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((r.duals.lambda - s * base.duals.lambda).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, s));
    CHECK((r.duals.nu - s * base.duals.nu).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, s));
  }
}

TEST_CASE("solves are deterministic") {
  const OcpSolveResult a = solve_lq(12), b = solve_lq(12);
  CHECK(a.nlp.z == b.nlp.z);
  CHECK(a.nlp.iterations == b.nlp.iterations);
}

TEST_CASE("ML1 at N = 80 is bang-bang") {
  const BenchmarkProblem b = ml1();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver, b.ladder);
  REQUIRE(r.nlp.status == SolveStatus::Optimal);
  int off_bound = 0;
  for (int k = 0; k < r.solution.nodes(); ++k) {
    const double u = r.solution.U(k, 0);
    CHECK(u >= -1e-3);
    CHECK(u <= kMl1ThrustMax + 1e-3);
    if (std::abs(u) > 1e-3 && std::abs(u - kMl1ThrustMax) > 1e-3) ++off_bound;
  }
  CHECK(off_bound <= 2);
  // Path covector sign rule: mu <= 0 at T = 0 and >= 0 at T = max, scaled by the duals.
  const double scale = std::max(1.0, r.duals.mu.cwiseAbs().maxCoeff());
  for (int k = 0; k < r.solution.nodes(); ++k) {
    const double u = r.solution.U(k, 0), m = r.duals.mu(0, k);
    if (u < 1e-3) CHECK(m <= 1e-3 * scale);
    if (u > kMl1ThrustMax - 1e-3) CHECK(m >= -1e-3 * scale);
  }
}

TEST_CASE("iteration cap reports MaxIter") {
  const BenchmarkProblem b = ml1();
  SolverOptions o = b.solver;
  o.max_inner_iters = 2;
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, o);
  CHECK(r.nlp.status == SolveStatus::MaxIter);
}

TEST_CASE("option validation") {
  SolverOptions o;
  o.feasibility_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = SolverOptions{};
  o.penalty_growth = 1.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = SolverOptions{};
  o.optimality_tol = -1.0;
  CHECK_THROWS_AS(solve_nlp(square_above_one(false), o), Error);
  CHECK(parse_status("Feasible") == SolveStatus::Feasible);
  CHECK(std::string(to_string(SolveStatus::Diverged)) == "Diverged");
}
