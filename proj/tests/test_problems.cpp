#include "bps/error.hpp"
#include "bps/pipeline.hpp"
#include "bps/problems.hpp"
#include "bps/transcription.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bps;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Times where u crosses `level`, by linear interpolation between nodes.
std::vector<std::pair<double, bool>> crossings(const Eigen::VectorXd& t, const Eigen::VectorXd& u, double level) {
  std::vector<std::pair<double, bool>> out;
  for (Eigen::Index k = 0; k + 1 < t.size(); ++k) {
    const double a = u[k] - level, b = u[k + 1] - level;
    if ((a < 0) != (b < 0)) out.emplace_back(t[k] + (t[k + 1] - t[k]) * a / (a - b), b > a);
  }
  return out;
}

// Three-arc solution of the constrained double integrator with l = 0.1:
// u = -(2 / 3l)(1 - t / 3l) on [0, 3l], 0 on the boundary arc, mirrored after.
double breakwell_control(double t) {
  const double l = 0.1;
  if (t < 3 * l) return -2.0 / (3 * l) * (1.0 - t / (3 * l));
  if (t > 1 - 3 * l) return -2.0 / (3 * l) * (1.0 - (1.0 - t) / (3 * l));
  return 0.0;
}

}  // namespace

TEST_CASE("ML1 data") {
  const BenchmarkProblem b = ml1();
  CHECK(b.ocp.nx == 3);
  CHECK(b.ocp.nu == 1);
  CHECK(b.ocp.free_final_time());
  CHECK(b.ocp.events_lower.head(3) == vec({1.0, -0.783, 1.0}));
  CHECK(b.ocp.events_upper.head(3) == vec({1.0, -0.783, 1.0}));
  CHECK(b.ocp.events_lower.tail(2) == vec({0.0, 0.0}));
  CHECK(b.ocp.path_upper[0] == 1.227);
  CHECK(b.ocp.path_lower[0] == 0.0);
  CHECK(b.grid.family == GridFamily::Chebyshev);
  CHECK(b.grid.kind == GridKind::Lobatto);
  CHECK(b.grid.order == 80);
  // x' at (h, v, m) = (1, -0.783, 0.8), T = 1.227.
  Eigen::VectorXd f(3);
  b.ocp.dynamics.evaluate(vec({1.0, -0.783, 0.8}), vec({1.227}), 0.0, Eigen::VectorXd(0), f);
  CHECK(f[0] == -0.783);
  CHECK(f[1] == doctest::Approx(-1.0 + 1.227 / 0.8));
  CHECK(f[2] == doctest::Approx(-1.227 / 2.349));
}

TEST_CASE("ML1 switch time agrees with the shooting oracle") {
  const oracle::LandingSwitch ref = oracle::landing_switch(1.0, -0.783, 1.0, 1.227, 2.349);
  const BenchmarkProblem b = ml1();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver, b.ladder);
  REQUIRE(r.nlp.status == SolveStatus::Optimal);
  const TrajectorySolution& s = r.solution;
  const auto sw = crossings(s.t, s.U.col(0), 0.5 * kMl1ThrustMax);
  REQUIRE(sw.size() == 1);
  CHECK(sw[0].second);  // off, then full thrust
  // Largest node gap near the switch bounds how well the grid can place it.
  double gap = 0.0;
  for (int k = 0; k + 1 < s.nodes(); ++k) {
    if (std::abs(s.t[k] - ref.ts) < 0.1) gap = std::max(gap, s.t[k + 1] - s.t[k]);
  }
  CHECK(std::abs(sw[0].first - ref.ts) <= gap);
  CHECK(std::abs(s.tf - ref.tf) <= 1e-3);
  CHECK(std::abs(s.objective - ref.fuel) <= 1e-4);
}

TEST_CASE("Breakwell data and the analytic solution") {
  const BenchmarkProblem b = breakwell();
  const double l = kBreakwellLimit;
  CHECK(b.ocp.path_upper[0] == 0.1);
  CHECK(b.ocp.tb == 1.0);
  CHECK(b.ocp.events_lower == vec({0.0, 1.0, 0.0, -1.0}));
  CHECK(b.grid.order == 100);
  // The printed Dirac strength is 2 / (9 l^2) rounded.
  CHECK(std::abs(kBreakwellDirac - 2.0 / (9.0 * l * l)) <= 5e-3);

  // J = 1/2 integral of u^2 equals 4 / (9 l) for the three-arc control.
  const long double j = oracle::simpson([](long double t) { return 0.5L * std::pow(breakwell_control(t), 2); }, 0.0L,
                                        0.3L) *
                        2.0L;
  CHECK(std::abs(static_cast<double>(j) - 4.0 / (9.0 * l)) <= 1e-10);

  // Propagating that control reaches (0, -1) and touches x = 0.1 without crossing it.
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
  Eigen::MatrixXd u(101, 1);
  for (int k = 0; k < 101; ++k) u(k, 0) = breakwell_control(t[k]);
  const PropagationResult prop = propagate_ivp(b.ocp, interpolate_control(t, u), vec({0.0, 1.0}), 0.0, 1.0);
  CHECK(prop.terminal_error.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(prop.path_violation <= 1e-8);
  CHECK(prop.x.col(0).maxCoeff() == doctest::Approx(0.1).epsilon(1e-8));
}

TEST_CASE("orbit transfer data") {
  const BenchmarkProblem b = orbit_transfer();
  CHECK(b.ocp.nx == 4);
  CHECK(b.ocp.nu == 1);
  CHECK(b.ocp.cost_scale == 0.01);
  CHECK(b.grid.order == 600);
  CHECK(b.grid.family == GridFamily::Chebyshev);
  CHECK(b.grid.kind == GridKind::Lobatto);
  CHECK(b.ocp.free_final_time());
  CHECK(b.ocp.events_lower == vec({1.0, 0.0, 0.0, 1.0, 6.0, 0.0, std::sqrt(1.0 / 6.0)}));
  CHECK(b.ocp.events_upper == b.ocp.events_lower);
  // On the initial circle with radial thrust only the thrust term survives.
  Eigen::VectorXd f(4);
  b.ocp.dynamics.evaluate(vec({1.0, 0.0, 0.0, 1.0}), vec({M_PI / 2}), 0.0, Eigen::VectorXd(0), f);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 1.0);
  CHECK(f[2] == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(std::abs(f[3]) <= 1e-19);
}

TEST_CASE("LQ oracle data") {
  const BenchmarkProblem b = lq_oracle();
  CHECK(b.ocp.events_lower == vec({0.0, 0.0, 1.0, 0.0}));
  CHECK(b.ocp.ta == 0.0);
  CHECK(b.ocp.tb == 1.0);
  // J = 1/2 integral of (6 - 12 t)^2 over [0, 1].
  const long double j = oracle::simpson([](long double t) { return 0.5L * (6 - 12 * t) * (6 - 12 * t); }, 0.0L, 1.0L);
  CHECK(static_cast<double>(j) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("preset registry") {
  const std::vector<std::string> names = problem_names();
  CHECK(names == std::vector<std::string>{"ml1", "breakwell", "orbit-xfer", "lq"});
  for (const auto& n : names) CHECK(make_problem(n).name == n);
  try {
    make_problem("moon");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownName);
    CHECK(std::string(e.what()).find("orbit-xfer") != std::string::npos);
  }
}

TEST_CASE("preset evaluators are finite at their default guess") {
  for (const auto& n : problem_names()) {
    const BenchmarkProblem b = make_problem(n);
    CAPTURE(n);
    CHECK_NOTHROW(b.ocp.validate());
    const auto sys = std::make_shared<const BirkhoffSystem>(build_birkhoff(make_grid({b.grid.family, b.grid.kind, 12})));
    const auto nlp = transcribe(b.ocp, sys);
    const Eigen::VectorXd z = nlp->initial_point();
    CHECK_NOTHROW(nlp->check_finite(z));
    CHECK(Eigen::MatrixXd(nlp->jacobian(z)).allFinite());
    CHECK(std::isfinite(nlp->objective(z)));
  }
}

TEST_CASE("preset checks do not modify the solution") {
  const BenchmarkProblem b = lq_oracle();
  const OcpSolveResult r = solve_ocp(b.ocp, b.grid, b.solver);
  const TrajectorySolution before = r.solution;
  for (const auto& check : b.checks) {
    const NamedCheck a = check(r.solution);
    const NamedCheck c = check(r.solution);
    CHECK(a.name == c.name);
    CHECK(a.value == c.value);
    CHECK(a.passed);
  }
  CHECK(r.solution.X == before.X);
  CHECK(r.solution.U == before.U);
  CHECK(r.solution.lambda == before.lambda);
}
