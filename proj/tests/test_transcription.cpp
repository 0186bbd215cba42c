#include "bps/error.hpp"
#include "bps/problems.hpp"
#include "bps/transcription.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace bps;

namespace {

std::shared_ptr<const BirkhoffSystem> system_for(GridFamily fam, GridKind kind, int n) {
  return std::make_shared<const BirkhoffSystem>(build_birkhoff(make_grid({fam, kind, n})));
}

// x' = c (constant), F = 1, fixed [ta, tb], no events.
OcpDefinition constant_drift(Eigen::VectorXd c, double ta, double tb) {
  OcpDefinition o;
  o.name = "drift";
  o.nx = static_cast<int>(c.size());
  o.nu = 1;
  o.running_cost.rows = 1;
  o.running_cost.eval = [](ConstVec, ConstVec, double, ConstVec, OutVec out) { out[0] = 1.0; };
  o.dynamics.rows = o.nx;
  o.dynamics.eval = [c](ConstVec, ConstVec, double, ConstVec, OutVec out) { out = c; };
  o.ta = ta;
  o.tb = tb;
  o.guess.xa = Eigen::VectorXd::Zero(o.nx);
  o.guess.xb = Eigen::VectorXd::Zero(o.nx);
  return o;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("affine domain map") {
  const DomainMap m = affine_domain_map(0.0, 10.0);
  CHECK(m(0.0) == doctest::Approx(5.0));
  CHECK(m(0.5) == doctest::Approx(7.5));
  CHECK(m.gamma() == doctest::Approx(5.0));
  CHECK(m(-1.0) == doctest::Approx(0.0));
  CHECK(m(1.0) == doctest::Approx(10.0));
  const DomainMap id = affine_domain_map(-1.0, 1.0);
  for (double tau : {-1.0, -0.3, 0.0, 0.8, 1.0}) CHECK(id(tau) == doctest::Approx(tau));
  CHECK(id.gamma() == 1.0);
  try {
    affine_domain_map(2.0, 2.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInterval);
  }
}

TEST_CASE("double integrator layout arithmetic") {
  const auto nlp = transcribe(lq_oracle().ocp, system_for(GridFamily::Chebyshev, GridKind::Lobatto, 10));
  CHECK(nlp->num_variables() == 2 * 11 + 2 * 11 + 1 * 11 + 2 + 2);
  CHECK(nlp->num_variables() == 59);
  CHECK(nlp->rows().collocation0() == 2 * 12);
  CHECK(nlp->layout().tb() == -1);
  // Linear rows and collocation rows are equalities; events fix both ends.
  const NlpBounds b = nlp->bounds();
  for (int r = 0; r < nlp->rows().event0(); ++r) {
    CHECK(b.c_lower[r] == 0.0);
    CHECK(b.c_upper[r] == 0.0);
  }
  CHECK(nlp->num_constraints() == 24 + 22 + 4);
}

TEST_CASE("free final time multiplies running cost and dynamics by gamma") {
  const BenchmarkProblem ml = ml1();
  const auto nlp = transcribe(ml.ocp, system_for(GridFamily::Chebyshev, GridKind::Lobatto, 12));
  const DecisionLayout& L = nlp->layout();
  REQUIRE(L.tb() >= 0);
  Eigen::VectorXd z = nlp->initial_point();
  for (int k = 0; k < L.nodes; ++k) z[L.u(k, 0)] = 0.7;
  z[L.tb()] = 2.0;
  const double j2 = nlp->objective(z);
  const Eigen::VectorXd c2 = nlp->constraints(z);
  z[L.tb()] = 4.0;
  const double j4 = nlp->objective(z);
  const Eigen::VectorXd c4 = nlp->constraints(z);
  // J = gamma * sum wB T / 2.349 with gamma = tb / 2.
  CHECK(j2 == doctest::Approx(1.0 * 2.0 * 0.7 / kMl1Exhaust).epsilon(1e-12));
  CHECK(j4 == doctest::Approx(2.0 * j2).epsilon(1e-12));
  // Collocation rows read V - gamma f, so doubling gamma shifts them by -gamma f.
  const Eigen::VectorXd x = Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(z.data() + L.x(3, 0), 3));
  const double f_v = -1.0 + 0.7 / x[2];
  CHECK(c4[nlp->rows().collocation(3, 1)] - c2[nlp->rows().collocation(3, 1)] == doctest::Approx(-f_v).epsilon(1e-10));
}

TEST_CASE("constant dynamics integrate exactly through the Birkhoff rows") {
  Eigen::VectorXd c(2);
  c << 0.5, -2.0;
  const double ta = 1.0, tb = 4.0, gamma = 1.5;
  for (GridKind kind : {GridKind::Lobatto, GridKind::Radau, GridKind::Gauss}) {
    for (GridFamily fam : {GridFamily::Legendre, GridFamily::Chebyshev}) {
      const auto sys = system_for(fam, kind, 9);
      const auto nlp = transcribe(constant_drift(c, ta, tb), sys);
      const DecisionLayout& L = nlp->layout();
      Eigen::VectorXd z = Eigen::VectorXd::Zero(L.size());
      Eigen::VectorXd xa(2);
      xa << 3.0, -1.0;
      for (int i = 0; i < 2; ++i) {
        z[L.xa(i)] = xa[i];
        z[L.xb(i)] = xa[i] + 2.0 * gamma * c[i];
        for (int k = 0; k < L.nodes; ++k) {
          z[L.x(k, i)] = xa[i] + gamma * c[i] * (sys->grid.nodes[k] + 1.0);
          z[L.v(k, i)] = gamma * c[i];
        }
      }
      const Eigen::VectorXd r = nlp->constraints(z);
      CHECK(inf_norm(r.head(nlp->rows().event0())) <= 1e-12);
    }
  }
}

TEST_CASE("linear block residual is A_a [X; V] - C_a [xa; xb]") {
  const auto sys = system_for(GridFamily::Legendre, GridKind::Radau, 7);
  const auto nlp = transcribe(lq_oracle().ocp, sys);
  const DecisionLayout& L = nlp->layout();
  Eigen::VectorXd z(L.size());
  for (int i = 0; i < z.size(); ++i) z[i] = std::sin(1.3 * i + 0.2);
  const Eigen::VectorXd r = nlp->constraints(z);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd x(L.nodes), v(L.nodes);
    for (int k = 0; k < L.nodes; ++k) {
      x[k] = z[L.x(k, i)];
      v[k] = z[L.v(k, i)];
    }
    const Eigen::VectorXd expect = x - sys->Ba * v - Eigen::VectorXd::Constant(L.nodes, z[L.xa(i)]);
    for (int k = 0; k < L.nodes; ++k) worst = std::max(worst, std::abs(r[nlp->rows().linear(k, i)] - expect[k]));
    const double last = sys->wB.dot(v) + z[L.xa(i)] - z[L.xb(i)];
    worst = std::max(worst, std::abs(r[nlp->rows().linear(L.nodes, i)] - last));
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("unit running cost on [-1, 1] integrates to 2 cost_scale") {
  OcpDefinition o = constant_drift(Eigen::VectorXd::Ones(1), -1.0, 1.0);
  for (double scale : {1.0, 0.01, 7.0}) {
    o.cost_scale = scale;
    const auto nlp = transcribe(o, system_for(GridFamily::Chebyshev, GridKind::Gauss, 11));
    CHECK(nlp->objective(nlp->initial_point()) == doctest::Approx(2.0 * scale).epsilon(1e-13));
  }
}

TEST_CASE("running cost quadrature is exact within the grid degree") {
  // F = t^2 on [0, 2]; degree 2 is within every rule at N = 8.
  OcpDefinition o = constant_drift(Eigen::VectorXd::Ones(1), 0.0, 2.0);
  o.running_cost.eval = [](ConstVec, ConstVec, double t, ConstVec, OutVec out) { out[0] = t * t; };
  for (GridKind kind : {GridKind::Lobatto, GridKind::Radau, GridKind::Gauss}) {
    for (GridFamily fam : {GridFamily::Legendre, GridFamily::Chebyshev}) {
      const auto nlp = transcribe(o, system_for(fam, kind, 8));
      CHECK(std::abs(nlp->objective(nlp->initial_point()) - 8.0 / 3.0) <= 1e-10);
    }
  }
}

TEST_CASE("polynomial trajectory satisfies the linear block") {
  // x(t) = t^3 - t on [0, 2], N = 8 >= degree.
  const auto sys = system_for(GridFamily::Chebyshev, GridKind::Lobatto, 8);
  const auto nlp = transcribe(constant_drift(Eigen::VectorXd::Ones(1), 0.0, 2.0), sys);
  const DecisionLayout& L = nlp->layout();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L.size());
  const Eigen::VectorXd t = nlp->node_times(z);
  for (int k = 0; k < L.nodes; ++k) {
    z[L.x(k, 0)] = t[k] * t[k] * t[k] - t[k];
    z[L.v(k, 0)] = 1.0 * (3.0 * t[k] * t[k] - 1.0);  // gamma = 1 on [0, 2]
  }
  z[L.xa(0)] = 0.0;
  z[L.xb(0)] = 6.0;
  const Eigen::VectorXd r = nlp->constraints(z);
  CHECK(inf_norm(r.head(nlp->rows().collocation0())) <= 1e-9);
}

TEST_CASE("ML1 analytic Jacobian against central differences") {
  const auto nlp = transcribe(ml1().ocp, system_for(GridFamily::Chebyshev, GridKind::Lobatto, 10));
  Eigen::VectorXd z = nlp->initial_point();
  for (int k = 0; k < nlp->layout().nodes; ++k) z[nlp->layout().u(k, 0)] = 0.3 + 0.05 * k;
  const NlpEvaluation ev = evaluate_nlp(*nlp, z);
  const Eigen::MatrixXd jac = Eigen::MatrixXd(ev.jacobian);
  Eigen::MatrixXd fd(jac.rows(), jac.cols());
  for (int i = 0; i < z.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(z[i]));
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    fd.col(i) = (nlp->constraints(zp) - nlp->constraints(zm)) / (2.0 * h);
  }
  const int c0 = nlp->rows().collocation0(), nc = nlp->rows().event0() - c0;
  const Eigen::MatrixXd a = jac.middleRows(c0, nc), b = fd.middleRows(c0, nc);
  const double rel = (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
  CHECK(rel < 1e-5);
  // The whole Jacobian, not only the collocation rows.
  CHECK((jac - fd).cwiseAbs().maxCoeff() / std::max(1.0, jac.cwiseAbs().maxCoeff()) < 1e-5);
}

TEST_CASE("gradient and Hessian agree with differences of the objective") {
  const auto nlp = transcribe(ml1().ocp, system_for(GridFamily::Chebyshev, GridKind::Radau, 6));
  Eigen::VectorXd z = nlp->initial_point();
  for (int k = 0; k < nlp->layout().nodes; ++k) z[nlp->layout().u(k, 0)] = 0.9;
  const Eigen::VectorXd g = nlp->gradient(z);
  for (int i = 0; i < z.size(); ++i) {
    const double h = 1e-6;
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    CHECK(std::abs(g[i] - (nlp->objective(zp) - nlp->objective(zm)) / (2 * h)) < 1e-7);
  }
  Eigen::VectorXd y(nlp->num_constraints());
  for (int i = 0; i < y.size(); ++i) y[i] = std::cos(0.7 * i);
  const Eigen::MatrixXd hess = Eigen::MatrixXd(nlp->hessian(z, 1.0, y));
  auto lag_grad = [&](const Eigen::VectorXd& w) {
    return Eigen::VectorXd(nlp->gradient(w) + Eigen::MatrixXd(nlp->jacobian(w)).transpose() * y);
  };
  Eigen::MatrixXd fd(z.size(), z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(z[i]));
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    fd.col(i) = (lag_grad(zp) - lag_grad(zm)) / (2 * h);
  }
  CHECK((hess - fd).cwiseAbs().maxCoeff() / std::max(1.0, hess.cwiseAbs().maxCoeff()) < 1e-5);
  CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transcription is deterministic") {
  const auto sys = system_for(GridFamily::Legendre, GridKind::Lobatto, 15);
  const auto a = transcribe(ml1().ocp, sys);
  const auto b = transcribe(ml1().ocp, sys);
  const Eigen::VectorXd z = a->initial_point();
  CHECK(z == b->initial_point());
  const SparseMatrix ja = a->jacobian(z), jb = b->jacobian(z);
  REQUIRE(ja.nonZeros() == jb.nonZeros());
  CHECK(Eigen::MatrixXd(ja) == Eigen::MatrixXd(jb));
}

TEST_CASE("non-finite evaluator at the guess is reported") {
  OcpDefinition o = constant_drift(Eigen::VectorXd::Ones(1), 0.0, 1.0);
  o.dynamics.eval = [](ConstVec, ConstVec, double, ConstVec, OutVec out) {
    out[0] = std::numeric_limits<double>::quiet_NaN();
  };
  try {
    transcribe(o, system_for(GridFamily::Chebyshev, GridKind::Lobatto, 4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
    CHECK(std::string(e.what()).find("dynamics") != std::string::npos);
  }
}
