#include "bps/pipeline.hpp"

#include "bps/birkhoff.hpp"
#include "bps/error.hpp"

#include <algorithm>
#include <memory>

namespace bps {
namespace {

// Linear interpolation of the rows of `values` sampled at increasing `times`,
// clamped to the end rows outside the range.
Eigen::VectorXd lerp_rows(const std::vector<double>& times, const Eigen::MatrixXd& values, double t) {
  const size_t n = times.size();
  if (n == 1 || t <= times.front()) return values.row(0).transpose();
  if (t >= times.back()) return values.row(static_cast<Eigen::Index>(n - 1)).transpose();
  const size_t hi = static_cast<size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const size_t lo = hi - 1;
  const double s = (t - times[lo]) / (times[hi] - times[lo]);
  return ((1.0 - s) * values.row(static_cast<Eigen::Index>(lo)) + s * values.row(static_cast<Eigen::Index>(hi)))
      .transpose();
}

}  // namespace

TrajectorySolution make_solution(const TranscribedNlp& nlp, const NlpSolution& sol, const DualTrajectories& duals) {
  const DecisionLayout& L = nlp.layout();
  const OcpDefinition& ocp = nlp.ocp();
  TrajectorySolution s;
  s.problem = ocp.name;
  s.grid = grid_name(nlp.grid().spec);
  s.order = nlp.grid().order();
  s.t = nlp.node_times(sol.z);
  s.X.resize(L.nodes, L.nx);
  s.V.resize(L.nodes, L.nx);
  s.U.resize(L.nodes, L.nu);
  for (int k = 0; k < L.nodes; ++k) {
    s.X.row(k) = sol.z.segment(L.x(k, 0), L.nx).transpose();
    s.V.row(k) = sol.z.segment(L.v(k, 0), L.nx).transpose();
    if (L.nu > 0) s.U.row(k) = sol.z.segment(L.u(k, 0), L.nu).transpose();
  }
  s.xa = sol.z.segment(L.xa0(), L.nx);
  s.xb = sol.z.segment(L.xb0(), L.nx);
  s.p = sol.z.segment(L.p0(), L.np);
  s.ta = ocp.ta;
  s.tf = nlp.final_time(sol.z);
  s.has_duals = true;
  s.lambda = duals.lambda.transpose();
  s.mu = duals.mu.transpose();
  s.nu = duals.nu;
  s.hamiltonian = duals.hamiltonian;
  s.quadrature_weights = nlp.birkhoff().wB;
  s.cost_scale = ocp.cost_scale;
  s.objective = sol.objective / ocp.cost_scale;
  s.status = to_string(sol.status);
  s.kkt = sol.kkt;
  s.iterations = sol.iterations;
  return s;
}

std::function<void(double, Eigen::VectorXd&, Eigen::VectorXd&)> warm_start_trajectory(const TrajectorySolution& s) {
  const int n = s.nodes();
  const int nx = static_cast<int>(s.X.cols());
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "warm start needs at least one node");
  std::vector<double> tx;
  std::vector<Eigen::VectorXd> xs;
  auto push = [&](double t, const Eigen::VectorXd& x) {
    if (!tx.empty() && t <= tx.back() + 1e-14 * std::max(1.0, std::abs(t))) {
      xs.back() = x;
      return;
    }
    tx.push_back(t);
    xs.push_back(x);
  };
  if (s.xa.size() == nx) push(s.ta, s.xa);
  for (int k = 0; k < n; ++k) push(s.t[k], s.X.row(k).transpose());
  if (s.xb.size() == nx) push(s.tf, s.xb);
  Eigen::MatrixXd xm(static_cast<Eigen::Index>(xs.size()), nx);
  for (size_t i = 0; i < xs.size(); ++i) xm.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
  std::vector<double> tu(s.t.data(), s.t.data() + n);
  const Eigen::MatrixXd um = s.U;
  return [tx, xm, tu, um](double t, Eigen::VectorXd& x, Eigen::VectorXd& u) {
    x = lerp_rows(tx, xm, t);
    u = um.cols() > 0 ? lerp_rows(tu, um, t) : Eigen::VectorXd(0);
  };
}

OcpSolveResult solve_ocp(const OcpDefinition& ocp, const GridSpec& spec, const SolverOptions& opts,
                         const std::vector<int>& ladder) {
  opts.validate();
  std::vector<int> orders;
  if (!opts.initial_guess) {
    for (int n : ladder) {
      if (n >= 1 && n < spec.order && (orders.empty() || n > orders.back())) orders.push_back(n);
    }
  }
  orders.push_back(spec.order);

  OcpSolveResult out;
  std::optional<TrajectorySolution> previous;
  for (int order : orders) {
    GridSpec g = spec;
    g.order = order;
    auto sys = std::make_shared<BirkhoffSystem>(build_birkhoff(make_grid(g)));
    auto nlp = transcribe(ocp, sys);
    SolverOptions o = opts;
    if (previous) {
      const Eigen::VectorXd z0 = nlp->guess_from(previous->tf, warm_start_trajectory(*previous), previous->p);
      nlp->check_finite(z0);
      o.initial_guess = z0;
    }
    NlpSolution sol = solve_transcribed(*nlp, o);
    DualTrajectories duals = extract_covectors(sol, *nlp);
    TrajectorySolution rec = make_solution(*nlp, sol, duals);
    out.orders.push_back(order);
    out.statuses.push_back(sol.status);
    if (order == orders.back()) {
      out.nlp = std::move(sol);
      out.duals = std::move(duals);
      out.solution = rec;
    }
    previous = std::move(rec);
  }
  return out;
}

}  // namespace bps
