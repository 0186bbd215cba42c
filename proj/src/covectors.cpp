#include "bps/covectors.hpp"

#include "bps/error.hpp"

namespace bps {

NlpSolution split_solution(const TranscribedNlp& nlp, const NlpResult& result) {
  const ConstraintLayout& R = nlp.rows();
  if (result.y.size() != R.size() || result.z.size() != nlp.num_variables()) {
    throw Error(ErrorCode::Shape, "solver result does not match the transcription");
  }
  NlpSolution s;
  s.z = result.z;
  s.y_linear = result.y.head(R.collocation0());
  s.y_collocation = result.y.segment(R.collocation0(), R.event0() - R.collocation0());
  s.y_events = result.y.segment(R.event0(), R.ne);
  s.y_path = result.y.segment(R.path0(), R.nh * R.nodes);
  s.bound_multipliers = result.bound_multipliers;
  s.objective = result.objective;
  s.status = result.status;
  s.kkt = result.kkt;
  s.iterations = result.iterations;
  s.message = result.message;
  return s;
}

NlpSolution solve_transcribed(const TranscribedNlp& nlp, const SolverOptions& opts) {
  return split_solution(nlp, solve_nlp(nlp, opts));
}

DualTrajectories extract_covectors(const NlpSolution& sol, const TranscribedNlp& nlp) {
  const DecisionLayout& L = nlp.layout();
  const ConstraintLayout& R = nlp.rows();
  const OcpDefinition& ocp = nlp.ocp();
  const Eigen::VectorXd& w = nlp.birkhoff().wB;
  if (sol.z.size() != L.size() || sol.y_collocation.size() != L.nx * L.nodes ||
      sol.y_path.size() != R.nh * L.nodes) {
    throw Error(ErrorCode::Shape, "solution does not match the transcription");
  }
  const double gamma = nlp.domain(sol.z).gamma();
  const Eigen::VectorXd t = nlp.node_times(sol.z);
  const Eigen::VectorXd p = sol.z.segment(L.p0(), L.np);

  DualTrajectories d;
  d.lambda.resize(L.nx, L.nodes);
  d.mu.resize(R.nh, L.nodes);
  d.hamiltonian.resize(L.nodes);
  d.nu = sol.y_events;
  Eigen::VectorXd f(L.nx), F(1);
  for (int k = 0; k < L.nodes; ++k) {
    if (!(w[k] != 0.0)) throw Error(ErrorCode::Internal, "zero quadrature weight at node " + std::to_string(k));
    for (int i = 0; i < L.nx; ++i) d.lambda(i, k) = -sol.y_collocation[k * L.nx + i] / w[k];
    for (int i = 0; i < R.nh; ++i) d.mu(i, k) = sol.y_path[k * R.nh + i] / (gamma * w[k]);
    const Eigen::VectorXd x = sol.z.segment(L.x(k, 0), L.nx);
    const Eigen::VectorXd u = sol.z.segment(L.u0() + k * L.nu, L.nu);
    ocp.dynamics.evaluate(x, u, t[k], p, f);
    double h = d.lambda.col(k).dot(f);
    if (!ocp.running_cost.empty()) {
      ocp.running_cost.evaluate(x, u, t[k], p, F);
      h += ocp.cost_scale * F[0];
    }
    d.hamiltonian[k] = h;
  }
  return d;
}

}  // namespace bps
