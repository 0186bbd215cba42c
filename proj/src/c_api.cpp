#include "bps/bps.h"

#include "bps/birkhoff.hpp"
#include "bps/error.hpp"
#include "bps/grids.hpp"
#include "bps/pipeline.hpp"
#include "bps/problems.hpp"
#include "bps/solution_io.hpp"
#include "bps/vnv.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

struct bps_grid {
  bps::Grid grid;
};

struct bps_birkhoff {
  bps::BirkhoffSystem sys;
  std::vector<bps::IdentityResidual> identities;
};

struct bps_solution {
  bps::TrajectorySolution sol;
};

struct bps_report {
  bps::VnvReport report;
  std::optional<bps::ControlSignal> control;
};

namespace {

thread_local std::string g_last_error;

bps_status fail(bps_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

bps_status code_of(bps::ErrorCode c) {
  switch (c) {
    case bps::ErrorCode::InvalidArgument: return BPS_INVALID_ARGUMENT;
    case bps::ErrorCode::InvalidOrder: return BPS_INVALID_ORDER;
    case bps::ErrorCode::RootFailure: return BPS_ROOT_FAILURE;
    case bps::ErrorCode::Shape: return BPS_SHAPE;
    case bps::ErrorCode::InvalidInterval: return BPS_INVALID_INTERVAL;
    case bps::ErrorCode::NonFinite: return BPS_NON_FINITE;
    case bps::ErrorCode::Numeric: return BPS_NUMERIC;
    case bps::ErrorCode::Propagation: return BPS_PROPAGATION;
    case bps::ErrorCode::UnknownName: return BPS_UNKNOWN_NAME;
    case bps::ErrorCode::Parse: return BPS_PARSE;
    case bps::ErrorCode::Io: return BPS_IO;
    case bps::ErrorCode::Internal: return BPS_INTERNAL;
  }
  return BPS_INTERNAL;
}

// Runs f, translating exceptions into status codes.
template <class F>
bps_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return BPS_OK;
  } catch (const bps::Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BPS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BPS_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Copies what fits; a NULL buffer is an opt-out, a short one is reported.
bps_status copy_truncated(const std::string& s, char* buf, size_t cap) {
  if (!buf) return BPS_OK;
  if (cap == 0) return fail(BPS_BUFFER_TOO_SMALL, "buffer of size 0");
  const size_t n = std::min(s.size(), cap - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
  if (n < s.size()) return fail(BPS_BUFFER_TOO_SMALL, "text needs " + std::to_string(s.size() + 1) + " bytes");
  return BPS_OK;
}

#define BPS_REQUIRE(ptr)                                                \
  do {                                                                  \
    if (!(ptr)) return fail(BPS_NULL_POINTER, #ptr " is null");         \
  } while (0)

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = bps::problem_names();
  return n;
}

}  // namespace

extern "C" {

const char* bps_version(void) { return "1.0.0"; }

const char* bps_last_error(void) { return g_last_error.c_str(); }

const char* bps_status_name(bps_status s) {
  switch (s) {
    case BPS_OK: return "ok";
    case BPS_NULL_POINTER: return "null-pointer";
    case BPS_BUFFER_TOO_SMALL: return "buffer-too-small";
    default:
      if (s >= BPS_INVALID_ARGUMENT && s <= BPS_INTERNAL) return bps::to_string(static_cast<bps::ErrorCode>(s));
      return "unknown";
  }
}

void bps_string_free(char* s) { std::free(s); }

bps_status bps_grid_create(const char* name, int order, bps_grid** out) {
  BPS_REQUIRE(name);
  BPS_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto g = std::make_unique<bps_grid>();
    g->grid = bps::make_grid(bps::parse_grid_name(name, order));
    *out = g.release();
  });
}

void bps_grid_destroy(bps_grid* g) { delete g; }

bps_status bps_grid_size(const bps_grid* g, size_t* n) {
  BPS_REQUIRE(g);
  BPS_REQUIRE(n);
  *n = static_cast<size_t>(g->grid.size());
  return BPS_OK;
}

bps_status bps_grid_nodes(const bps_grid* g, double* nodes, double* weights) {
  BPS_REQUIRE(g);
  for (Eigen::Index i = 0; i < g->grid.size(); ++i) {
    if (nodes) nodes[i] = g->grid.nodes[i];
    if (weights) weights[i] = g->grid.weights[i];
  }
  return BPS_OK;
}

bps_status bps_grid_exactness(const bps_grid* g, int* degree) {
  BPS_REQUIRE(g);
  BPS_REQUIRE(degree);
  *degree = bps::exactness_degree(g->grid.spec);
  return BPS_OK;
}

bps_status bps_birkhoff_create(const bps_grid* g, bps_birkhoff** out) {
  BPS_REQUIRE(g);
  BPS_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto b = std::make_unique<bps_birkhoff>();
    b->sys = bps::build_birkhoff(g->grid);
    b->identities = bps::identity_residuals(b->sys);
    *out = b.release();
  });
}

void bps_birkhoff_destroy(bps_birkhoff* b) { delete b; }

bps_status bps_birkhoff_size(const bps_birkhoff* b, size_t* n) {
  BPS_REQUIRE(b);
  BPS_REQUIRE(n);
  *n = static_cast<size_t>(b->sys.wB.size());
  return BPS_OK;
}

bps_status bps_birkhoff_matrices(const bps_birkhoff* b, double* ba, double* bb, double* wb) {
  BPS_REQUIRE(b);
  const Eigen::Index n = b->sys.wB.size();
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (ba) ba[r * n + c] = b->sys.Ba(r, c);
      if (bb) bb[r * n + c] = b->sys.Bb(r, c);
    }
    if (wb) wb[r] = b->sys.wB[r];
  }
  return BPS_OK;
}

bps_status bps_birkhoff_identity_count(const bps_birkhoff* b, size_t* count) {
  BPS_REQUIRE(b);
  BPS_REQUIRE(count);
  *count = b->identities.size();
  return BPS_OK;
}

bps_status bps_birkhoff_identity(const bps_birkhoff* b, size_t index, char* name, size_t name_cap, int* applicable,
                                 double* residual) {
  BPS_REQUIRE(b);
  if (index >= b->identities.size()) return fail(BPS_INVALID_ARGUMENT, "identity index out of range");
  const auto& r = b->identities[index];
  if (applicable) *applicable = r.applicable ? 1 : 0;
  if (residual) *residual = r.value;
  return copy_truncated(r.name, name, name_cap);
}

bps_status bps_condition(const char* grid_name, int order, double* cond_full, double* cond_block) {
  BPS_REQUIRE(grid_name);
  return guard([&] {
    const bps::ConditionReport r = bps::condition_report(bps::make_grid(bps::parse_grid_name(grid_name, order)));
    if (cond_full) *cond_full = r.cond_full;
    if (cond_block) *cond_block = r.cond_block;
  });
}

size_t bps_problem_count(void) { return names().size(); }

const char* bps_problem_name(size_t index) { return index < names().size() ? names()[index].c_str() : nullptr; }

void bps_solve_options_init(bps_solve_options* opts) {
  if (!opts) return;
  *opts = bps_solve_options{};
  opts->use_ladder = 1;
}

bps_status bps_solve(const char* problem, const bps_solve_options* opts, bps_solution** out) {
  BPS_REQUIRE(problem);
  BPS_REQUIRE(out);
  *out = nullptr;
  bps_solve_options o;
  bps_solve_options_init(&o);
  if (opts) o = *opts;
  return guard([&] {
    bps::BenchmarkProblem b = bps::make_problem(problem);
    bps::GridSpec spec = b.grid;
    if (o.grid) spec = bps::parse_grid_name(o.grid, spec.order);
    if (o.order > 0) spec.order = o.order;
    if (o.cost_scale > 0.0) b.ocp.cost_scale = o.cost_scale;
    bps::SolverOptions& so = b.solver;
    if (o.feasibility_tol > 0.0) so.feasibility_tol = o.feasibility_tol;
    if (o.optimality_tol > 0.0) so.optimality_tol = o.optimality_tol;
    if (o.complementarity_tol > 0.0) so.complementarity_tol = o.complementarity_tol;
    if (o.max_outer_iters > 0) so.max_outer_iters = o.max_outer_iters;
    if (o.max_inner_iters > 0) so.max_inner_iters = o.max_inner_iters;
    if (o.initial_penalty > 0.0) so.initial_penalty = o.initial_penalty;
    if (o.penalty_growth > 0.0) so.penalty_growth = o.penalty_growth;
    so.print_level = o.print_level;
    so.validate();
    const std::vector<int> ladder = o.use_ladder ? b.ladder : std::vector<int>{};
    bps::OcpSolveResult r = bps::solve_ocp(b.ocp, spec, so, ladder);
    auto s = std::make_unique<bps_solution>();
    s->sol = std::move(r.solution);
    *out = s.release();
  });
}

void bps_solution_destroy(bps_solution* s) { delete s; }

bps_status bps_solution_from_json(const char* text, bps_solution** out) {
  BPS_REQUIRE(text);
  BPS_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto s = std::make_unique<bps_solution>();
    s->sol = bps::solution_from_json(text);
    *out = s.release();
  });
}

bps_status bps_solution_to_json(const bps_solution* s, char** json) {
  BPS_REQUIRE(s);
  BPS_REQUIRE(json);
  *json = nullptr;
  return guard([&] { *json = copy_string(bps::solution_to_json(s->sol)); });
}

bps_status bps_solution_summary(const bps_solution* s, double* objective, double* tf, int* iterations,
                                char* status_name, size_t status_cap) {
  BPS_REQUIRE(s);
  if (objective) *objective = s->sol.objective;
  if (tf) *tf = s->sol.tf;
  if (iterations) *iterations = s->sol.iterations;
  return copy_truncated(s->sol.status, status_name, status_cap);
}

bps_status bps_solution_converged(const bps_solution* s, int* converged) {
  BPS_REQUIRE(s);
  BPS_REQUIRE(converged);
  *converged = s->sol.status == "Optimal" || s->sol.status == "Feasible";
  return BPS_OK;
}

bps_status bps_solution_problem(const bps_solution* s, char* name, size_t cap) {
  BPS_REQUIRE(s);
  return copy_truncated(s->sol.problem, name, cap);
}

void bps_verify_options_init(bps_verify_options* opts) {
  if (!opts) return;
  *opts = bps_verify_options{};
}

bps_status bps_verify(const char* problem, const bps_solution* s, const bps_verify_options* opts, bps_report** out) {
  BPS_REQUIRE(s);
  BPS_REQUIRE(out);
  *out = nullptr;
  bps_verify_options o;
  bps_verify_options_init(&o);
  if (opts) o = *opts;
  return guard([&] {
    const std::string name = problem && *problem ? std::string(problem) : s->sol.problem;
    if (name.empty()) throw bps::Error(bps::ErrorCode::InvalidArgument, "no problem name given or stored");
    const bps::BenchmarkProblem b = bps::make_problem(name);
    bps::VerifyOptions vo = b.verify;
    if (o.tol_bc > 0.0) vo.tol_bc = o.tol_bc;
    if (o.tol_path > 0.0) vo.tol_path = o.tol_path;
    if (o.rtol > 0.0) vo.ode.rtol = o.rtol;
    if (o.atol > 0.0) vo.ode.atol = o.atol;
    vo.rule = o.zero_order_hold ? bps::InterpolationRule::ZeroOrderHold : bps::InterpolationRule::PiecewiseLinear;
    auto r = std::make_unique<bps_report>();
    r->report = bps::verify_solution(b.ocp, s->sol, b.checks, vo);
    r->control.emplace(bps::interpolate_control(s->sol.t, s->sol.U, vo.rule));
    *out = r.release();
  });
}

void bps_report_destroy(bps_report* r) { delete r; }

bps_status bps_report_passed(const bps_report* r, int* passed, int* feasible, int* pontryagin) {
  BPS_REQUIRE(r);
  if (passed) *passed = r->report.passed() ? 1 : 0;
  if (feasible) *feasible = r->report.feasibility.verdict ? 1 : 0;
  if (pontryagin) *pontryagin = r->report.pontryagin.passed() ? 1 : 0;
  return BPS_OK;
}

bps_status bps_report_to_json(const bps_report* r, char** json) {
  BPS_REQUIRE(r);
  BPS_REQUIRE(json);
  *json = nullptr;
  return guard([&] { *json = copy_string(bps::report_to_json(r->report)); });
}

bps_status bps_report_to_csv(const bps_report* r, char** csv) {
  BPS_REQUIRE(r);
  BPS_REQUIRE(csv);
  *csv = nullptr;
  return guard([&] { *csv = copy_string(bps::propagation_csv(r->report.propagation, *r->control)); });
}

}  // extern "C"
