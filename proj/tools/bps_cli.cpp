// Command-line front end. Talks to the library through the C API only.

#include "bps/bps.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitVerify = 2;
constexpr int kExitUsage = 3;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(bps_status s) {
  switch (s) {
    case BPS_INVALID_ARGUMENT:
    case BPS_INVALID_ORDER:
    case BPS_UNKNOWN_NAME:
    case BPS_PARSE:
    case BPS_IO:
    case BPS_NULL_POINTER: return kExitUsage;
    default: return kExitSolver;
  }
}

void check(bps_status s) {
  if (s != BPS_OK) throw Failure{exit_code_for(s), bps_last_error()};
}

template <class T, void (*D)(T*)>
struct Deleter {
  void operator()(T* p) const { D(p); }
};
using GridPtr = std::unique_ptr<bps_grid, Deleter<bps_grid, bps_grid_destroy>>;
using BirkhoffPtr = std::unique_ptr<bps_birkhoff, Deleter<bps_birkhoff, bps_birkhoff_destroy>>;
using SolutionPtr = std::unique_ptr<bps_solution, Deleter<bps_solution, bps_solution_destroy>>;
using ReportPtr = std::unique_ptr<bps_report, Deleter<bps_report, bps_report_destroy>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  bps_string_free(s);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes to the file named by `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{kExitUsage, "cannot write " + path};
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure{kExitUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void require_format(const std::string& format) {
  if (format != "csv" && format != "json") throw Failure{kExitUsage, "--format must be csv or json"};
}

// ---------------------------------------------------------------- grid

struct GridArgs {
  std::string grid = "cgl";
  int order = 8;
  std::string out, format = "csv";
};

int run_grid(const GridArgs& a) {
  require_format(a.format);
  bps_grid* raw = nullptr;
  check(bps_grid_create(a.grid.c_str(), a.order, &raw));
  GridPtr g(raw);
  size_t n = 0;
  check(bps_grid_size(g.get(), &n));
  std::vector<double> tau(n), w(n);
  check(bps_grid_nodes(g.get(), tau.data(), w.data()));
  std::ostringstream out;
  if (a.format == "json") {
    nlohmann::json j = {{"grid", a.grid}, {"N", a.order}, {"tau", tau}, {"w", w}};
    out << j.dump(1);
  } else {
    out << "j,tau,w\n";
    for (size_t j = 0; j < n; ++j) out << j << "," << fmt(tau[j]) << "," << fmt(w[j]) << "\n";
  }
  emit(a.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------- birkhoff

struct BirkhoffArgs {
  std::string grid = "cgl";
  int order = 8;
  std::string out;  // directory; stdout when empty
};

std::string matrix_csv(const std::vector<double>& m, size_t n) {
  std::ostringstream out;
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < n; ++c) out << (c ? "," : "") << fmt(m[r * n + c]);
    out << "\n";
  }
  return out.str();
}

int run_birkhoff(const BirkhoffArgs& a) {
  bps_grid* graw = nullptr;
  check(bps_grid_create(a.grid.c_str(), a.order, &graw));
  GridPtr g(graw);
  bps_birkhoff* braw = nullptr;
  check(bps_birkhoff_create(g.get(), &braw));
  BirkhoffPtr b(braw);
  size_t n = 0;
  check(bps_birkhoff_size(b.get(), &n));
  std::vector<double> ba(n * n), bb(n * n), wb(n);
  check(bps_birkhoff_matrices(b.get(), ba.data(), bb.data(), wb.data()));
  size_t count = 0;
  check(bps_birkhoff_identity_count(b.get(), &count));
  std::ostringstream ids;
  ids << "identity,applicable,residual\n";
  for (size_t i = 0; i < count; ++i) {
    char name[64];
    int applicable = 0;
    double value = 0.0;
    check(bps_birkhoff_identity(b.get(), i, name, sizeof name, &applicable, &value));
    ids << name << "," << applicable << "," << fmt(value) << "\n";
  }
  std::ostringstream wcsv;
  for (size_t j = 0; j < n; ++j) wcsv << fmt(wb[j]) << "\n";
  if (a.out.empty()) {
    std::cout << "# Ba\n" << matrix_csv(ba, n) << "# Bb\n" << matrix_csv(bb, n) << "# wB\n" << wcsv.str()
              << "# identities\n" << ids.str();
  } else {
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    const std::filesystem::path dir(a.out);
    emit((dir / "Ba.csv").string(), matrix_csv(ba, n));
    emit((dir / "Bb.csv").string(), matrix_csv(bb, n));
    emit((dir / "wB.csv").string(), wcsv.str());
    emit((dir / "identities.csv").string(), ids.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- cond

struct CondArgs {
  std::string grid = "cgl";
  int from = 50, to = 500, step = 50;
  std::string out, format = "csv";
};

int run_cond(const CondArgs& a) {
  require_format(a.format);
  if (a.from < 1 || a.to < a.from || a.step < 1) throw Failure{kExitUsage, "need 1 <= --from <= --to and --step >= 1"};
  std::ostringstream out;
  nlohmann::json rows = nlohmann::json::array();
  if (a.format == "csv") out << "N,cond_full,cond_block\n";
  for (int n = a.from; n <= a.to; n += a.step) {
    double full = 0.0, block = 0.0;
    check(bps_condition(a.grid.c_str(), n, &full, &block));
    if (a.format == "csv") {
      out << n << "," << fmt(full) << "," << fmt(block) << "\n";
    } else {
      rows.push_back({{"N", n}, {"cond_full", full}, {"cond_block", block}});
    }
  }
  if (a.format == "json") out << rows.dump(1);
  emit(a.out, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string problem;
  std::string grid;
  int order = 0;
  double cost_scale = 0.0;
  double tol_feas = 0.0, tol_opt = 0.0, tol_compl = 0.0;
  int max_iter = 0;
  bool no_ladder = false;
  int verbose = 0;
  std::string out;
};

struct SolveOutcome {
  SolutionPtr solution;
  std::string status;
  double objective = 0.0, tf = 0.0, seconds = 0.0;
  int iterations = 0;
  bool converged = false;
};

SolveOutcome solve(const SolveArgs& a) {
  bps_solve_options o;
  bps_solve_options_init(&o);
  if (!a.grid.empty()) o.grid = a.grid.c_str();
  o.order = a.order;
  o.cost_scale = a.cost_scale;
  o.feasibility_tol = a.tol_feas;
  o.optimality_tol = a.tol_opt;
  o.complementarity_tol = a.tol_compl;
  o.max_inner_iters = a.max_iter;
  o.use_ladder = a.no_ladder ? 0 : 1;
  o.print_level = a.verbose;
  const auto start = std::chrono::steady_clock::now();
  bps_solution* raw = nullptr;
  check(bps_solve(a.problem.c_str(), &o, &raw));
  SolveOutcome r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.solution.reset(raw);
  char status[32];
  check(bps_solution_summary(raw, &r.objective, &r.tf, &r.iterations, status, sizeof status));
  r.status = status;
  int converged = 0;
  check(bps_solution_converged(raw, &converged));
  r.converged = converged != 0;
  return r;
}

int run_solve(const SolveArgs& a) {
  SolveOutcome r = solve(a);
  char* json = nullptr;
  check(bps_solution_to_json(r.solution.get(), &json));
  emit(a.out, take(json));
  std::fprintf(stderr, "%s: %s J=%s tf=%s iterations=%d (%.2fs)\n", a.problem.c_str(), r.status.c_str(),
               fmt(r.objective).c_str(), fmt(r.tf).c_str(), r.iterations, r.seconds);
  return r.converged ? kExitOk : kExitSolver;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string in, problem;
  double tol_bc = 0.0, tol_path = 0.0;
  bool zoh = false;
  std::string out, csv, format = "json";
};

int run_verify(const VerifyArgs& a) {
  require_format(a.format);
  bps_solution* sraw = nullptr;
  check(bps_solution_from_json(slurp(a.in).c_str(), &sraw));
  SolutionPtr s(sraw);
  bps_verify_options o;
  bps_verify_options_init(&o);
  o.tol_bc = a.tol_bc;
  o.tol_path = a.tol_path;
  o.zero_order_hold = a.zoh ? 1 : 0;
  bps_report* rraw = nullptr;
  check(bps_verify(a.problem.empty() ? nullptr : a.problem.c_str(), s.get(), &o, &rraw));
  ReportPtr r(rraw);
  char* json = nullptr;
  check(bps_report_to_json(r.get(), &json));
  char* csv = nullptr;
  check(bps_report_to_csv(r.get(), &csv));
  const std::string report = take(json), traj = take(csv);
  emit(a.out, a.format == "json" ? report : traj);
  if (!a.csv.empty()) emit(a.csv, traj);
  int passed = 0, feasible = 0, pontryagin = 0;
  check(bps_report_passed(r.get(), &passed, &feasible, &pontryagin));
  std::fprintf(stderr, "feasibility %s, necessary conditions %s\n", feasible ? "pass" : "FAIL",
               pontryagin ? "pass" : "FAIL");
  return passed ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string out, format = "csv";
};

struct BenchRow {
  std::string problem, status, error;
  double objective = 0.0, tf = 0.0, seconds = 0.0;
  int iterations = 0;
  bool converged = false, feasible = false, pontryagin = false;
};

BenchRow bench_one(const std::string& name) {
  BenchRow row;
  row.problem = name;
  try {
    SolveArgs sa;
    sa.problem = name;
    SolveOutcome r = solve(sa);
    row.status = r.status;
    row.objective = r.objective;
    row.tf = r.tf;
    row.seconds = r.seconds;
    row.iterations = r.iterations;
    row.converged = r.converged;
    bps_report* raw = nullptr;
    check(bps_verify(name.c_str(), r.solution.get(), nullptr, &raw));
    ReportPtr rep(raw);
    int passed = 0, feasible = 0, pontryagin = 0;
    check(bps_report_passed(rep.get(), &passed, &feasible, &pontryagin));
    row.feasible = feasible != 0;
    row.pontryagin = pontryagin != 0;
  } catch (const Failure& f) {
    row.error = f.message;
  }
  return row;
}

int run_bench(const BenchArgs& a) {
  require_format(a.format);
  std::vector<std::string> names;
  for (size_t i = 0; i < bps_problem_count(); ++i) names.emplace_back(bps_problem_name(i));
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BIRKHOFF_THREADS")) {
    const int v = std::atoi(env);
    if (v < 1) throw Failure{kExitUsage, "BIRKHOFF_THREADS must be a positive integer"};
    threads = static_cast<unsigned>(v);
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(names.size()));
  std::vector<BenchRow> rows(names.size());
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < names.size(); i = next++) rows[i] = bench_one(names[i]);
    });
  }
  for (auto& th : pool) th.join();

  std::ostringstream out;
  int code = kExitOk;
  nlohmann::json arr = nlohmann::json::array();
  if (a.format == "csv") out << "problem,status,objective,tf,iterations,seconds,feasible,necessary_conditions,error\n";
  for (const auto& r : rows) {
    if (!r.error.empty() || !r.converged) code = std::max(code, kExitSolver);
    else if (!r.feasible || !r.pontryagin) code = std::max(code, kExitVerify);
    if (a.format == "csv") {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      out << r.problem << "," << r.status << "," << fmt(r.objective) << "," << fmt(r.tf) << "," << r.iterations << ","
          << fmt(r.seconds) << "," << r.feasible << "," << r.pontryagin << "," << err << "\n";
    } else {
      arr.push_back({{"problem", r.problem}, {"status", r.status}, {"objective", r.objective}, {"tf", r.tf},
                     {"iterations", r.iterations}, {"seconds", r.seconds}, {"feasible", r.feasible},
                     {"necessary_conditions", r.pontryagin}, {"error", r.error}});
    }
  }
  if (a.format == "json") out << arr.dump(1);
  emit(a.out, out.str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birkhoff pseudospectral transcription, solve and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bps_version()));

  const std::vector<std::string> grids = {"lgl", "lgr", "lg", "cgl", "cgr", "cg"};
  auto grid_check = CLI::IsMember(grids, CLI::ignore_case);

  GridArgs ga;
  auto* grid = app.add_subcommand("grid", "Nodes and weights as j,tau,w");
  grid->add_option("--grid", ga.grid, "Grid kind")->check(grid_check);
  grid->add_option("--N", ga.order, "Grid order N (N+1 nodes)")->check(CLI::Range(1, 4096));
  grid->add_option("--out", ga.out, "Output file (stdout when omitted)");
  grid->add_option("--format", ga.format, "csv or json");

  BirkhoffArgs ba;
  auto* birk = app.add_subcommand("birkhoff", "Ba, Bb, wB and identity residuals");
  birk->add_option("--grid", ba.grid, "Grid kind")->check(grid_check);
  birk->add_option("--N", ba.order, "Grid order N")->check(CLI::Range(1, 4096));
  birk->add_option("--out", ba.out, "Output directory (stdout when omitted)");

  CondArgs ca;
  auto* cond = app.add_subcommand("cond", "Condition numbers over a sweep of N");
  cond->add_option("--grid", ca.grid, "Grid kind")->check(grid_check);
  cond->add_option("--from", ca.from, "First N");
  cond->add_option("--to", ca.to, "Last N");
  cond->add_option("--step", ca.step, "Step in N");
  cond->add_option("--out", ca.out, "Output file (stdout when omitted)");
  cond->add_option("--format", ca.format, "csv or json");

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Transcribe, solve and write the solution JSON");
  solve_cmd->add_option("--problem", sa.problem, "Preset name")->required();
  solve_cmd->add_option("--grid", sa.grid, "Grid kind (preset default when omitted)")->check(grid_check);
  solve_cmd->add_option("--N", sa.order, "Grid order N")->check(CLI::Range(1, 4096));
  solve_cmd->add_option("--cost-scale", sa.cost_scale, "Objective scale factor")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol-feas", sa.tol_feas, "Feasibility tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol-opt", sa.tol_opt, "Optimality tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol-compl", sa.tol_compl, "Complementarity tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", sa.max_iter, "Newton iteration cap")->check(CLI::PositiveNumber);
  solve_cmd->add_flag("--no-ladder", sa.no_ladder, "Solve the target N directly");
  solve_cmd->add_flag("-v,--verbose", sa.verbose, "Iteration log on stderr");
  solve_cmd->add_option("--out", sa.out, "Solution JSON file (stdout when omitted)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Propagate and check a solution JSON");
  verify->add_option("--in", va.in, "Solution JSON")->required();
  verify->add_option("--problem", va.problem, "Preset name (taken from the JSON when omitted)");
  verify->add_option("--tol-bc", va.tol_bc, "Boundary-condition tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--tol-path", va.tol_path, "Path-constraint tolerance")->check(CLI::PositiveNumber);
  verify->add_flag("--zoh", va.zoh, "Zero-order-hold control instead of piecewise linear");
  verify->add_option("--out", va.out, "Report file (stdout when omitted)");
  verify->add_option("--csv", va.csv, "Also write t, x#, u# samples here");
  verify->add_option("--format", va.format, "json report or csv samples on --out");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Solve and verify every preset");
  bench->add_option("--out", bench_args.out, "Summary file (stdout when omitted)");
  bench->add_option("--format", bench_args.format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*grid) return run_grid(ga);
    if (*birk) return run_birkhoff(ba);
    if (*cond) return run_cond(ca);
    if (*solve_cmd) return run_solve(sa);
    if (*verify) return run_verify(va);
    if (*bench) return run_bench(bench_args);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.exit_code;
  }
  return kExitUsage;
}
