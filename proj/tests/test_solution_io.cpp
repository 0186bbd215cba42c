#include "bps/error.hpp"
#include "bps/pipeline.hpp"
#include "bps/problems.hpp"
#include "bps/solution_io.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace bps;

namespace {

ErrorCode parse_error(const std::string& text) {
  try {
    solution_from_json(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("solver output survives a JSON round trip bit for bit") {
  const BenchmarkProblem b = lq_oracle();
  const TrajectorySolution s = solve_ocp(b.ocp, b.grid, b.solver).solution;
  const TrajectorySolution r = solution_from_json(solution_to_json(s));
  CHECK(r.problem == "lq");
  CHECK(r.grid == s.grid);
  CHECK(r.order == s.order);
  CHECK(r.t == s.t);
  CHECK(r.X == s.X);
  CHECK(r.V == s.V);
  CHECK(r.U == s.U);
  CHECK(r.xa == s.xa);
  CHECK(r.xb == s.xb);
  CHECK(r.lambda == s.lambda);
  CHECK(r.nu == s.nu);
  CHECK(r.hamiltonian == s.hamiltonian);
  CHECK(r.quadrature_weights == s.quadrature_weights);
  CHECK(r.has_duals);
  CHECK(r.objective == s.objective);
  CHECK(r.tf == s.tf);
  CHECK(r.status == s.status);
  CHECK(r.kkt.feasibility == s.kkt.feasibility);
  CHECK(r.iterations == s.iterations);
  CHECK(r.mu.rows() == s.nodes());
  CHECK(r.mu.cols() == 0);
  // Writing again gives the same text.
  CHECK(solution_to_json(r) == solution_to_json(s));
}

TEST_CASE("minimal documents fall back to the samples") {
  const TrajectorySolution s = solution_from_json(R"({"schema": 1, "t": [0, 0.5, 2], "X": [[1, 2], [3, 4], [5, 6]],
                                                     "U": [7, 8, 9]})");
  CHECK(s.xa == Eigen::Vector2d(1, 2));
  CHECK(s.xb == Eigen::Vector2d(5, 6));
  CHECK(s.ta == 0.0);
  CHECK(s.tf == 2.0);
  CHECK(s.U.rows() == 3);
  CHECK(s.U.cols() == 1);
  CHECK_FALSE(s.has_duals);
  CHECK(s.cost_scale == 1.0);
}

TEST_CASE("non-finite numbers travel as null") {
  TrajectorySolution s;
  s.t = Eigen::Vector2d(0, 1);
  s.X = Eigen::MatrixXd::Zero(2, 1);
  s.U = Eigen::MatrixXd::Zero(2, 1);
  s.tf = 1.0;
  s.objective = std::numeric_limits<double>::quiet_NaN();
  const std::string text = solution_to_json(s);
  CHECK(text.find("\"objective\": null") != std::string::npos);
  CHECK(std::isnan(solution_from_json(text).objective));
}

TEST_CASE("malformed documents are parse errors") {
  CHECK(parse_error("{") == ErrorCode::Parse);
  CHECK(parse_error("[1, 2]") == ErrorCode::Parse);
  CHECK(parse_error(R"({"t": [0, 1], "X": [[0], [1]], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 2, "t": [0, 1], "X": [[0], [1]], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 1, "t": [0, 1], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 1, "t": [0, 1], "X": [[0], [1, 2]], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 1, "t": [0, 1, 2], "X": [[0], [1]], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 1, "t": [1, 0], "X": [[0], [1]], "U": [[0], [0]]})") == ErrorCode::Parse);
  CHECK(parse_error(R"({"schema": 1, "t": [0, "a"], "X": [[0], [1]], "U": [[0], [0]]})") == ErrorCode::Parse);
}

TEST_CASE("report and trajectory exports") {
  const BenchmarkProblem b = lq_oracle();
  const TrajectorySolution s = solve_ocp(b.ocp, b.grid, b.solver).solution;
  const VnvReport rep = verify_solution(b.ocp, s, b.checks);
  const std::string json = report_to_json(rep);
  CHECK(json.find("\"passed\": true") != std::string::npos);
  CHECK(json.find("costate_closed_form") != std::string::npos);
  const std::string csv = propagation_csv(rep.propagation, interpolate_control(s.t, s.U));
  CHECK(csv.rfind("t,x0,x1,u0\n", 0) == 0);
  const size_t lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == rep.propagation.t.size() + 1);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
