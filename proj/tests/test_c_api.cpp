// Exercises the shared library through its C header only.

#include "bps/bps.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

TEST_CASE("grid handle") {
  bps_grid* g = nullptr;
  REQUIRE(bps_grid_create("lgl", 2, &g) == BPS_OK);
  size_t n = 0;
  REQUIRE(bps_grid_size(g, &n) == BPS_OK);
  REQUIRE(n == 3);
  std::vector<double> tau(n), w(n);
  REQUIRE(bps_grid_nodes(g, tau.data(), w.data()) == BPS_OK);
  CHECK(tau[0] == -1.0);
  CHECK(tau[1] == doctest::Approx(0.0));
  CHECK(tau[2] == 1.0);
  CHECK(w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  int degree = 0;
  REQUIRE(bps_grid_exactness(g, &degree) == BPS_OK);
  CHECK(degree == 3);
  bps_grid_destroy(g);
  bps_grid_destroy(nullptr);
}

TEST_CASE("error reporting") {
  bps_grid* g = nullptr;
  CHECK(bps_grid_create("xyz", 4, &g) == BPS_UNKNOWN_NAME);
  CHECK(g == nullptr);
  CHECK(std::strlen(bps_last_error()) > 0);
  CHECK(bps_grid_create("cgl", 0, &g) == BPS_INVALID_ORDER);
  CHECK(bps_grid_create(nullptr, 4, &g) == BPS_NULL_POINTER);
  CHECK(bps_grid_create("cgl", 4, nullptr) == BPS_NULL_POINTER);
  CHECK(std::string(bps_status_name(BPS_PARSE)) == "parse");
  REQUIRE(bps_grid_create("cgl", 4, &g) == BPS_OK);
  CHECK(std::strlen(bps_last_error()) == 0);
  bps_grid_destroy(g);
}

TEST_CASE("birkhoff handle") {
  bps_grid* g = nullptr;
  REQUIRE(bps_grid_create("lgl", 1, &g) == BPS_OK);
  bps_birkhoff* b = nullptr;
  REQUIRE(bps_birkhoff_create(g, &b) == BPS_OK);
  bps_grid_destroy(g);  // the system keeps its own copy
  size_t n = 0;
  REQUIRE(bps_birkhoff_size(b, &n) == BPS_OK);
  REQUIRE(n == 2);
  double ba[4], bb[4], wb[2];
  REQUIRE(bps_birkhoff_matrices(b, ba, bb, wb) == BPS_OK);
  const double ba_ref[4] = {0, 0, 1, 1}, bb_ref[4] = {-1, -1, 0, 0};
  for (int i = 0; i < 4; ++i) {
    CHECK(ba[i] == doctest::Approx(ba_ref[i]));
    CHECK(bb[i] == doctest::Approx(bb_ref[i]));
  }
  size_t count = 0;
  REQUIRE(bps_birkhoff_identity_count(b, &count) == BPS_OK);
  CHECK(count == 5);
  for (size_t i = 0; i < count; ++i) {
    char name[32];
    int applicable = 0;
    double r = 1.0;
    REQUIRE(bps_birkhoff_identity(b, i, name, sizeof name, &applicable, &r) == BPS_OK);
    CHECK(applicable == 1);
    CHECK(r <= 1e-15);
  }
  char tiny[2];
  int applicable = 0;
  double r = 0;
  CHECK(bps_birkhoff_identity(b, 0, tiny, sizeof tiny, &applicable, &r) == BPS_BUFFER_TOO_SMALL);
  CHECK(bps_birkhoff_identity(b, count, tiny, sizeof tiny, &applicable, &r) == BPS_INVALID_ARGUMENT);
  bps_birkhoff_destroy(b);

  double full = 0, block = 0;
  REQUIRE(bps_condition("cgl", 50, &full, &block) == BPS_OK);
  CHECK(full > 1.0);
  CHECK(block == doctest::Approx(1.77).epsilon(0.02));
}

TEST_CASE("problem registry") {
  REQUIRE(bps_problem_count() == 4);
  CHECK(std::string(bps_problem_name(0)) == "ml1");
  CHECK(std::string(bps_problem_name(3)) == "lq");
  CHECK(bps_problem_name(4) == nullptr);
}

TEST_CASE("solve, serialize and verify") {
  bps_solve_options o;
  bps_solve_options_init(&o);
  o.order = 20;
  bps_solution* s = nullptr;
  REQUIRE(bps_solve("lq", &o, &s) == BPS_OK);
  double j = 0, tf = 0;
  int iters = 0, converged = 0;
  char status[16];
  REQUIRE(bps_solution_summary(s, &j, &tf, &iters, status, sizeof status) == BPS_OK);
  CHECK(std::abs(j - 6.0) <= 1e-4);
  CHECK(tf == 1.0);
  CHECK(std::string(status) == "Optimal");
  REQUIRE(bps_solution_converged(s, &converged) == BPS_OK);
  CHECK(converged == 1);
  char name[16];
  REQUIRE(bps_solution_problem(s, name, sizeof name) == BPS_OK);
  CHECK(std::string(name) == "lq");

  char* json = nullptr;
  REQUIRE(bps_solution_to_json(s, &json) == BPS_OK);
  bps_solution* back = nullptr;
  REQUIRE(bps_solution_from_json(json, &back) == BPS_OK);
  bps_string_free(json);

  bps_report* rep = nullptr;
  REQUIRE(bps_verify(nullptr, back, nullptr, &rep) == BPS_OK);
  int passed = 0, feasible = 0, pontryagin = 0;
  REQUIRE(bps_report_passed(rep, &passed, &feasible, &pontryagin) == BPS_OK);
  CHECK(passed == 1);
  CHECK(feasible == 1);
  CHECK(pontryagin == 1);
  char* csv = nullptr;
  REQUIRE(bps_report_to_csv(rep, &csv) == BPS_OK);
  CHECK(std::string(csv).rfind("t,x0,x1,u0\n", 0) == 0);
  bps_string_free(csv);
  char* rj = nullptr;
  REQUIRE(bps_report_to_json(rep, &rj) == BPS_OK);
  CHECK(std::string(rj).find("\"passed\": true") != std::string::npos);
  bps_string_free(rj);

  bps_report_destroy(rep);
  bps_solution_destroy(back);
  bps_solution_destroy(s);
}

TEST_CASE("solve option overrides and failures") {
  bps_solve_options o;
  bps_solve_options_init(&o);
  bps_solution* s = nullptr;
  CHECK(bps_solve("nope", &o, &s) == BPS_UNKNOWN_NAME);
  CHECK(s == nullptr);
  o.grid = "bad";
  CHECK(bps_solve("lq", &o, &s) == BPS_UNKNOWN_NAME);
  bps_solve_options_init(&o);
  o.max_inner_iters = 2;
  o.use_ladder = 0;
  REQUIRE(bps_solve("ml1", &o, &s) == BPS_OK);
  int converged = 1;
  REQUIRE(bps_solution_converged(s, &converged) == BPS_OK);
  CHECK(converged == 0);
  bps_solution_destroy(s);
}

TEST_CASE("verification of a hand-made trajectory") {
  // Free fall of the lander: a well-formed document that is not feasible.
  const char* doc = R"({"schema": 1, "problem": "ml1", "t": [0, 1.4],
                        "X": [[1, -0.783, 1], [0, 0, 0.4]], "U": [[0], [0]]})";
  bps_solution* s = nullptr;
  REQUIRE(bps_solution_from_json(doc, &s) == BPS_OK);
  bps_report* rep = nullptr;
  bps_verify_options vo;
  bps_verify_options_init(&vo);
  vo.zero_order_hold = 1;
  REQUIRE(bps_verify(nullptr, s, &vo, &rep) == BPS_OK);
  int passed = 1, feasible = 1, pontryagin = 0;
  REQUIRE(bps_report_passed(rep, &passed, &feasible, &pontryagin) == BPS_OK);
  CHECK(passed == 0);
  CHECK(feasible == 0);
  CHECK(pontryagin == 1);  // no duals: nothing to fail
  bps_report_destroy(rep);
  CHECK(bps_verify("lq", s, nullptr, &rep) == BPS_SHAPE);
  bps_solution_destroy(s);
  CHECK(bps_solution_from_json("{", &s) == BPS_PARSE);
}
