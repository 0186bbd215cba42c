#ifndef BPS_BPS_H
#define BPS_BPS_H

/* C interface of the bps shared library. Every call returns a bps_status;
   on failure bps_last_error() holds a message for the calling thread.
   Handles are opaque and owned by the caller until passed to their
   _destroy function. Strings returned through char** are freed with
   bps_string_free. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(BPS_BUILDING_LIBRARY)
#    define BPS_API __declspec(dllexport)
#  else
#    define BPS_API __declspec(dllimport)
#  endif
#else
#  define BPS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bps_status {
  BPS_OK = 0,
  BPS_INVALID_ARGUMENT = 1,
  BPS_INVALID_ORDER = 2,
  BPS_ROOT_FAILURE = 3,
  BPS_SHAPE = 4,
  BPS_INVALID_INTERVAL = 5,
  BPS_NON_FINITE = 6,
  BPS_NUMERIC = 7,
  BPS_PROPAGATION = 8,
  BPS_UNKNOWN_NAME = 9,
  BPS_PARSE = 10,
  BPS_IO = 11,
  BPS_INTERNAL = 12,
  BPS_NULL_POINTER = 13,
  BPS_BUFFER_TOO_SMALL = 14
} bps_status;

typedef struct bps_grid bps_grid;
typedef struct bps_birkhoff bps_birkhoff;
typedef struct bps_solution bps_solution;
typedef struct bps_report bps_report;

BPS_API const char* bps_version(void);
BPS_API const char* bps_last_error(void);
BPS_API const char* bps_status_name(bps_status s);
BPS_API void bps_string_free(char* s);

/* Grids. name is one of lgl, lgr, lg, cgl, cgr, cg. */
BPS_API bps_status bps_grid_create(const char* name, int order, bps_grid** out);
BPS_API void bps_grid_destroy(bps_grid* g);
BPS_API bps_status bps_grid_size(const bps_grid* g, size_t* n);
/* Copies size() nodes and weights into the caller's arrays. */
BPS_API bps_status bps_grid_nodes(const bps_grid* g, double* nodes, double* weights);
BPS_API bps_status bps_grid_exactness(const bps_grid* g, int* degree);

/* Birkhoff matrices. Matrices are (N+1) x (N+1), row-major. */
BPS_API bps_status bps_birkhoff_create(const bps_grid* g, bps_birkhoff** out);
BPS_API void bps_birkhoff_destroy(bps_birkhoff* b);
BPS_API bps_status bps_birkhoff_size(const bps_birkhoff* b, size_t* n);
BPS_API bps_status bps_birkhoff_matrices(const bps_birkhoff* b, double* ba, double* bb, double* wb);
BPS_API bps_status bps_birkhoff_identity_count(const bps_birkhoff* b, size_t* count);
/* Text outputs (name, status_name, problem name) are NUL-terminated and cut to the
   given capacity; a cut returns BPS_BUFFER_TOO_SMALL after filling the other outputs.
   A NULL text buffer is skipped. */
BPS_API bps_status bps_birkhoff_identity(const bps_birkhoff* b, size_t index, char* name, size_t name_cap,
                                         int* applicable, double* residual);
BPS_API bps_status bps_condition(const char* grid_name, int order, double* cond_full, double* cond_block);

/* Problem presets. */
BPS_API size_t bps_problem_count(void);
BPS_API const char* bps_problem_name(size_t index);

/* Solver settings. Zero or negative entries keep the preset's value. */
typedef struct bps_solve_options {
  const char* grid;  /* NULL keeps the preset grid kind */
  int order;         /* N */
  double cost_scale;
  double feasibility_tol;
  double optimality_tol;
  double complementarity_tol;
  int max_outer_iters;
  int max_inner_iters;
  double initial_penalty;
  double penalty_growth;
  int use_ladder; /* 1 warm-starts through the preset ladder, 0 solves directly */
  int print_level;
} bps_solve_options;

BPS_API void bps_solve_options_init(bps_solve_options* opts);
BPS_API bps_status bps_solve(const char* problem, const bps_solve_options* opts, bps_solution** out);
BPS_API void bps_solution_destroy(bps_solution* s);
BPS_API bps_status bps_solution_from_json(const char* text, bps_solution** out);
BPS_API bps_status bps_solution_to_json(const bps_solution* s, char** json);
/* status_name receives Optimal, Feasible, MaxIter or Diverged. */
BPS_API bps_status bps_solution_summary(const bps_solution* s, double* objective, double* tf, int* iterations,
                                        char* status_name, size_t status_cap);
/* 1 for Optimal or Feasible. */
BPS_API bps_status bps_solution_converged(const bps_solution* s, int* converged);
BPS_API bps_status bps_solution_problem(const bps_solution* s, char* name, size_t cap);

/* Verification. Zero or negative tolerances keep the preset's values. */
typedef struct bps_verify_options {
  double tol_bc;
  double tol_path;
  int zero_order_hold; /* 0 piecewise linear control, 1 zero-order hold */
  double rtol;
  double atol;
} bps_verify_options;

BPS_API void bps_verify_options_init(bps_verify_options* opts);
BPS_API bps_status bps_verify(const char* problem, const bps_solution* s, const bps_verify_options* opts,
                              bps_report** out);
BPS_API void bps_report_destroy(bps_report* r);
BPS_API bps_status bps_report_passed(const bps_report* r, int* passed, int* feasible, int* pontryagin);
BPS_API bps_status bps_report_to_json(const bps_report* r, char** json);
/* t, x#, u# over the propagation samples. */
BPS_API bps_status bps_report_to_csv(const bps_report* r, char** csv);

#ifdef __cplusplus
}
#endif

#endif
