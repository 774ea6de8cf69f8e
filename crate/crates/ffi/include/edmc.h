#ifndef EDMC_H
#define EDMC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EdmcSolver {
  EDMC_SOLVER_RANK_REDUCTION = 0,
  EDMC_SOLVER_RCG = 1,
  EDMC_SOLVER_GD = 2,
  EDMC_SOLVER_MADMM = 3,
} EdmcSolver;

typedef enum EdmcStatus {
  EDMC_STATUS_OK = 0,
  EDMC_STATUS_NULL_POINTER = 1,
  EDMC_STATUS_INVALID_ARGUMENT = 2,
  EDMC_STATUS_SHAPE = 3,
  EDMC_STATUS_SINGULAR = 4,
  EDMC_STATUS_SOLVER_FAILED = 5,
  EDMC_STATUS_BUFFER_TOO_SMALL = 6,
  EDMC_STATUS_PANIC = 7,
  EDMC_STATUS_INTERNAL = 8,
} EdmcStatus;

/**
 * How a solver run ended.
 */
typedef enum EdmcStop {
  EDMC_STOP_GRAD_TOL = 0,
  EDMC_STOP_STEP_TOL = 1,
  EDMC_STOP_COST_STALL = 2,
  EDMC_STOP_MAX_ITER = 3,
  EDMC_STOP_ASCENT_ABORT = 4,
  EDMC_STOP_LINE_SEARCH_FAILED = 5,
  EDMC_STOP_RESIDUAL_TOL = 6,
  EDMC_STOP_DIVERGED = 7,
} EdmcStop;

/**
 * Observed squared distances over `n` points.
 */
typedef struct EdmcProblem EdmcProblem;

typedef struct EdmcSolution EdmcSolution;

/**
 * Tunables for [`edmc_solve`]. Start from [`edmc_options_default`].
 */
typedef struct EdmcOptions {
  size_t max_iters;
  double grad_tol;
  double step_tol;
  /**
   * ℓ₁ weight of the MADMM outlier term.
   */
  double lambda;
} EdmcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *edmc_last_error(void);

/**
 * Tolerances for exact distances.
 */
struct EdmcOptions edmc_options_default(void);

/**
 * Looser tolerances for noisy distances.
 */
struct EdmcOptions edmc_options_noisy(void);

/**
 * Builds a problem from `m` observations `(i[k], j[k], d2[k])`. Pairs are
 * unordered; a repeated pair keeps its last value.
 *
 * # Safety
 * `i`, `j` and `d2` must each point to `m` readable elements and `out` to
 * writable storage for one pointer.
 */
enum EdmcStatus edmc_problem_new(size_t n,
                                 const size_t *i,
                                 const size_t *j,
                                 const double *d2,
                                 size_t m,
                                 struct EdmcProblem **out);

/**
 * # Safety
 * `p` must be NULL or a handle from [`edmc_problem_new`] not yet freed.
 */
void edmc_problem_free(struct EdmcProblem *p);

/**
 * Number of distinct observed pairs.
 *
 * # Safety
 * `p` must be NULL or a live problem handle.
 */
size_t edmc_problem_observed(const struct EdmcProblem *p);

/**
 * Solves for a `dim`-dimensional configuration. `opts` may be NULL for the
 * defaults. A run that stops with a failing status still yields a solution
 * and returns [`EdmcStatus::SolverFailed`].
 *
 * # Safety
 * `p` must be a live problem handle, `opts` NULL or readable, and `out`
 * writable storage for one pointer.
 */
enum EdmcStatus edmc_solve(const struct EdmcProblem *p,
                           enum EdmcSolver solver,
                           size_t dim,
                           const struct EdmcOptions *opts,
                           struct EdmcSolution **out);

/**
 * # Safety
 * `s` must be NULL or a handle from [`edmc_solve`] not yet freed.
 */
void edmc_solution_free(struct EdmcSolution *s);

/**
 * # Safety
 * `s` must be NULL or a live solution handle.
 */
size_t edmc_solution_n(const struct EdmcSolution *s);

/**
 * # Safety
 * `s` must be NULL or a live solution handle.
 */
size_t edmc_solution_dim(const struct EdmcSolution *s);

/**
 * # Safety
 * `s` must be NULL or a live solution handle.
 */
size_t edmc_solution_iters(const struct EdmcSolution *s);

/**
 * # Safety
 * `s` must be NULL or a live solution handle.
 */
double edmc_solution_grad_norm(const struct EdmcSolution *s);

/**
 * # Safety
 * `s` must be a live solution handle and `stop` writable.
 */
enum EdmcStatus edmc_solution_stop(const struct EdmcSolution *s, enum EdmcStop *stop);

/**
 * Copies the centered positions row-major into `buf` (`len >= n * dim`).
 *
 * # Safety
 * `s` must be a live solution handle and `buf` writable for `len` doubles.
 */
enum EdmcStatus edmc_solution_positions(const struct EdmcSolution *s, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDMC_H */
