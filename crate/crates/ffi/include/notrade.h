#ifndef NOTRADE_H
#define NOTRADE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NtStatus {
  NT_STATUS_OK = 0,
  NT_STATUS_NULL_POINTER = 1,
  NT_STATUS_INVALID_ARGUMENT = 2,
  NT_STATUS_NOT_CONVERGED = 3,
  NT_STATUS_NUMERICAL_FAILURE = 4,
  NT_STATUS_SIMULATION_FAILURE = 5,
  NT_STATUS_BUFFER_TOO_SMALL = 6,
  NT_STATUS_PANIC = 7,
} NtStatus;

/**
 * Solved bias/boundary pair.
 */
typedef struct NtSolution NtSolution;

/**
 * Solver settings. Start from [`nt_solver_options_default`].
 */
typedef struct NtSolverOptions {
  double epsilon;
  uint32_t max_iterations;
  uint32_t grid_nodes;
  double grid_extent;
  uint32_t quad_nodes;
} NtSolverOptions;

/**
 * Per-period averages from a simulation run.
 */
typedef struct NtSimResult {
  double gross;
  double net;
  double cost;
  double switch_rate;
  double std_error_gross;
  double std_error_net;
  double std_error_cost;
  uint64_t n_steps;
} NtSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct NtSolverOptions nt_solver_options_default(void);

/**
 * Solves the fixed point. `options` may be null for defaults. On
 * `NotConverged` the last iterate is still stored in `*out`.
 *
 * # Safety
 * `options` must be null or valid; `out` must be a valid pointer.
 */
enum NtStatus nt_solve(double rho0,
                       double rho1,
                       double cost,
                       const struct NtSolverOptions *options,
                       struct NtSolution **out);

/**
 * # Safety
 * `solution` must be null or a pointer returned by [`nt_solve`] not yet freed.
 */
void nt_solution_free(struct NtSolution *solution);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_lambda(const struct NtSolution *solution, double *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_iterations(const struct NtSolution *solution, uint32_t *out);

/**
 * `1` if the solve converged, `0` otherwise.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_converged(const struct NtSolution *solution, int32_t *out);

/**
 * `G(x, q)` with `q = +1` (long) or `-1` (short).
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_boundary(const struct NtSolution *solution,
                                   double x,
                                   int32_t q,
                                   double *out);

/**
 * `h(x0, x1, q)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_bias(const struct NtSolution *solution,
                               double x0,
                               double x1,
                               int32_t q,
                               double *out);

/**
 * Position to hold next (`+1` or `-1`).
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_decide(const struct NtSolution *solution,
                                 double x0,
                                 double x1,
                                 int32_t q,
                                 int32_t *out);

/**
 * Number of grid nodes in the tabulation.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_solution_grid_len(const struct NtSolution *solution, size_t *out);

/**
 * Copies nodes, `H` and the long slice of `G` into caller buffers of length `len`.
 *
 * # Safety
 * Each buffer must hold `len` doubles.
 */
enum NtStatus nt_solution_tabulate(const struct NtSolution *solution,
                                   double *x,
                                   double *h,
                                   double *g_long,
                                   size_t len);

/**
 * Myopic boundary.
 *
 * # Safety
 * `out` must be valid.
 */
enum NtStatus nt_naive_boundary(double rho0,
                                double rho1,
                                double cost,
                                double x,
                                int32_t q,
                                double *out);

/**
 * Small-cost first-order boundary.
 *
 * # Safety
 * `out` must be valid.
 */
enum NtStatus nt_first_order_boundary(double rho0,
                                      double rho1,
                                      double cost,
                                      double x,
                                      int32_t q,
                                      double *out);

/**
 * Simulates the solved policy for `n_steps` periods.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NtStatus nt_simulate(const struct NtSolution *solution,
                          uint64_t n_steps,
                          uint64_t seed,
                          struct NtSimResult *out);

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to fit, into `buf`. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t nt_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOTRADE_H */
