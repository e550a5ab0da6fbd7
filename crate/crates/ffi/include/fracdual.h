#ifndef FRACDUAL_H
#define FRACDUAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdStatus {
  FD_STATUS_OK = 0,
  FD_STATUS_NULL_POINTER = 1,
  FD_STATUS_INVALID_ARGUMENT = 2,
  FD_STATUS_PARSE_ERROR = 3,
  FD_STATUS_NUMERICAL_FAILURE = 4,
  FD_STATUS_UNSUPPORTED = 5,
  FD_STATUS_PANIC = 6,
} FdStatus;

/**
 * Fractional orders `alpha` and `s`.
 */
typedef struct FdParams FdParams;

/**
 * A solved trajectory.
 */
typedef struct FdTrajectory FdTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fd_version(void);

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *fd_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum FdStatus fd_params_new(double alpha, double s, struct FdParams **out);

/**
 * # Safety
 * `params` must come from [`fd_params_new`] and not be freed twice.
 */
void fd_params_free(struct FdParams *params);

/**
 * `C_α` and `C_{1,s}`.
 *
 * # Safety
 * `params` must be a live handle; outputs must be valid for writes.
 */
enum FdStatus fd_params_constants(const struct FdParams *params, double *c_alpha, double *c_1s);

/**
 * Marchaud derivative at `t_eval` of samples `u(t_start + k dt)` whose past
 * before `t_start` is the constant `past_value`.
 *
 * # Safety
 * `samples` must point to `n_samples` doubles; `out` must be writable.
 */
enum FdStatus fd_marchaud_sampled(const struct FdParams *params,
                                  double t_start,
                                  double dt,
                                  const double *samples,
                                  size_t n_samples,
                                  double past_value,
                                  double t_eval,
                                  double *out);

/**
 * `(-Δ)^s u` at grid node `node` for values on the uniform grid
 * `[x_min, x_max]`, with `u = exterior_value` outside the grid.
 *
 * # Safety
 * `values` must point to `n` doubles; `out` must be writable.
 */
enum FdStatus fd_frac_laplacian_sampled(const struct FdParams *params,
                                        double x_min,
                                        double x_max,
                                        const double *values,
                                        size_t n,
                                        double exterior_value,
                                        size_t node,
                                        double *out);

/**
 * Solves the problem described by a JSON document (the `problem` object of
 * a CLI config with every field given).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FdStatus fd_run_from_json(const char *json, struct FdTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`fd_run_from_json`] and not be freed twice.
 */
void fd_trajectory_free(struct FdTrajectory *traj);

/**
 * Number of stored time levels and of grid nodes.
 *
 * # Safety
 * `traj` must be a live handle; outputs must be writable.
 */
enum FdStatus fd_trajectory_shape(const struct FdTrajectory *traj,
                                  size_t *n_levels,
                                  size_t *n_nodes);

/**
 * Time of level `level`.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum FdStatus fd_trajectory_time(const struct FdTrajectory *traj, size_t level, double *out);

/**
 * Copies the node coordinates into `buf`, which holds `len >= n_nodes` doubles.
 *
 * # Safety
 * `buf` must be writable for `len` doubles.
 */
enum FdStatus fd_trajectory_nodes(const struct FdTrajectory *traj, double *buf, size_t len);

/**
 * Copies level `level` into `buf`, which holds `len >= n_nodes` doubles.
 *
 * # Safety
 * `buf` must be writable for `len` doubles.
 */
enum FdStatus fd_trajectory_level(const struct FdTrajectory *traj,
                                  size_t level,
                                  double *buf,
                                  size_t len);

/**
 * Moving-plane scan over the last tenth of the stored levels with default
 * tolerances. `min_w` receives one value per plane; `lambda0` is set to
 * `+inf` when no plane undershoots; `monotone` to 0 or 1.
 *
 * # Safety
 * `lambdas` and `min_w` must hold `n` doubles; outputs must be writable.
 */
enum FdStatus fd_moving_plane_scan(const struct FdTrajectory *traj,
                                   const double *lambdas,
                                   size_t n,
                                   double *min_w,
                                   double *lambda0,
                                   int32_t *monotone);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACDUAL_H */
