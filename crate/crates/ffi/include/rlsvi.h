#ifndef RLSVI_H
#define RLSVI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum RlsviStatus {
  RLSVI_STATUS_OK = 0,
  RLSVI_STATUS_NULL_POINTER = 1,
  RLSVI_STATUS_INVALID_ARGUMENT = 2,
  RLSVI_STATUS_CONFIG = 3,
  RLSVI_STATUS_NUMERICAL = 4,
  RLSVI_STATUS_IO = 5,
  RLSVI_STATUS_PANIC = 6,
} RlsviStatus;

/**
 * Finite-horizon MDP.
 */
typedef struct RlsviMdp RlsviMdp;

/**
 * Optimal value functions of an MDP.
 */
typedef struct RlsviValues RlsviValues;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *rlsvi_last_error(void);

/**
 * Library version, static.
 */
const char *rlsvi_version(void);

/**
 * Deterministic chain of length `n` with horizon `n`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum RlsviStatus rlsvi_chain_new(size_t n, struct RlsviMdp **out);

/**
 * Random MDP with Dirichlet(1, ..., 1) transitions, reproducible from `seed`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum RlsviStatus rlsvi_dirichlet_mdp_new(size_t num_states,
                                         size_t num_actions,
                                         size_t horizon,
                                         uint64_t seed,
                                         struct RlsviMdp **out);

/**
 * Writes state count, action count and horizon. Any output may be null.
 *
 * # Safety
 * `mdp` must come from a constructor here and not be freed; non-null outputs must be writable.
 */
enum RlsviStatus rlsvi_mdp_dims(const struct RlsviMdp *mdp,
                                size_t *num_states,
                                size_t *num_actions,
                                size_t *horizon);

/**
 * # Safety
 * `mdp` must be null or come from a constructor here, freed at most once.
 */
void rlsvi_mdp_free(struct RlsviMdp *mdp);

/**
 * Exact backward induction.
 *
 * # Safety
 * `mdp` must be a live handle and `out` writable.
 */
enum RlsviStatus rlsvi_solve(const struct RlsviMdp *mdp, struct RlsviValues **out);

/**
 * `V*_period(state)`, with `period` up to and including the horizon.
 *
 * # Safety
 * `values` must be a live handle and `out` writable.
 */
enum RlsviStatus rlsvi_values_v(const struct RlsviValues *values,
                                size_t period,
                                size_t state,
                                double *out);

/**
 * `Q*_period(state, action)` for `period` below the horizon.
 *
 * # Safety
 * `values` must be a live handle and `out` writable.
 */
enum RlsviStatus rlsvi_values_q(const struct RlsviValues *values,
                                size_t period,
                                size_t state,
                                size_t action,
                                double *out);

/**
 * # Safety
 * `values` must be null or come from [`rlsvi_solve`], freed at most once.
 */
void rlsvi_values_free(struct RlsviValues *values);

/**
 * Gaussian posterior of Bayesian linear regression with prior `N(0, I/λ)`
 * and noise variance `σ²`. `design` is `rows × cols`, row-major. Writes the
 * mean to `mean_out` (`cols`) and the covariance, row-major, to `cov_out`
 * (`cols × cols`).
 *
 * # Safety
 * Each pointer must be valid for the stated number of `f64`s. `design` and
 * `targets` may be null when `rows` is 0.
 */
enum RlsviStatus rlsvi_ridge_posterior(const double *design,
                                       const double *targets,
                                       size_t rows,
                                       size_t cols,
                                       double sigma,
                                       double lambda,
                                       double *mean_out,
                                       double *cov_out);

/**
 * Expected regret lower bound for dithering exploration on a chain of
 * `num_states` states over `steps` time steps (a multiple of `horizon`).
 *
 * # Safety
 * `out` must be writable.
 */
enum RlsviStatus rlsvi_chain_regret_lower_bound(uint32_t num_states,
                                                uint64_t steps,
                                                uint64_t horizon,
                                                double *out);

/**
 * Runs `experiment` with settings from the JSON object `config_json` (may be
 * null for the defaults) and writes its CSV to `csv_path`, with the summary
 * and manifest beside it.
 *
 * # Safety
 * `experiment` and `csv_path` must be NUL-terminated strings; `config_json`
 * must be null or NUL-terminated.
 */
enum RlsviStatus rlsvi_run_experiment(const char *experiment,
                                      const char *config_json,
                                      const char *csv_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RLSVI_H */
