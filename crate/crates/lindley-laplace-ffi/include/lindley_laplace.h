#ifndef LINDLEY_LAPLACE_H
#define LINDLEY_LAPLACE_H

/* Generated by cbindgen from lindley-laplace-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every FFI call.
 */
typedef enum LlStatus {
  /**
   * Success.
   */
  LL_STATUS_OK = 0,
  /**
   * A parameter violated a precondition (bad sigma, x outside [0, h), ...).
   */
  LL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * An evaluation point was outside the function's domain.
   */
  LL_STATUS_DOMAIN_ERROR = 2,
  /**
   * A numerical invariant failed (non-convergent tail, mass defect, ...).
   */
  LL_STATUS_NUMERIC_ERROR = 3,
  /**
   * A required pointer was null.
   */
  LL_STATUS_NULL_POINTER = 4,
  /**
   * Internal panic; the handle state is untouched.
   */
  LL_STATUS_PANIC = 5,
} LlStatus;

/**
 * Opaque handle: the law of the position `W_n` for one configuration.
 */
typedef struct LlDensity LlDensity;

/**
 * Opaque handle: tabulated first-exit-time probabilities `P(n|x)`,
 * `n = 1..=n_max`.
 */
typedef struct LlFetTable LlFetTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build the closed-form law of `W_n` started at `x`. On success writes a
 * heap handle to `out`; release it with `ll_density_free`.
 */
enum LlStatus ll_density_new(double mu, double sigma, double x, uint32_t n, struct LlDensity **out);

/**
 * Continuous-part density value at `u >= 0` (the atom is reported by
 * `ll_density_atom`).
 */
enum LlStatus ll_density_eval(const struct LlDensity *d, double u, double *out);

/**
 * Probability mass sitting exactly at zero.
 */
enum LlStatus ll_density_atom(const struct LlDensity *d, double *out);

/**
 * Distribution function `F_n(u)`; negative `u` yields 0.
 */
enum LlStatus ll_density_cdf(const struct LlDensity *d, double u, double *out);

/**
 * Moment of order 1 or 2.
 */
enum LlStatus ll_density_moment(const struct LlDensity *d, uint32_t order, double *out);

/**
 * Release a density handle; a null pointer is a no-op.
 */
void ll_density_free(struct LlDensity *d);

/**
 * Tabulate `P(n|x)` for `n = 1..=n_max` with boundary `h`. Release with
 * `ll_fet_table_free`.
 */
enum LlStatus ll_fet_table_new(double mu,
                               double sigma,
                               double x,
                               double h,
                               uint32_t n_max,
                               struct LlFetTable **out);

/**
 * Exit probability exactly at step `n` from start `x` (any `x` in `[0, h)`,
 * not just the tabulation start).
 */
enum LlStatus ll_fet_pmf(const struct LlFetTable *t, uint32_t n, double x, double *out);

/**
 * Partial sum `sum_{k<=n} P(k|x)`.
 */
enum LlStatus ll_fet_cdf(const struct LlFetTable *t, uint32_t n, double x, double *out);

/**
 * Release an exit-time table; a null pointer is a no-op.
 */
void ll_fet_table_free(struct LlFetTable *t);

/**
 * Mean exit time with a geometric tail bound at relative tolerance
 * `rel_tol`; `out_tail_bound` may be null.
 */
enum LlStatus ll_fet_mean(double mu,
                          double sigma,
                          double x,
                          double h,
                          double rel_tol,
                          double *out_mean,
                          double *out_tail_bound);

/**
 * Map a CUSUM testing problem (pre-change `Laplace(mu, sigma)`, tilt
 * `theta`) to the detector's increment law. Out-pointers other than the
 * first two may be null.
 */
enum LlStatus ll_cusum_llr_params(double mu,
                                  double sigma,
                                  double theta,
                                  double *out_location,
                                  double *out_scale,
                                  double *out_log_mgf,
                                  double *out_post_change_mean);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINDLEY_LAPLACE_H */
