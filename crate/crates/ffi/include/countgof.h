#ifndef COUNTGOF_H
#define COUNTGOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Maximum number of parameters of any null family.
 */
#define COUNTGOF_MAX_PARAMS 3

typedef enum CountgofStatus {
  COUNTGOF_STATUS_OK = 0,
  COUNTGOF_STATUS_NULL_POINTER = 1,
  COUNTGOF_STATUS_INVALID_ARGUMENT = 2,
  COUNTGOF_STATUS_DEGENERATE = 3,
  COUNTGOF_STATUS_NON_CONVERGENCE = 4,
  COUNTGOF_STATUS_IO = 5,
  COUNTGOF_STATUS_PARSE = 6,
  COUNTGOF_STATUS_PANIC = 7,
} CountgofStatus;

typedef enum CountgofFamily {
  COUNTGOF_FAMILY_POISSON_INAR1 = 0,
  COUNTGOF_FAMILY_POISSON_INARCH1 = 1,
  COUNTGOF_FAMILY_POISSON_INAR2 = 2,
} CountgofFamily;

typedef enum CountgofRoute {
  COUNTGOF_ROUTE_AUTO = 0,
  COUNTGOF_ROUTE_CLOSED = 1,
  COUNTGOF_ROUTE_QUADRATURE = 2,
} CountgofRoute;

/**
 * Opaque model specification.
 */
typedef struct CountgofModel CountgofModel;

/**
 * Opaque count series.
 */
typedef struct CountgofSeries CountgofSeries;

/**
 * Null-model parameters in the order p, theta (INAR(1)); theta1, theta2
 * (INARCH(1)); p1, p2, theta (INAR(2)). Unused trailing entries are zero.
 */
typedef struct CountgofParams {
  double values[COUNTGOF_MAX_PARAMS];
  size_t len;
} CountgofParams;

typedef struct CountgofTestResult {
  double statistic;
  double p_value;
  struct CountgofParams params;
  /**
   * Nonzero when the fit on the data was clamped onto the admissible region.
   */
  int32_t fit_clamped;
  size_t clamped_replicates;
  size_t redraws;
} CountgofTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or NULL. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *countgof_last_error_message(void);

/**
 * Copies `len` counts into a new series.
 *
 * # Safety
 * `values` must point to `len` readable `uint32_t`; `series_out` must be writable.
 */
enum CountgofStatus countgof_series_new(const uint32_t *values,
                                        size_t len,
                                        struct CountgofSeries **series_out);

/**
 * Reads a single-column CSV of counts.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `series_out` must be writable.
 */
enum CountgofStatus countgof_series_read_csv(const char *path, struct CountgofSeries **series_out);

/**
 * Number of observations, 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t countgof_series_len(const struct CountgofSeries *series);

/**
 * Copies up to `capacity` counts into `buffer`.
 *
 * # Safety
 * `series` must be a live handle and `buffer` writable for `capacity` values.
 */
enum CountgofStatus countgof_series_copy(const struct CountgofSeries *series,
                                         uint32_t *buffer,
                                         size_t capacity);

/**
 * # Safety
 * `series` must be NULL or a handle not yet freed.
 */
void countgof_series_free(struct CountgofSeries *series);

/**
 * Parses a TOML model specification.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `model_out` must be writable.
 */
enum CountgofStatus countgof_model_from_toml(const char *toml, struct CountgofModel **model_out);

/**
 * Poisson null model with the given parameters.
 *
 * # Safety
 * `params` must be readable and `model_out` writable.
 */
enum CountgofStatus countgof_model_null(enum CountgofFamily family_id,
                                        const struct CountgofParams *params,
                                        struct CountgofModel **model_out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void countgof_model_free(struct CountgofModel *model);

/**
 * Simulates `t` observations after `burn_in` discarded steps.
 *
 * # Safety
 * `model` must be a live handle and `series_out` writable.
 */
enum CountgofStatus countgof_simulate(const struct CountgofModel *model,
                                      size_t t,
                                      size_t burn_in,
                                      uint64_t seed,
                                      struct CountgofSeries **series_out);

/**
 * Conditional least-squares fit; writes the admissible estimates.
 *
 * # Safety
 * `series` must be a live handle and `params_out` writable.
 */
enum CountgofStatus countgof_fit(const struct CountgofSeries *series,
                                 enum CountgofFamily family_id,
                                 struct CountgofParams *params_out);

/**
 * Test statistic for `series` at the given null parameters.
 *
 * # Safety
 * `series` and `params` must be readable and `value_out` writable.
 */
enum CountgofStatus countgof_statistic(const struct CountgofSeries *series,
                                       enum CountgofFamily family_id,
                                       const struct CountgofParams *params,
                                       double a,
                                       enum CountgofRoute route_id,
                                       double *value_out);

/**
 * Bootstrap goodness-of-fit test with `replicates` bootstrap samples.
 *
 * # Safety
 * `series` must be a live handle and `result_out` writable.
 */
enum CountgofStatus countgof_gof_test(const struct CountgofSeries *series,
                                      enum CountgofFamily family_id,
                                      double a,
                                      size_t replicates,
                                      uint64_t seed,
                                      enum CountgofRoute route_id,
                                      struct CountgofTestResult *result_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUNTGOF_H */
