#ifndef STAGESURV_H
#define STAGESURV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ss_status {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_IO = 3,
  SS_STATUS_SCHEMA = 4,
  SS_STATUS_REJECTED_ROWS = 5,
  SS_STATUS_SEPARATION = 6,
  SS_STATUS_COLLINEAR = 7,
  SS_STATUS_NO_CONVERGENCE = 8,
  SS_STATUS_DEGENERATE = 9,
  SS_STATUS_OVERFLOW = 10,
  SS_STATUS_BUFFER_TOO_SMALL = 11,
  SS_STATUS_PANIC = 12,
} ss_status;

typedef enum ss_ties {
  SS_TIES_BRESLOW = 0,
  SS_TIES_EFRON = 1,
} ss_ties;

typedef enum ss_g_transform {
  SS_G_TRANSFORM_IDENTITY = 0,
  SS_G_TRANSFORM_LOG = 1,
  SS_G_TRANSFORM_KM = 2,
} ss_g_transform;

/**
 * Covariate matrix with outcome.
 */
typedef struct ss_design ss_design;

/**
 * Converged Cox fit.
 */
typedef struct ss_fit ss_fit;

/**
 * Validated panel records.
 */
typedef struct ss_panel ss_panel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *ss_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, freed once.
 */
void ss_string_free(char *s);

/**
 * `(exp(beta) - 1) * 100`.
 */
double ss_percent_hazard_change(double beta);

/**
 * Loads and validates a panel file. Files with rejected rows fail with
 * [`SsStatus::RejectedRows`] and a message listing them.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum ss_status ss_panel_load(const char *path, struct ss_panel **out);

/**
 * Number of records in `panel` (0 for null).
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t ss_panel_len(const struct ss_panel *panel);

/**
 * # Safety
 * `panel` must be null or a handle not yet freed.
 */
void ss_panel_free(struct ss_panel *panel);

/**
 * Generates a synthetic panel. `scenario_json` may be null for the default
 * scenario; `truth_json` (may be null) receives the ground-truth document.
 *
 * # Safety
 * Pointers must be null or valid as described.
 */
enum ss_status ss_simulate(const char *scenario_json, struct ss_panel **out, char **truth_json);

/**
 * Builds the design of `panel` from a JSON recipe, or the default
 * nine-column recipe when `recipe_json` is null.
 *
 * # Safety
 * `panel` must be a live handle, `recipe_json` null or nul-terminated,
 * `out` writable.
 */
enum ss_status ss_design_build(const struct ss_panel *panel,
                               const char *recipe_json,
                               struct ss_design **out);

/**
 * Design from raw arrays: `x` is `n_rows * n_cols` row-major, `events`
 * holds 0/1. Columns are named `x0`, `x1`, ...
 *
 * # Safety
 * Arrays must hold the stated number of elements; `out` writable.
 */
enum ss_status ss_design_from_arrays(size_t n_rows,
                                     size_t n_cols,
                                     const double *x,
                                     const double *durations,
                                     const uint8_t *events,
                                     struct ss_design **out);

/**
 * # Safety
 * `design` must be null or a live handle.
 */
size_t ss_design_num_rows(const struct ss_design *design);

/**
 * # Safety
 * `design` must be null or a live handle.
 */
size_t ss_design_num_cols(const struct ss_design *design);

/**
 * # Safety
 * `design` must be null or a handle not yet freed.
 */
void ss_design_free(struct ss_design *design);

/**
 * Log partial likelihood at `beta` (`n_beta` must equal the column count).
 *
 * # Safety
 * `design` live, `beta` holds `n_beta` values, `out` writable.
 */
enum ss_status ss_log_partial_likelihood(const struct ss_design *design,
                                         const double *beta,
                                         size_t n_beta,
                                         enum ss_ties ties,
                                         double *out);

/**
 * Fits a Cox model with default Newton-Raphson settings.
 *
 * # Safety
 * `design` live, `out` writable.
 */
enum ss_status ss_fit_cox(const struct ss_design *design, enum ss_ties ties, struct ss_fit **out);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t ss_fit_num_covariates(const struct ss_fit *fit);

/**
 * Copies coefficients and standard errors into caller buffers of length
 * `len` (either buffer may be null). Fails with
 * [`SsStatus::BufferTooSmall`] when `len` is less than the covariate count.
 *
 * # Safety
 * `fit` live; non-null buffers hold `len` doubles.
 */
enum ss_status ss_fit_coefficients(const struct ss_fit *fit,
                                   double *beta_out,
                                   double *se_out,
                                   size_t len);

/**
 * Null-model and fitted log partial likelihoods (either pointer may be
 * null).
 *
 * # Safety
 * `fit` live; non-null outputs writable.
 */
enum ss_status ss_fit_loglik(const struct ss_fit *fit, double *null_out, double *fitted_out);

/**
 * Full fit report as a JSON document.
 *
 * # Safety
 * `fit` live, `out` writable; free the result with [`ss_string_free`].
 */
enum ss_status ss_fit_to_json(const struct ss_fit *fit, char **out);

/**
 * Grambsch-Therneau proportionality test as a JSON document, flags at
 * `alpha`.
 *
 * # Safety
 * `design` and `fit` live and matching; `out` writable.
 */
enum ss_status ss_ph_test_json(const struct ss_design *design,
                               const struct ss_fit *fit,
                               enum ss_g_transform g,
                               double alpha,
                               char **out);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void ss_fit_free(struct ss_fit *fit);

/**
 * Kaplan-Meier curve of `n` observations. Writes the number of distinct
 * event times to `out_len`; when `capacity` is large enough the event
 * times and survival values are copied out, otherwise the call fails with
 * [`SsStatus::BufferTooSmall`] (call again with a larger buffer).
 *
 * # Safety
 * Inputs hold `n` values; non-null outputs hold `capacity` doubles.
 */
enum ss_status ss_kaplan_meier(size_t n,
                               const double *durations,
                               const uint8_t *events,
                               double *times_out,
                               double *survival_out,
                               size_t capacity,
                               size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAGESURV_H */
