#ifndef RCE_USTAT_H
#define RCE_USTAT_H

/* Generated by cbindgen from rce-ustat-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum RceStatus {
  RCE_STATUS_OK = 0,
  RCE_STATUS_NULL_POINTER = 1,
  RCE_STATUS_INVALID_ARGUMENT = 2,
  RCE_STATUS_NUMERIC = 3,
  RCE_STATUS_IO = 4,
  RCE_STATUS_UNSUPPORTED = 5,
  RCE_STATUS_INTERNAL = 6,
} RceStatus;

/**
 * Degree-function selector for model constructors.
 */
typedef enum RceDegree {
  RCE_DEGREE_CONSTANT = 0,
  RCE_DEGREE_POWER = 1,
} RceDegree;

/**
 * Evaluation route for [`rce_ustat_eval`].
 */
typedef enum RcePath {
  RCE_PATH_FAST = 0,
  RCE_PATH_EXACT = 1,
  RCE_PATH_ORDERED = 2,
} RcePath;

/**
 * Opaque model handle.
 */
typedef struct RceModel RceModel;

/**
 * Optional model parameters for [`rce_test_statistic`]. Set `has_lambda`
 * to 0 when lambda is not supplied; degree kinds apply only when their
 * `has_*` flag is nonzero.
 */
typedef struct RceTestParams {
  int has_lambda;
  double lambda;
  int has_f;
  enum RceDegree f_kind;
  double f_exponent;
  int has_g;
  enum RceDegree g_kind;
  double g_exponent;
} RceTestParams;

/**
 * Result of a scaled test statistic.
 */
typedef struct RceTestResult {
  double value;
  double variance_used;
  double two_sided_p;
} RceTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message in this thread; owned by the library, valid
 * until the next failing call on the same thread.
 */
const char *rce_last_error_message(void);

/**
 * Library version string (static storage).
 */
const char *rce_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by an `rce_*` call that
 * documents string ownership, and must not be used afterwards.
 */
void rce_string_free(char *s);

/**
 * Creates the standard-normal i.i.d. entries model. Never fails.
 */
struct RceModel *rce_model_gaussian_iid(void);

/**
 * Creates a Poisson-BEDD model; `out` receives the handle.
 *
 * # Safety
 * `out` must be a writable pointer slot.
 */
enum RceStatus rce_model_poisson_bedd(double lambda,
                                      enum RceDegree f_kind,
                                      double f_exponent,
                                      enum RceDegree g_kind,
                                      double g_exponent,
                                      struct RceModel **out);

/**
 * Creates an overdispersed Poisson-BEDD model; `out` receives the handle.
 *
 * # Safety
 * `out` must be a writable pointer slot.
 */
enum RceStatus rce_model_overdispersed_poisson_bedd(double lambda,
                                                    enum RceDegree f_kind,
                                                    double f_exponent,
                                                    enum RceDegree g_kind,
                                                    double g_exponent,
                                                    double alpha,
                                                    struct RceModel **out);

/**
 * Frees a model handle.
 *
 * # Safety
 * `model` must come from an `rce_model_*` constructor and must not be used
 * after this call.
 */
void rce_model_free(struct RceModel *model);

/**
 * Samples an `m x n` matrix into the caller's row-major buffer of length
 * `m * n`. Identical `(model, m, n, seed)` always produce identical bytes.
 *
 * # Safety
 * `model` must be a live handle; `out_y` must point to at least `m * n`
 * writable doubles.
 */
enum RceStatus rce_simulate(const struct RceModel *model,
                            uintptr_t m,
                            uintptr_t n,
                            uint64_t seed,
                            double *out_y);

/**
 * Evaluates the U-statistic of a built-in kernel (`"h1"`..`"h6"`) on a
 * row-major `m x n` matrix.
 *
 * # Safety
 * `kernel` must be a NUL-terminated string; `y` must point to `m * n`
 * readable doubles; `out_value` must be writable.
 */
enum RceStatus rce_ustat_eval(const char *kernel,
                              const double *y,
                              uintptr_t m,
                              uintptr_t n,
                              enum RcePath path,
                              double *out_value);

/**
 * Computes `ZA`, `ZB`, `ZBprime` or `ZC` on a row-major matrix. `params`
 * may be null when the statistic needs no model parameters.
 *
 * # Safety
 * Pointer arguments follow the same contracts as [`rce_ustat_eval`];
 * `params`, when non-null, must point to a valid [`RceTestParams`].
 */
enum RceStatus rce_test_statistic(const char *stat,
                                  const double *y,
                                  uintptr_t m,
                                  uintptr_t n,
                                  const struct RceTestParams *params,
                                  struct RceTestResult *out);

/**
 * Serializes the graph-class catalogs up to `(max_rows, max_cols)` as a
 * JSON array; the string is library-owned, release with [`rce_string_free`].
 *
 * # Safety
 * `out_json` must be a writable pointer slot.
 */
enum RceStatus rce_catalog_json(uintptr_t max_rows, uintptr_t max_cols, char **out_json);

/**
 * Runs principal-support detection and serializes the report as JSON; the
 * string is library-owned, release with [`rce_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `kernel` a NUL-terminated string;
 * `out_json` a writable pointer slot.
 */
enum RceStatus rce_support_json(const struct RceModel *model,
                                const char *kernel,
                                double significance,
                                uintptr_t pilot,
                                uint64_t seed,
                                char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCE_USTAT_H */
