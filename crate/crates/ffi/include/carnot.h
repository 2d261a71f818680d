#ifndef CARNOT_H
#define CARNOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CARNOT_STATUS_OK = 0,
  CARNOT_STATUS_NULL_POINTER = 1,
  CARNOT_STATUS_INVALID_UTF8 = 2,
  CARNOT_STATUS_INVALID_CONFIG = 3,
  CARNOT_STATUS_DIMENSION_MISMATCH = 4,
  CARNOT_STATUS_NON_POSITIVE_SCALE = 5,
  CARNOT_STATUS_SINGULAR_EVALUATION = 6,
  CARNOT_STATUS_PRECONDITION = 7,
  CARNOT_STATUS_DEGENERATE_CONDENSER = 8,
  CARNOT_STATUS_NON_CONVERGENCE = 9,
  CARNOT_STATUS_IO = 10,
  /**
   * The call completed but a check it ran did not pass.
   */
  CARNOT_STATUS_CHECK_FAILED = 11,
  CARNOT_STATUS_PANIC = 99,
} CarnotStatus;

/**
 * Opaque Carnot group.
 */
typedef struct CarnotAlgebra CarnotAlgebra;

/**
 * Opaque solved potential.
 */
typedef struct CarnotField CarnotField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string; do not free.
 */
const char *carnot_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread; do not free.
 */
const char *carnot_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void carnot_string_free(char *s);

/**
 * Builds an algebra from a preset name (`heisenberg-<n>`, `engel`,
 * `abelian-<n>`).
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` writable.
 */
CarnotStatus carnot_algebra_new_preset(const char *name, CarnotAlgebra **out);

/**
 * Builds and fully validates an algebra from its JSON spec.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
CarnotStatus carnot_algebra_new_json(const char *json, CarnotAlgebra **out);

/**
 * # Safety
 * `alg` must come from `carnot_algebra_new_*` or be null.
 */
void carnot_algebra_free(CarnotAlgebra *alg);

/**
 * Topological dimension, or 0 for a null handle.
 *
 * # Safety
 * `alg` must be a live handle or null.
 */
size_t carnot_algebra_dim(const CarnotAlgebra *alg);

/**
 * Homogeneous dimension, or 0 for a null handle.
 *
 * # Safety
 * `alg` must be a live handle or null.
 */
size_t carnot_algebra_homogeneous_dimension(const CarnotAlgebra *alg);

/**
 * Validation report for a JSON algebra spec, as JSON in `*out`. Returns
 * `CheckFailed` (with the report still written) when a check fails.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
CarnotStatus carnot_algebra_validate_json(const char *json, char **out);

/**
 * `out = p · q` in exponential coordinates. All buffers hold `dim` values.
 *
 * # Safety
 * `p`, `q` must point to `dim` readable and `out` to `len` writable doubles.
 */
CarnotStatus carnot_group_mul(const CarnotAlgebra *alg,
                              const double *p,
                              const double *q,
                              double *out,
                              size_t len);

/**
 * `out = δ_λ(p)`.
 *
 * # Safety
 * `p` must point to `dim` readable and `out` to `len` writable doubles.
 */
CarnotStatus carnot_dilate(const CarnotAlgebra *alg,
                           double lambda,
                           const double *p,
                           double *out,
                           size_t len);

/**
 * Homogeneous gauge of `p` (length `len`, must equal `dim`).
 *
 * # Safety
 * `p` must point to `len` readable doubles and `out` be writable.
 */
CarnotStatus carnot_gauge(const CarnotAlgebra *alg, const double *p, size_t len, double *out);

/**
 * `|p|^{2-Q}`.
 *
 * # Safety
 * `p` must point to `len` readable doubles and `out` be writable.
 */
CarnotStatus carnot_fundamental_solution(const CarnotAlgebra *alg,
                                         const double *p,
                                         size_t len,
                                         double *out);

/**
 * Solves the condenser problem described by an experiment config (JSON).
 *
 * # Safety
 * `config_json` must be a nul-terminated string and `out` writable.
 */
CarnotStatus carnot_solve(const char *config_json, CarnotField **out);

/**
 * # Safety
 * `field` must come from `carnot_solve` or be null.
 */
void carnot_field_free(CarnotField *field);

/**
 * Number of grid nodes, or 0 for a null handle.
 *
 * # Safety
 * `field` must be a live handle or null.
 */
size_t carnot_field_len(const CarnotField *field);

/**
 * Copies node values (row-major, axis 0 slowest) into `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
CarnotStatus carnot_field_values(const CarnotField *field, double *out, size_t len);

/**
 * Multilinear interpolation of the potential at `p`.
 *
 * # Safety
 * `p` must point to `len` readable doubles and `out` be writable.
 */
CarnotStatus carnot_field_interpolate(const CarnotField *field,
                                      const double *p,
                                      size_t len,
                                      double *out);

/**
 * Grid and solver statistics as JSON in `*out`.
 *
 * # Safety
 * `out` must be writable.
 */
CarnotStatus carnot_field_stats_json(const CarnotField *field, char **out);

/**
 * Runs the full starshapedness pipeline and writes the report as JSON to
 * `*out`. Returns `CheckFailed`, with the report written, when it does not pass.
 *
 * # Safety
 * `config_json` must be a nul-terminated string and `out` writable.
 */
CarnotStatus carnot_theorem_report_json(const char *config_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARNOT_H */
