#ifndef PSEUDOSPEC_H
#define PSEUDOSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsRegion {
  PS_REGION_D_PLUS = 0,
  PS_REGION_D_MINUS = 1,
  PS_REGION_U = 2,
  PS_REGION_W = 3,
  PS_REGION_SPECTRUM = 4,
} PsRegion;

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_SPECTRUM = 1,
  PS_STATUS_DOMAIN = 2,
  PS_STATUS_CONFIG = 3,
  PS_STATUS_SINGULAR = 4,
  PS_STATUS_ZERO_COUPLING = 5,
  PS_STATUS_NO_CONVERGENCE = 6,
  PS_STATUS_EIGENVALUE_LOST = 7,
  PS_STATUS_IO = 8,
  PS_STATUS_NULL_POINTER = 9,
  PS_STATUS_OUT_OF_RANGE = 10,
  PS_STATUS_PANIC = 11,
} PsStatus;

/**
 * Opaque pseudospectrum field.
 */
typedef struct PsField PsField;

/**
 * Opaque list of step-model eigenvalues.
 */
typedef struct PsStepModel PsStepModel;

typedef struct PsComplex {
  double re;
  double im;
} PsComplex;

/**
 * One point of a pseudospectrum field. `has_oracle` is 0 when the FD
 * oracle was not requested; `status` is 0 for a clean point.
 */
typedef struct PsFieldPoint {
  struct PsComplex z;
  enum PsRegion region;
  double lower;
  double upper;
  double oracle;
  int32_t has_oracle;
  int32_t status;
} PsFieldPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ps_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * # Safety
 * Output pointers must be valid for writes.
 */
enum PsStatus ps_wave_numbers(struct PsComplex z,
                              struct PsComplex *k_plus,
                              struct PsComplex *k_minus);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PsStatus ps_resolvent_kernel(struct PsComplex z, double x, double y, struct PsComplex *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PsStatus ps_dirichlet_kernel(struct PsComplex z, double x, double y, struct PsComplex *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PsStatus ps_classify_region(struct PsComplex z, enum PsRegion *out);

/**
 * Analytic lower and upper bounds on the resolvent norm.
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum PsStatus ps_bounds(struct PsComplex z, double *lower, double *upper);

/**
 * `λ(α)` and whether it is an eigenvalue (1) or not (0).
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum PsStatus ps_delta_eigenvalue(struct PsComplex alpha,
                                  struct PsComplex *lambda,
                                  int32_t *exists);

/**
 * Compute a field on an `n_re × n_im` grid. Pass `oracle_n = 0` to skip
 * the FD oracle. On success `*out` owns a handle for `ps_field_free`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PsStatus ps_field_compute(double re_min,
                               double re_max,
                               size_t n_re,
                               double im_min,
                               double im_max,
                               size_t n_im,
                               size_t oracle_n,
                               double oracle_half_length,
                               uint64_t seed,
                               struct PsField **out);

/**
 * Number of points in the field (0 for a null handle).
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t ps_field_len(const struct PsField *field);

/**
 * # Safety
 * `field` must be a live handle and `out` valid for writes.
 */
enum PsStatus ps_field_point(const struct PsField *field, size_t index, struct PsFieldPoint *out);

/**
 * Write the field as CSV (`format = 0`) or JSON (`format = 1`).
 *
 * # Safety
 * `field` must be a live handle and `path` a NUL-terminated string.
 */
enum PsStatus ps_field_write(const struct PsField *field, const char *path, int32_t format);

/**
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void ps_field_free(struct PsField *field);

/**
 * Real eigenvalues of the step model in `(-b, lambda_max]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PsStatus ps_step_find(double a, double b, double lambda_max, struct PsStepModel **out);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ps_step_count(const struct PsStepModel *model);

/**
 * # Safety
 * `model` must be a live handle and output pointers valid for writes.
 */
enum PsStatus ps_step_get(const struct PsStepModel *model,
                          size_t index,
                          double *lambda,
                          double *residual);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ps_step_free(struct PsStepModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSEUDOSPEC_H */
