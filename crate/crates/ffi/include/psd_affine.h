#ifndef PSD_AFFINE_H
#define PSD_AFFINE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsdStatus {
  PSD_STATUS_OK = 0,
  PSD_STATUS_NULL_POINTER = 1,
  /**
   * Malformed JSON, bad UTF-8 or a shape error in the input.
   */
  PSD_STATUS_INVALID_INPUT = 2,
  PSD_STATUS_INVALID_PARAMS = 3,
  PSD_STATUS_DIMENSION_MISMATCH = 4,
  PSD_STATUS_NOT_SYMMETRIC = 5,
  PSD_STATUS_NOT_PSD = 6,
  PSD_STATUS_DOMAIN = 7,
  PSD_STATUS_NON_CONSERVATIVE = 8,
  PSD_STATUS_BLOW_UP = 9,
  PSD_STATUS_STEP_UNDERFLOW = 10,
  PSD_STATUS_SINGULAR = 11,
  PSD_STATUS_BRANCH_AMBIGUITY = 12,
  PSD_STATUS_NO_CONVERGENCE = 13,
  PSD_STATUS_CROSS_CHECK = 14,
  /**
   * Non-finite values or a failed eigendecomposition.
   */
  PSD_STATUS_NUMERICAL = 15,
  PSD_STATUS_PANIC = 16,
} PsdStatus;

/**
 * Opaque parameter set.
 */
typedef struct PsdParams PsdParams;

typedef struct PsdComplex {
  double re;
  double im;
} PsdComplex;

typedef struct PsdMcEstimate {
  struct PsdComplex mean;
  double stderr;
  uint64_t n_paths;
  /**
   * Step actually used.
   */
  double dt;
} PsdMcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a parameter file (NUL-terminated JSON) into a new handle stored in
 * `*out`. Free it with [`psd_params_free`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` writable.
 */
enum PsdStatus psd_params_from_json(const char *json, struct PsdParams **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `params` must come from [`psd_params_from_json`] and not be used again.
 */
void psd_params_free(struct PsdParams *params);

/**
 * Matrix dimension `d`, or 0 for a null handle.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
size_t psd_params_dim(const struct PsdParams *params);

/**
 * Admissibility check. `*passed` is set to 1 when every check passes;
 * otherwise the names of the failed checks become the last error message.
 *
 * # Safety
 * `params` must be a live handle and `passed` writable.
 */
enum PsdStatus psd_validate(const struct PsdParams *params,
                            size_t random_pairs,
                            double tol,
                            int *passed);

/**
 * `E[exp(-<u, X_t>) | X_0 = x]` from the Riccati equations. `rtol` and
 * `atol` of 0 select the defaults.
 *
 * # Safety
 * Matrix pointers must reference `d * d` doubles (`u_im` may be null) and
 * `out` must be writable.
 */
enum PsdStatus psd_transform(const struct PsdParams *params,
                             const double *u_re,
                             const double *u_im,
                             const double *x,
                             double t,
                             double rtol,
                             double atol,
                             struct PsdComplex *out);

/**
 * Characteristic function `E[exp(-i <w, X_t>)]`.
 *
 * # Safety
 * As [`psd_transform`].
 */
enum PsdStatus psd_char_function(const struct PsdParams *params,
                                 const double *w,
                                 const double *x,
                                 double t,
                                 double rtol,
                                 double atol,
                                 struct PsdComplex *out);

/**
 * Closed-form transform for basic affine jump-diffusion parameters.
 *
 * # Safety
 * As [`psd_transform`].
 */
enum PsdStatus psd_mbajd_transform(const struct PsdParams *params,
                                   const double *u_re,
                                   const double *u_im,
                                   const double *x,
                                   double t,
                                   struct PsdComplex *out);

/**
 * Monte Carlo estimate of the transform. Threads follow `PSDAFFINE_THREADS`.
 *
 * # Safety
 * As [`psd_transform`].
 */
enum PsdStatus psd_mc_transform(const struct PsdParams *params,
                                const double *u_re,
                                const double *u_im,
                                const double *x,
                                double t,
                                uint64_t n_paths,
                                double dt,
                                uint64_t seed,
                                int antithetic,
                                struct PsdMcEstimate *out);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length. Pass a
 * null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or hold `len` writable bytes.
 */
size_t psd_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *psd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSD_AFFINE_H */
