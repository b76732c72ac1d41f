#ifndef SPDALIGN_H
#define SPDALIGN_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpdalignStatus {
  SPDALIGN_STATUS_OK = 0,
  SPDALIGN_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument: bad shape or out-of-range parameter.
   */
  SPDALIGN_STATUS_CONTRACT = 2,
  /**
   * Malformed or inconsistent data.
   */
  SPDALIGN_STATUS_DATA = 3,
  /**
   * Input not SPD, ill-conditioned, or a failed decomposition.
   */
  SPDALIGN_STATUS_NUMERICAL = 4,
  SPDALIGN_STATUS_PANIC = 5,
} SpdalignStatus;

typedef enum SpdalignMethod {
  SPDALIGN_METHOD_NO_ADAPTATION = 0,
  SPDALIGN_METHOD_CORAL = 1,
  SPDALIGN_METHOD_SUBSPACE_ALIGNMENT = 2,
  SPDALIGN_METHOD_BASELINE_SOURCE = 3,
  SPDALIGN_METHOD_BASELINE_TARGET = 4,
  SPDALIGN_METHOD_GCA1 = 5,
  SPDALIGN_METHOD_GCA2 = 6,
  SPDALIGN_METHOD_GCA3 = 7,
  SPDALIGN_METHOD_CASCADED_GCA2 = 8,
  SPDALIGN_METHOD_CASCADED_GCA3 = 9,
} SpdalignMethod;

/**
 * Opaque fitted adaptation model.
 */
typedef struct SpdalignModel SpdalignModel;

/**
 * Opaque SPD matrix.
 */
typedef struct SpdalignSpd SpdalignSpd;

/**
 * Hyperparameters. Zero in `num_kept` or `subspace_dim`, or a
 * nonpositive `bandwidth`, selects the library default.
 */
typedef struct SpdalignParams {
  double t;
  double gamma;
  double mu;
  size_t k;
  double bandwidth;
  double sigma;
  double eps;
  size_t num_kept;
  size_t subspace_dim;
  bool kernel_term;
} SpdalignParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *spdalign_last_error(void);

struct SpdalignParams spdalign_params_default(void);

/**
 * Builds an SPD matrix from `dim * dim` row-major values.
 *
 * # Safety
 * `data` must point to `dim * dim` readable doubles; `out` must be writable.
 */
enum SpdalignStatus spdalign_spd_new(const double *data, size_t dim, struct SpdalignSpd **out);

/**
 * # Safety
 * `m` must come from this library and not have been freed already.
 */
void spdalign_spd_free(struct SpdalignSpd *m);

/**
 * Dimension of `m`, or 0 when `m` is null.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t spdalign_spd_dim(const struct SpdalignSpd *m);

/**
 * Copies the entries of `m`, row-major, into `out` (capacity `len`).
 *
 * # Safety
 * `m` must be a live handle; `out` must hold `len` writable doubles.
 */
enum SpdalignStatus spdalign_spd_copy(const struct SpdalignSpd *m, double *out, size_t len);

/**
 * Point at `t` on the geodesic from `x` to `y`.
 *
 * # Safety
 * `x` and `y` must be live handles; `out` must be writable.
 */
enum SpdalignStatus spdalign_sharp_mean(const struct SpdalignSpd *x,
                                        const struct SpdalignSpd *y,
                                        double t,
                                        struct SpdalignSpd **out);

/**
 * The SPD solution of `A a_s A = a_t`.
 *
 * # Safety
 * `a_s` and `a_t` must be live handles; `out` must be writable.
 */
enum SpdalignStatus spdalign_riccati_solve(const struct SpdalignSpd *a_s,
                                           const struct SpdalignSpd *a_t,
                                           struct SpdalignSpd **out);

/**
 * Squared affine-invariant distance between `x` and `y`.
 *
 * # Safety
 * `x` and `y` must be live handles of equal dimension; `out` must be writable.
 */
enum SpdalignStatus spdalign_distance_sq(const struct SpdalignSpd *x,
                                         const struct SpdalignSpd *y,
                                         double *out);

/**
 * Fits `method` on row-major source (`n × dim`) and target (`m × dim`)
 * features.
 *
 * # Safety
 * `params` must be readable, `source` and `target` must hold `n * dim` and
 * `m * dim` doubles, and `out` must be writable.
 */
enum SpdalignStatus spdalign_model_fit(enum SpdalignMethod method,
                                       const struct SpdalignParams *params,
                                       const double *source,
                                       size_t n,
                                       const double *target,
                                       size_t m,
                                       size_t dim,
                                       struct SpdalignModel **out);

/**
 * # Safety
 * `model` must come from this library and not have been freed already.
 */
void spdalign_model_free(struct SpdalignModel *model);

/**
 * Width of adapted rows, or 0 when `model` is null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t spdalign_model_output_dim(const struct SpdalignModel *model);

/**
 * The learned metric of a geometric-mean method. Fails with `Contract` for
 * the baselines, which learn a general linear map instead.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SpdalignStatus spdalign_model_metric(const struct SpdalignModel *model,
                                          struct SpdalignSpd **out);

/**
 * Maps `rows × dim` source features into `out`, which must hold
 * `rows * spdalign_model_output_dim(model)` values.
 *
 * # Safety
 * Pointers must be valid for the stated sizes.
 */
enum SpdalignStatus spdalign_model_adapt_source(const struct SpdalignModel *model,
                                                const double *features,
                                                size_t rows,
                                                size_t dim,
                                                double *out,
                                                size_t len);

/**
 * Maps target features the same way; see `spdalign_model_adapt_source`.
 *
 * # Safety
 * Pointers must be valid for the stated sizes.
 */
enum SpdalignStatus spdalign_model_adapt_target(const struct SpdalignModel *model,
                                                const double *features,
                                                size_t rows,
                                                size_t dim,
                                                double *out,
                                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPDALIGN_H */
