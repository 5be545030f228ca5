#ifndef GWLOC_H
#define GWLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GwlocStatus {
  GWLOC_STATUS_OK = 0,
  GWLOC_STATUS_NULL_POINTER = 1,
  GWLOC_STATUS_INVALID_INPUT = 2,
  GWLOC_STATUS_IO = 3,
  GWLOC_STATUS_FORMAT = 4,
  GWLOC_STATUS_SHAPE = 5,
  GWLOC_STATUS_INDEX = 6,
  GWLOC_STATUS_DOMAIN = 7,
  GWLOC_STATUS_GEOMETRY = 8,
  GWLOC_STATUS_DEGENERATE_SIGNAL = 9,
  GWLOC_STATUS_TRAINING = 10,
  GWLOC_STATUS_INTERNAL = 11,
  GWLOC_STATUS_PANIC = 12,
} GwlocStatus;

/**
 * Dispersion curve family for [`gwloc_wavenumber`].
 */
typedef enum GwlocMode {
  /**
   * `k = w / c`.
   */
  GWLOC_MODE_LINEAR = 0,
  /**
   * `k = sqrt(w / d)`.
   */
  GWLOC_MODE_SQUARE_ROOT = 1,
} GwlocMode;

/**
 * Opaque dataset handle.
 */
typedef struct GwlocDataset GwlocDataset;

/**
 * Opaque trained-model handle.
 */
typedef struct GwlocModel GwlocModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length excluding the terminator; `buf` may be null to query it.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t gwloc_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gwloc_version(void);

/**
 * Opens a GWDS0001 dataset file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum GwlocStatus gwloc_dataset_open(const char *path, struct GwlocDataset **out);

/**
 * Releases a dataset handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle from [`gwloc_dataset_open`] not yet freed.
 */
void gwloc_dataset_free(struct GwlocDataset *ds);

/**
 * Number of samples, frequency bins and sensor pairs. Each record holds
 * `bins * pairs` values with index `q * pairs + pair`.
 *
 * # Safety
 * `ds` must be a live handle; output pointers must be valid for writes.
 */
enum GwlocStatus gwloc_dataset_shape(const struct GwlocDataset *ds,
                                     size_t *samples,
                                     size_t *bins,
                                     size_t *pairs);

/**
 * Copies sample `index` (as stored, possibly noisy) into `data` and its
 * damage position into `label_x`, `label_y`.
 *
 * # Safety
 * `ds` must be a live handle; `data` must be valid for `len` writes.
 */
enum GwlocStatus gwloc_dataset_sample(const struct GwlocDataset *ds,
                                      size_t index,
                                      double *data,
                                      size_t len,
                                      double *label_x,
                                      double *label_y);

/**
 * Physical-model grid search on stored sample `index` over an `nx` by `ny`
 * grid; writes the best cell center.
 *
 * # Safety
 * `ds` must be a live handle; output pointers must be valid for writes.
 */
enum GwlocStatus gwloc_localize(const struct GwlocDataset *ds,
                                size_t index,
                                size_t nx,
                                size_t ny,
                                double *x,
                                double *y);

/**
 * Opens a GWNN0001 checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum GwlocStatus gwloc_model_open(const char *path, struct GwlocModel **out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from [`gwloc_model_open`] not yet freed.
 */
void gwloc_model_free(struct GwlocModel *model);

/**
 * Feature count the model expects.
 *
 * # Safety
 * `model` must be a live handle; `dim` must be valid for writes.
 */
enum GwlocStatus gwloc_model_input_dim(const struct GwlocModel *model, size_t *dim);

/**
 * Predicts a damage position from one raw (unstandardized) record.
 *
 * # Safety
 * `model` must be a live handle; `features` valid for `len` reads.
 */
enum GwlocStatus gwloc_model_predict(const struct GwlocModel *model,
                                     const double *features,
                                     size_t len,
                                     double *x,
                                     double *y);

/**
 * Average localization error: mean and population standard deviation of
 * the distances between `n` truth and prediction points, each given as
 * interleaved `x, y` arrays of length `2 n`.
 *
 * # Safety
 * `truth` and `pred` must be valid for `2 n` reads.
 */
enum GwlocStatus gwloc_ale(const double *truth,
                           const double *pred,
                           size_t n,
                           double *mean,
                           double *std);

/**
 * Wavenumber of one mode (a [`GwlocMode`] value) at angular frequency
 * `omega` under scale `alpha`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GwlocStatus gwloc_wavenumber(uint32_t mode,
                                  double constant,
                                  double alpha,
                                  double omega,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GWLOC_H */
