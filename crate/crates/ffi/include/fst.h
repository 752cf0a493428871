#ifndef FST_H
#define FST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Nonzero values match the `fst` CLI exit codes.
 */
typedef enum FstStatus {
  FST_STATUS_OK = 0,
  FST_STATUS_NULL_POINTER = 1,
  FST_STATUS_INVALID_ARGUMENT = 2,
  FST_STATUS_MISSING_INPUT = 3,
  FST_STATUS_IO = 4,
  FST_STATUS_FORMAT = 5,
  FST_STATUS_BAD_MAGIC = 6,
  FST_STATUS_UNSUPPORTED_VERSION = 7,
  FST_STATUS_CORRUPT_UNCERTAINTY = 8,
  FST_STATUS_DIMENSION_MISMATCH = 9,
  FST_STATUS_TOO_FEW_SAMPLES = 10,
  FST_STATUS_ILL_CONDITIONED = 11,
  FST_STATUS_NON_FINITE = 12,
  FST_STATUS_PANIC = 13,
} FstStatus;

/**
 * Compiled 3D LUT handle.
 */
typedef struct FstLut FstLut;

/**
 * Filter parameters handle.
 */
typedef struct FstParams FstParams;

/**
 * Image comparison summary.
 */
typedef struct FstMetrics {
  /**
   * `+inf` for identical images.
   */
  double psnr_db;
  double mean_de2000;
  double max_de2000;
} FstMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *fst_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fst_version(void);

/**
 * Identity filter, with or without channel-correlation terms.
 *
 * # Safety
 * `out` must be a valid pointer to receive the handle.
 */
enum FstStatus fst_params_identity(bool cc, struct FstParams **out);

/**
 * Parses parameters from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum FstStatus fst_params_from_json(const char *json, struct FstParams **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum FstStatus fst_params_load(const char *path, struct FstParams **out);

/**
 * # Safety
 * `params` must be a live handle; `path` a NUL-terminated string.
 */
enum FstStatus fst_params_save(const struct FstParams *params, const char *path);

/**
 * Serializes to JSON. Release the string with [`fst_string_free`].
 *
 * # Safety
 * `params` must be a live handle; `out` a valid pointer.
 */
enum FstStatus fst_params_to_json(const struct FstParams *params, char **out);

/**
 * Whether the parameters include channel-correlation terms.
 *
 * # Safety
 * `params` must be a live handle or null (returns false).
 */
bool fst_params_has_cc(const struct FstParams *params);

/**
 * Writes the 10 (or 13 with cc) coefficients of output `channel` (0..3)
 * into `out`, which must hold `capacity` doubles. `count` receives the
 * number of coefficients.
 *
 * # Safety
 * Pointers must be valid; `out` must hold `capacity` doubles.
 */
enum FstStatus fst_params_coefficients(const struct FstParams *params,
                                       size_t channel,
                                       double *out,
                                       size_t capacity,
                                       size_t *count);

/**
 * # Safety
 * `params` must come from this library and not be used afterwards; null is ignored.
 */
void fst_params_free(struct FstParams *params);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; null is ignored.
 */
void fst_string_free(char *s);

/**
 * Evaluates the filter at one color.
 *
 * # Safety
 * `rgb_in` and `rgb_out` must point to 3 doubles.
 */
enum FstStatus fst_params_eval(const struct FstParams *params,
                               const double *rgb_in,
                               bool clamp,
                               double *rgb_out);

/**
 * Applies the polynomial directly to every pixel; `out` may alias `input`.
 *
 * # Safety
 * `input` and `out` must hold `width * height * 3` doubles.
 */
enum FstStatus fst_apply_filter(const struct FstParams *params,
                                const double *input,
                                size_t width,
                                size_t height,
                                double *out);

/**
 * Estimates a filter from a filtered image and its restored original.
 * `variance` holds one per-pixel uncertainty value (`width * height`
 * floats) or is null for uniform weights. `estimate` receives the handle.
 *
 * # Safety
 * Image buffers must hold `width * height * 3` doubles, `variance`
 * `width * height` floats when non-null.
 */
enum FstStatus fst_estimate_filter(const double *filtered,
                                   const double *restored,
                                   const float *variance,
                                   size_t width,
                                   size_t height,
                                   double lambda,
                                   bool cc,
                                   uint64_t seed,
                                   struct FstParams **estimate);

/**
 * Samples the filter on a `size`³ lattice.
 *
 * # Safety
 * `params` must be a live handle; `out` a valid pointer.
 */
enum FstStatus fst_lut_compile(const struct FstParams *params, size_t size, struct FstLut **out);

/**
 * Lattice points per axis, or 0 for a null handle.
 *
 * # Safety
 * `lut` must be a live handle or null.
 */
size_t fst_lut_size(const struct FstLut *lut);

/**
 * Trilinear lookup of every pixel; `out` may alias `input`.
 *
 * # Safety
 * `input` and `out` must hold `width * height * 3` doubles.
 */
enum FstStatus fst_lut_apply(const struct FstLut *lut,
                             const double *input,
                             size_t width,
                             size_t height,
                             double *out);

/**
 * Writes a `.cube` file; `title` may be null.
 *
 * # Safety
 * `lut` must be a live handle; strings NUL-terminated.
 */
enum FstStatus fst_lut_export_cube(const struct FstLut *lut, const char *path, const char *title);

/**
 * # Safety
 * `lut` must come from this library and not be used afterwards; null is ignored.
 */
void fst_lut_free(struct FstLut *lut);

/**
 * PSNR and CIEDE2000 statistics of `pred` against `truth`.
 *
 * # Safety
 * Buffers must hold `width * height * 3` doubles; `out` must be valid.
 */
enum FstStatus fst_evaluate(const double *pred,
                            const double *truth,
                            size_t width,
                            size_t height,
                            struct FstMetrics *out);

/**
 * Converts one sRGB color in `[0, 1]` to CIELAB (D65).
 *
 * # Safety
 * `rgb` and `lab` must point to 3 doubles.
 */
enum FstStatus fst_srgb_to_lab(const double *rgb, double *lab);

/**
 * CIEDE2000 difference of two Lab colors, or NaN if either pointer is null.
 *
 * # Safety
 * `lab1` and `lab2` must point to 3 doubles.
 */
double fst_ciede2000(const double *lab1, const double *lab2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FST_H */
