#ifndef PWFNET_H
#define PWFNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PWF_VARIANT_S 0

#define PWF_VARIANT_M 1

#define PWF_VARIANT_L 2

#define PWF_BAND_LL 1

#define PWF_BAND_LH 2

#define PWF_BAND_HL 4

#define PWF_BAND_HH 8

typedef enum pwf_status {
  PWF_STATUS_OK = 0,
  PWF_STATUS_NULL_POINTER = 1,
  PWF_STATUS_INVALID_ARGUMENT = 2,
  PWF_STATUS_SHAPE = 3,
  PWF_STATUS_IO = 4,
  PWF_STATUS_FORMAT = 5,
  PWF_STATUS_ARCHITECTURE = 6,
  PWF_STATUS_NON_FINITE = 7,
  PWF_STATUS_INTERNAL = 8,
  PWF_STATUS_PANIC = 9,
} pwf_status;

/**
 * Opaque CHW image with values nominally in [0, 1].
 */
typedef struct pwf_image pwf_image;

/**
 * Opaque restoration network.
 */
typedef struct pwf_model pwf_model;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pwf_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message
 * length excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pwf_last_error(char *buf, size_t len);

/**
 * Builds a freshly initialised model (identity restoration).
 *
 * # Safety
 * `out` must be a valid pointer to a `pwf_model *` slot.
 */
enum pwf_status pwf_model_new(size_t base_channels,
                              size_t blocks_fine,
                              size_t blocks_mid,
                              size_t blocks_coarse,
                              uint64_t seed,
                              struct pwf_model **out);

/**
 * Loads a checkpoint written by `pwfnet train` or `pwf_model_save`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid slot.
 */
enum pwf_status pwf_model_load(const char *path, struct pwf_model **out);

/**
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum pwf_status pwf_model_save(const struct pwf_model *model, const char *path);

/**
 * Number of trainable parameters used by `variant`.
 *
 * # Safety
 * `model` must come from this library and `out` must be writable.
 */
enum pwf_status pwf_model_param_count(const struct pwf_model *model,
                                      uint32_t variant_id,
                                      size_t *out);

/**
 * Restores `input` at full resolution. The result is a new image owned
 * by the caller.
 *
 * # Safety
 * `model` and `input` must come from this library; `out` must be a valid slot.
 */
enum pwf_status pwf_model_restore(const struct pwf_model *model,
                                  const struct pwf_image *input,
                                  uint32_t variant_id,
                                  struct pwf_image **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void pwf_model_free(struct pwf_model *model);

/**
 * Copies `channels * height * width` samples (channel-major) into a new image.
 *
 * # Safety
 * `data` must point to that many readable doubles; `out` must be a valid slot.
 */
enum pwf_status pwf_image_new(size_t channels,
                              size_t height,
                              size_t width,
                              const double *data,
                              struct pwf_image **out);

/**
 * Reads a PNG or binary PPM file.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` a valid slot.
 */
enum pwf_status pwf_image_load(const char *path, struct pwf_image **out);

/**
 * Writes PNG or PPM depending on the extension.
 *
 * # Safety
 * `image` must come from this library; `path` must be NUL-terminated.
 */
enum pwf_status pwf_image_save(const struct pwf_image *image, const char *path);

/**
 * # Safety
 * `image` must come from this library; the out pointers must be writable.
 */
enum pwf_status pwf_image_dims(const struct pwf_image *image,
                               size_t *channels,
                               size_t *height,
                               size_t *width);

/**
 * Copies the samples into `buf`, which must hold exactly
 * `channels * height * width` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum pwf_status pwf_image_read(const struct pwf_image *image, double *buf, size_t len);

/**
 * # Safety
 * `image` must be null or a handle from this library not yet freed.
 */
void pwf_image_free(struct pwf_image *image);

/**
 * PSNR in dB for unit peak, capped at 100 for identical images.
 *
 * # Safety
 * Both images must come from this library; `out` must be writable.
 */
enum pwf_status pwf_psnr(const struct pwf_image *a, const struct pwf_image *b, double *out);

/**
 * Mean SSIM over channels (11x11 Gaussian window).
 *
 * # Safety
 * Both images must come from this library; `out` must be writable.
 */
enum pwf_status pwf_ssim(const struct pwf_image *a, const struct pwf_image *b, double *out);

/**
 * Replaces the bands in `band_mask` (an OR of `PWF_BAND_*`) of the
 * degraded image's pyramid with those of the clean image. `family` is a
 * wavelet name such as "haar" or "db2".
 *
 * # Safety
 * Images must come from this library, `family` must be NUL-terminated and
 * `out` a valid slot.
 */
enum pwf_status pwf_subband_swap(const struct pwf_image *degraded,
                                 const struct pwf_image *clean,
                                 size_t levels,
                                 uint32_t band_mask,
                                 const char *family,
                                 struct pwf_image **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PWFNET_H */
