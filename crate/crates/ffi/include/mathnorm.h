#ifndef MATHNORM_H
#define MATHNORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MnStatus {
  MN_STATUS_OK = 0,
  MN_STATUS_NULL_POINTER = 1,
  MN_STATUS_INVALID_UTF8 = 2,
  /**
   * The normalizer rejected the input; the message holds the reason.
   */
  MN_STATUS_REJECTED = 3,
  MN_STATUS_TOKENIZE_ERROR = 4,
  MN_STATUS_CONFIG_ERROR = 5,
  MN_STATUS_IMAGE_ERROR = 6,
  MN_STATUS_INVALID_ARGUMENT = 7,
  MN_STATUS_BUFFER_TOO_SMALL = 8,
  MN_STATUS_PANIC = 99,
} MnStatus;

typedef enum MnMode {
  MN_MODE_GT = 0,
  MN_MODE_RENDERING = 1,
} MnMode;

typedef struct MnImage MnImage;

typedef struct MnNormalizer MnNormalizer;

/**
 * Half-open row range `[start, end)`.
 */
typedef struct MnRange {
  size_t start;
  size_t end;
} MnRange;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next mathnorm call on the same thread.
 */
const char *mn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mn_version(void);

void mn_string_free(char *s);

/**
 * Normalizer with the built-in default tables.
 */
enum MnStatus mn_normalizer_new(enum MnMode mode, struct MnNormalizer **out);

/**
 * Normalizer from a `key = value` config file.
 */
enum MnStatus mn_normalizer_from_config(const char *path,
                                        enum MnMode mode,
                                        struct MnNormalizer **out);

void mn_normalizer_free(struct MnNormalizer *n);

/**
 * Canonical form of `input` as space-separated tokens. On rejection returns
 * `Rejected`, leaves `*out` NULL and sets the message to the reason, e.g.
 * `forbidden-token \cite`.
 */
enum MnStatus mn_normalize(const struct MnNormalizer *n, const char *input, char **out);

/**
 * Tokenizes `input` into space-separated tokens.
 */
enum MnStatus mn_tokenize(const char *input, char **out);

enum MnStatus mn_levenshtein(const char *gt, const char *pre, size_t *out);

/**
 * Edit score in percent; 100 when both sequences are empty.
 */
enum MnStatus mn_edit_score(const char *gt, const char *pre, double *out);

/**
 * Sentence Bleu-4 in percent, unsmoothed.
 */
enum MnStatus mn_bleu4(const char *gt, const char *pre, double *out);

enum MnStatus mn_exact_match(const char *gt, const char *pre, bool *out);

/**
 * Loads a P2 or P5 PGM file.
 */
enum MnStatus mn_image_load(const char *path, struct MnImage **out);

/**
 * Copies `width * height` row-major bytes (0 black, 255 white).
 */
enum MnStatus mn_image_from_pixels(size_t width,
                                   size_t height,
                                   const uint8_t *pixels,
                                   struct MnImage **out);

void mn_image_free(struct MnImage *img);

/**
 * Width in pixels, 0 for NULL.
 */
size_t mn_image_width(const struct MnImage *img);

/**
 * Height in pixels, 0 for NULL.
 */
size_t mn_image_height(const struct MnImage *img);

enum MnStatus mn_image_is_blank(const struct MnImage *img, uint8_t white_threshold, bool *out);

/**
 * Y-cut segmentation. Writes up to `capacity` ranges to `ranges` and the
 * total count to `*count`; returns `BufferTooSmall` if they did not all
 * fit. `ranges` may be NULL when `capacity` is 0 to query the count.
 */
enum MnStatus mn_image_ycut(const struct MnImage *img,
                            uint8_t white_threshold,
                            size_t min_gap,
                            size_t min_segment,
                            struct MnRange *ranges,
                            size_t capacity,
                            size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATHNORM_H */
