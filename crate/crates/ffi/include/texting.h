#ifndef TEXTING_H
#define TEXTING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TextingStatus {
  TEXTING_STATUS_OK = 0,
  TEXTING_STATUS_NULL_POINTER = 1,
  TEXTING_STATUS_INVALID_UTF8 = 2,
  TEXTING_STATUS_IO = 3,
  TEXTING_STATUS_CHECKPOINT = 4,
  TEXTING_STATUS_BUFFER_TOO_SMALL = 5,
  TEXTING_STATUS_DIMENSION_MISMATCH = 6,
  TEXTING_STATUS_INVALID_ARGUMENT = 7,
  TEXTING_STATUS_EMPTY_DOCUMENT = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  TEXTING_STATUS_INTERNAL = 9,
} TextingStatus;

/**
 * Word vectors; unknown words get deterministic small random vectors.
 */
typedef struct TextingEmbeddings TextingEmbeddings;

/**
 * Trained classifier loaded from a checkpoint directory.
 */
typedef struct TextingModel TextingModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *texting_version(void);

/**
 * Message describing the last failure on this thread; empty if none.
 * Valid until the next failing call on the same thread.
 */
const char *texting_last_error_message(void);

/**
 * Loads a checkpoint directory into `*out`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TextingStatus texting_model_load(const char *dir, struct TextingModel **out);

/**
 * # Safety
 * `model` must come from [`texting_model_load`] and not be freed twice.
 */
void texting_model_free(struct TextingModel *model);

/**
 * Number of classes, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t texting_model_num_classes(const struct TextingModel *model);

/**
 * Name of class `index`, owned by the model; null when out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *texting_model_class_name(const struct TextingModel *model, size_t index);

/**
 * Input vector size the model expects from its embeddings.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t texting_model_input_dim(const struct TextingModel *model);

/**
 * OOV seed the model was trained with.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uint64_t texting_model_oov_seed(const struct TextingModel *model);

/**
 * Class probabilities for one raw document, written to `out_probs[0..len]`.
 *
 * The text is lowercased and split on whitespace; with `remove_stopwords`
 * non-zero the shipped English stopword list is dropped first. `len` must
 * be at least the number of classes.
 *
 * # Safety
 * Handles must be live, `text` NUL-terminated and `out_probs` valid for
 * `len` writes.
 */
enum TextingStatus texting_model_predict(const struct TextingModel *model,
                                         const struct TextingEmbeddings *embeddings,
                                         const char *text,
                                         int32_t remove_stopwords,
                                         float *out_probs,
                                         size_t len);

/**
 * Embeddings with no known words: every lookup is a seeded random vector.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TextingStatus texting_embeddings_random(size_t dimension,
                                             uint64_t oov_seed,
                                             struct TextingEmbeddings **out);

/**
 * Loads a whitespace-separated word vector file of the given dimension.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` a valid pointer.
 */
enum TextingStatus texting_embeddings_load(const char *path,
                                           size_t dimension,
                                           uint64_t oov_seed,
                                           struct TextingEmbeddings **out);

/**
 * # Safety
 * `embeddings` must come from a `texting_embeddings_*` constructor and not
 * be freed twice.
 */
void texting_embeddings_free(struct TextingEmbeddings *embeddings);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEXTING_H */
