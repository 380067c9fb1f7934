#ifndef COMMITGEN_H
#define COMMITGEN_H

/* Generated by cbindgen from commitgen-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible entry point.
 */
typedef enum CgStatus {
  CG_STATUS_OK = 0,
  /**
   * A required pointer was null or an argument was out of range.
   */
  CG_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input text could not be parsed (diffs, vocab files).
   */
  CG_STATUS_PARSE_ERROR = 2,
  /**
   * Structurally valid input with unusable content.
   */
  CG_STATUS_DATA_ERROR = 3,
  CG_STATUS_IO_ERROR = 4,
  /**
   * Checkpoint/vocabulary shape disagreement.
   */
  CG_STATUS_SHAPE_ERROR = 5,
  /**
   * Unexpected internal failure (including caught panics).
   */
  CG_STATUS_INTERNAL_ERROR = 6,
} CgStatus;

/**
 * Opaque model handle: checkpoint parameters plus their configuration.
 */
typedef struct CgModel CgModel;

/**
 * Opaque trained vocabulary handle.
 */
typedef struct CgVocab CgVocab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *cg_version(void);

/**
 * Message describing the most recent failure on this thread, or null.
 * The caller owns the returned string (free with [`cg_string_free`]).
 */
char *cg_last_error_message(void);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must have been returned by a commitgen function and not freed yet.
 */
void cg_string_free(char *s);

/**
 * Frees an id buffer returned by [`cg_vocab_encode`]. Null is a no-op.
 *
 * # Safety
 * `ids`/`len` must come from a commitgen function and not be freed yet.
 */
void cg_ids_free(unsigned int *ids, size_t len);

/**
 * Loads a vocabulary directory (merges.txt + vocab.txt).
 *
 * # Safety
 * `dir` must be a valid NUL-terminated path; `out` must be a valid
 * pointer-to-pointer.
 */
enum CgStatus cg_vocab_load(const char *dir, struct CgVocab **out);

/**
 * # Safety
 * `vocab` must be null or a live handle from [`cg_vocab_load`].
 */
void cg_vocab_free(struct CgVocab *vocab);

/**
 * Total vocabulary size (specials + bytes + merges); 0 for null.
 *
 * # Safety
 * `vocab` must be null or a live handle.
 */
size_t cg_vocab_size(const struct CgVocab *vocab);

/**
 * Stable hash binding checkpoints to the vocabulary they were trained with.
 *
 * # Safety
 * `vocab` must be null or a live handle.
 */
uint64_t cg_vocab_hash(const struct CgVocab *vocab);

/**
 * Encodes UTF-8 text into token ids. The buffer written to `out_ids` /
 * `out_len` is owned by the caller (free with [`cg_ids_free`]).
 *
 * # Safety
 * All pointers must be valid; `text` NUL-terminated.
 */
enum CgStatus cg_vocab_encode(const struct CgVocab *vocab,
                              const char *text,
                              unsigned int **out_ids,
                              size_t *out_len);

/**
 * Decodes token ids back to text (specials stripped).
 *
 * # Safety
 * `ids` must point to `len` readable u32 values; `out` must be valid.
 */
enum CgStatus cg_vocab_decode(const struct CgVocab *vocab,
                              const unsigned int *ids,
                              size_t len,
                              char **out);

/**
 * Loads a model checkpoint.
 *
 * # Safety
 * `path` must be a valid NUL-terminated path; `out` must be valid.
 */
enum CgStatus cg_model_load(const char *path, struct CgModel **out);

/**
 * # Safety
 * `model` must be null or a live handle from [`cg_model_load`].
 */
void cg_model_free(struct CgModel *model);

/**
 * Hash of the vocabulary the model was trained with; 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uint64_t cg_model_vocab_hash(const struct CgModel *model);

/**
 * Parses a unified git diff and returns the changed lines per file as a
 * JSON document: {"files": [{"path", "language", "added", "deleted"}],
 * "skipped": [{"path", "reason"}]}.
 *
 * # Safety
 * `diff_text` must be NUL-terminated; `out_json` must be valid.
 */
enum CgStatus cg_diff_changed_lines(const char *diff_text, char **out_json);

/**
 * Suggests a commit message for a unified diff. `beam_size` 0 means the
 * default (10). The message is written to `out_message` (caller frees).
 *
 * # Safety
 * Handles must be live; `diff_text` NUL-terminated; `out_message` valid.
 */
enum CgStatus cg_suggest(const struct CgModel *model,
                         const struct CgVocab *vocab,
                         const char *diff_text,
                         size_t beam_size,
                         char **out_message);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMMITGEN_H */
