#ifndef PRAE_H
#define PRAE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of answer candidates per puzzle.
 */
#define PRAE_CANDIDATES 8

/**
 * Number of context panels per puzzle.
 */
#define PRAE_CONTEXT_PANELS 8

typedef enum PraeStatus {
  PRAE_STATUS_OK = 0,
  PRAE_STATUS_NULL_POINTER = 1,
  /**
   * The call broke an input contract: unknown configuration, ε out of range, bad index.
   */
  PRAE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed instance data or an unsolvable puzzle.
   */
  PRAE_STATUS_DATA_ERROR = 3,
  PRAE_STATUS_IO_ERROR = 4,
  /**
   * The output buffer is too small.
   */
  PRAE_STATUS_BUFFER_TOO_SMALL = 5,
  PRAE_STATUS_PANIC = 6,
} PraeStatus;

/**
 * A generated or loaded puzzle.
 */
typedef struct PraeInstance PraeInstance;

/**
 * The answer report of one solve.
 */
typedef struct PraeReport PraeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *prae_last_error_message(void);

/**
 * Generates the instance for `config` (e.g. `"2x2Grid"`) and `seed`.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PraeStatus prae_instance_generate(const char *config,
                                       uint64_t seed,
                                       struct PraeInstance **out);

/**
 * Parses and validates an instance from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PraeStatus prae_instance_from_json(const char *json, struct PraeInstance **out);

/**
 * Serializes an instance to JSON. Release the string with [`prae_string_free`].
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum PraeStatus prae_instance_to_json(const struct PraeInstance *instance, char **out);

/**
 * Index of the correct candidate.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum PraeStatus prae_instance_answer_index(const struct PraeInstance *instance, size_t *out);

/**
 * Releases an instance. Null is ignored.
 *
 * # Safety
 * `instance` must be null or a handle not yet freed.
 */
void prae_instance_free(struct PraeInstance *instance);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void prae_string_free(char *s);

/**
 * Solves an instance under symmetric perception noise `epsilon` in [0, 1].
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum PraeStatus prae_solve(const struct PraeInstance *instance,
                           double epsilon,
                           uint64_t seed,
                           struct PraeReport **out);

/**
 * Index of the chosen candidate.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum PraeStatus prae_report_chosen(const struct PraeReport *report, size_t *out);

/**
 * Writes the per-candidate divergences (nats, summed over attributes) into `buf`, which must hold
 * [`PRAE_CANDIDATES`] values.
 *
 * # Safety
 * `report` must be a live handle and `buf` valid for `len` writes.
 */
enum PraeStatus prae_report_divergences(const struct PraeReport *report, double *buf, size_t len);

/**
 * Writes the candidate probabilities into `buf`, which must hold
 * [`PRAE_CANDIDATES`] values.
 *
 * # Safety
 * `report` must be a live handle and `buf` valid for `len` writes.
 */
enum PraeStatus prae_report_answer_probs(const struct PraeReport *report, double *buf, size_t len);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void prae_report_free(struct PraeReport *report);

/**
 * Renders panel `panel` as binary PGM. Indices 0..8 are the context panels,
 * 8..16 the candidates. The byte length is always written to `out_len`; if
 * `cap` is too small nothing else is written and `BufferTooSmall` is
 * returned, so a first call with a null buffer queries the size.
 *
 * # Safety
 * `instance` must be a live handle, `out_len` a valid pointer and `buf`
 * valid for `cap` writes when `cap` is large enough.
 */
enum PraeStatus prae_render_panel_pgm(const struct PraeInstance *instance,
                                      size_t panel,
                                      uint8_t *buf,
                                      size_t cap,
                                      size_t *out_len);

/**
 * Renders panel `panel` (indexed as in [`prae_render_panel_pgm`]) to a PGM file.
 *
 * # Safety
 * `instance` must be a live handle and `path` a NUL-terminated string.
 */
enum PraeStatus prae_render_panel_pgm_file(const struct PraeInstance *instance,
                                           size_t panel,
                                           const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRAE_H */
