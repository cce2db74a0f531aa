#ifndef WORDSIMT_H
#define WORDSIMT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WsimtMarkerConvention {
  WSIMT_MARKER_CONVENTION_SUFFIX = 0,
  WSIMT_MARKER_CONVENTION_PREFIX = 1,
} WsimtMarkerConvention;

typedef enum WsimtStatus {
  WSIMT_STATUS_OK = 0,
  WSIMT_STATUS_NULL_POINTER = 1,
  WSIMT_STATUS_INVALID_UTF8 = 2,
  WSIMT_STATUS_BUFFER_TOO_SMALL = 3,
  WSIMT_STATUS_EMPTY_INPUT = 10,
  WSIMT_STATUS_MALFORMED_TOKEN = 11,
  WSIMT_STATUS_INDEX = 12,
  WSIMT_STATUS_INVALID_PARAMETER = 13,
  WSIMT_STATUS_INVALID_SCHEDULE = 14,
  WSIMT_STATUS_INVALID_TRACE = 15,
  WSIMT_STATUS_DIMENSION = 16,
  WSIMT_STATUS_BOUNDARY = 17,
  WSIMT_STATUS_VOCABULARY_ALIGNMENT = 18,
  WSIMT_STATUS_PARSE = 19,
  WSIMT_STATUS_ORACLE_RUNAWAY = 20,
  WSIMT_STATUS_EMPTY_CORPUS = 21,
  WSIMT_STATUS_RECORD = 22,
  WSIMT_STATUS_IO = 23,
  WSIMT_STATUS_PANIC = 99,
} WsimtStatus;

/**
 * Opaque READ schedule.
 */
typedef struct WsimtSchedule WsimtSchedule;

/**
 * Opaque tokenized sentence.
 */
typedef struct WsimtSentence WsimtSentence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *wsimt_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void wsimt_string_free(char *s);

/**
 * Parse one line of marked subword tokens.
 *
 * # Safety
 * `line` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WsimtStatus wsimt_sentence_parse(const char *line,
                                      enum WsimtMarkerConvention convention,
                                      struct WsimtSentence **out);

/**
 * # Safety
 * `s` must come from `wsimt_sentence_parse` or be NULL.
 */
void wsimt_sentence_free(struct WsimtSentence *s);

/**
 * Token count, or 0 for NULL.
 *
 * # Safety
 * `s` must be a live sentence handle or NULL.
 */
uintptr_t wsimt_sentence_len(const struct WsimtSentence *s);

/**
 * # Safety
 * `s` must be a live sentence handle or NULL.
 */
uintptr_t wsimt_sentence_word_count(const struct WsimtSentence *s);

/**
 * Copy the 1-based word-final token indices into `buf`. `out_len` always
 * receives the required length.
 *
 * # Safety
 * `buf` must hold `cap` elements; `out_len` must be valid.
 */
enum WsimtStatus wsimt_sentence_word_ends(const struct WsimtSentence *s,
                                          uintptr_t *buf,
                                          uintptr_t cap,
                                          uintptr_t *out_len);

/**
 * Surface text of the first `tokens` tokens, markers removed.
 *
 * # Safety
 * `s` must be a live sentence handle and `out` a valid pointer.
 */
enum WsimtStatus wsimt_sentence_detokenize_prefix(const struct WsimtSentence *s,
                                                  uintptr_t tokens,
                                                  char **out);

/**
 * # Safety
 * `reads` must hold `len` elements and `out` must be valid.
 */
enum WsimtStatus wsimt_schedule_new(const uintptr_t *reads,
                                    uintptr_t len,
                                    uintptr_t source_len,
                                    struct WsimtSchedule **out);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void wsimt_schedule_free(struct WsimtSchedule *s);

/**
 * Target length, or 0 for NULL.
 *
 * # Safety
 * `s` must be a live schedule handle or NULL.
 */
uintptr_t wsimt_schedule_len(const struct WsimtSchedule *s);

/**
 * `g_i` for 1-based `i`.
 *
 * # Safety
 * `s` must be a live schedule handle and `out` valid.
 */
enum WsimtStatus wsimt_schedule_get(const struct WsimtSchedule *s, uintptr_t i, uintptr_t *out);

/**
 * # Safety
 * `buf` must hold `cap` elements; `out_len` must be valid.
 */
enum WsimtStatus wsimt_schedule_reads(const struct WsimtSchedule *s,
                                      uintptr_t *buf,
                                      uintptr_t cap,
                                      uintptr_t *out_len);

/**
 * Token-level wait-k over `source_len` source and `target_len` target tokens.
 *
 * # Safety
 * `out` must be valid.
 */
enum WsimtStatus wsimt_waitk_token(uintptr_t k,
                                   uintptr_t source_len,
                                   uintptr_t target_len,
                                   struct WsimtSchedule **out);

/**
 * # Safety
 * `src` and `tgt` must be live sentence handles and `out` valid.
 */
enum WsimtStatus wsimt_waitk_word(uintptr_t k,
                                  const struct WsimtSentence *src,
                                  const struct WsimtSentence *tgt,
                                  struct WsimtSchedule **out);

/**
 * Convert a token-level schedule to its word-level counterpart.
 *
 * # Safety
 * All handles must be live and `out` valid.
 */
enum WsimtStatus wsimt_to_word_policy(const struct WsimtSchedule *schedule,
                                      const struct WsimtSentence *src,
                                      const struct WsimtSentence *tgt,
                                      struct WsimtSchedule **out);

/**
 * Schedule for a policy string such as `convert:waitk-token:k=3`.
 *
 * # Safety
 * `spec` must be NUL-terminated, the handles live and `out` valid.
 */
enum WsimtStatus wsimt_policy_schedule(const char *spec,
                                       const struct WsimtSentence *src,
                                       const struct WsimtSentence *tgt,
                                       struct WsimtSchedule **out);

/**
 * Token-level Average Lagging.
 *
 * # Safety
 * `schedule` must be live and `out` valid.
 */
enum WsimtStatus wsimt_average_lagging(const struct WsimtSchedule *schedule, double *out);

/**
 * Word-level Average Lagging.
 *
 * # Safety
 * All handles must be live and `out` valid.
 */
enum WsimtStatus wsimt_word_average_lagging(const struct WsimtSchedule *schedule,
                                            const struct WsimtSentence *src,
                                            const struct WsimtSentence *tgt,
                                            double *out);

/**
 * Write the n×n intra-word encoder mask row-major into `buf` (1 = may
 * attend). `buf` must hold `n * n` bytes where `n` is the token count.
 *
 * # Safety
 * `src` must be live and `buf` must hold `cap` bytes.
 */
enum WsimtStatus wsimt_intra_word_mask(const struct WsimtSentence *src,
                                       uint8_t *buf,
                                       uintptr_t cap);

/**
 * Evaluate a corpus given as newline-separated texts and return the JSON
 * report. `reference` and `alignment` may be NULL.
 *
 * # Safety
 * Non-NULL string arguments must be NUL-terminated; `out` must be valid.
 */
enum WsimtStatus wsimt_evaluate_json(const char *source,
                                     const char *hypothesis,
                                     const char *reference,
                                     const char *alignment,
                                     const char *policy,
                                     uintptr_t workers,
                                     char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORDSIMT_H */
