#ifndef RDRQA_H
#define RDRQA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every function.
typedef enum RdrqaStatus {
  RDRQA_STATUS_OK = 0,
  // A required pointer was null.
  RDRQA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  RDRQA_STATUS_INVALID_UTF8 = 2,
  // The question, rule or selection was rejected.
  RDRQA_STATUS_INVALID_INPUT = 3,
  // Configuration, data files or the stored tree could not be used.
  RDRQA_STATUS_SETUP = 4,
  // The engine panicked; the handle should be discarded.
  RDRQA_STATUS_INTERNAL = 5,
} RdrqaStatus;

// Opaque engine handle.
typedef struct RdrqaEngine RdrqaEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Load an engine from a JSON configuration file. On success `*out` holds a
// handle to release with [`rdrqa_engine_free`].
//
// # Safety
// `config_path` must be a nul-terminated string and `out` a valid pointer.
enum RdrqaStatus rdrqa_engine_load(const char *config_path, struct RdrqaEngine **out);

// # Safety
// `engine` must come from [`rdrqa_engine_load`] and not be used afterwards.
void rdrqa_engine_free(struct RdrqaEngine *engine);

// Analyze a question: annotations, rule path and representation as JSON.
// `pretagged` is 1 for word/TAG input, 0 for plain text, anything else to
// detect it.
//
// # Safety
// Pointers must be valid; `question` nul-terminated.
enum RdrqaStatus rdrqa_analyze(const struct RdrqaEngine *engine,
                               const char *question,
                               int pretagged,
                               char **out_json);

// Answer a question. The JSON either carries the answer or a pending
// clarification with a session and choice id for [`rdrqa_choose`].
//
// # Safety
// Pointers must be valid; `question` nul-terminated.
enum RdrqaStatus rdrqa_answer(const struct RdrqaEngine *engine,
                              const char *question,
                              int pretagged,
                              char **out_json);

// Resolve a pending clarification.
//
// # Safety
// Pointers must be valid and strings nul-terminated.
enum RdrqaStatus rdrqa_choose(const struct RdrqaEngine *engine,
                              const char *session,
                              const char *choice_id,
                              const char *selection,
                              char **out_json);

// Add an exception rule for `question`. `draft_json` holds `rule_text`,
// `extra`, `conclusion` and optionally `id`. With `dry_run` nonzero the
// tree is left as it was.
//
// # Safety
// Pointers must be valid and strings nul-terminated.
enum RdrqaStatus rdrqa_add_rule(const struct RdrqaEngine *engine,
                                const char *question,
                                const char *draft_json,
                                int dry_run,
                                char **out_json);

// Node count, depth and histograms of the tree as JSON.
//
// # Safety
// Pointers must be valid.
enum RdrqaStatus rdrqa_kb_stats(const struct RdrqaEngine *engine, char **out_json);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void rdrqa_string_free(char *s);

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on the same thread.
const char *rdrqa_last_error(void);

// Library version, a static string.
const char *rdrqa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDRQA_H */
