#ifndef ICONARY_H
#define ICONARY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum IconaryStatus {
  ICONARY_STATUS_OK = 0,
  // A required pointer argument was NULL.
  ICONARY_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  ICONARY_STATUS_INVALID_UTF8 = 2,
  // A JSON argument did not parse into the expected shape.
  ICONARY_STATUS_INVALID_JSON = 3,
  // The arguments were well-formed but not acceptable.
  ICONARY_STATUS_INVALID_ARGUMENT = 4,
  // Drawing token encoding or decoding failed.
  ICONARY_STATUS_CODEC = 5,
  // Reading a file failed.
  ICONARY_STATUS_IO = 6,
  // An internal panic was caught.
  ICONARY_STATUS_PANIC = 7,
} IconaryStatus;

// A loaded icon library.
typedef struct IconaryLibrary IconaryLibrary;

// One game session driven by the caller's clock.
typedef struct IconarySession IconarySession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *iconary_last_error_message(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must be NULL or a string obtained from this library, freed once.
void iconary_string_free(char *s);

// Library version as a static string; do not free.
const char *iconary_version(void);

// The icon library compiled into the engine.
//
// # Safety
// `out` must be a valid pointer.
enum IconaryStatus iconary_library_bundled(struct IconaryLibrary **out);

// Loads a library manifest (JSON) from `path`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum IconaryStatus iconary_library_load(const char *path, struct IconaryLibrary **out);

// Number of icons in the library.
//
// # Safety
// `lib` must be a live handle and `out` a valid pointer.
enum IconaryStatus iconary_library_len(const struct IconaryLibrary *lib, size_t *out);

// # Safety
// `lib` must be NULL or a handle from this library, freed once.
void iconary_library_free(struct IconaryLibrary *lib);

// Encodes a drawing (game-schema JSON) as space-separated drawing tokens
// under the default quantization.
//
// # Safety
// Pointers must be valid; `drawing_json` NUL-terminated.
enum IconaryStatus iconary_codec_encode(const struct IconaryLibrary *lib,
                                        const char *drawing_json,
                                        char **out_tokens);

// Decodes space-separated drawing tokens into drawing JSON with
// bucket-centre poses.
//
// # Safety
// Pointers must be valid; `tokens` NUL-terminated.
enum IconaryStatus iconary_codec_decode(const struct IconaryLibrary *lib,
                                        const char *tokens,
                                        size_t round_index,
                                        char **out_drawing_json);

// Text description of a drawing, e.g. `3 tree, small dog`.
//
// # Safety
// Pointers must be valid; `drawing_json` NUL-terminated.
enum IconaryStatus iconary_describe_drawing(const struct IconaryLibrary *lib,
                                            const char *drawing_json,
                                            char **out_text);

// Guesser model input for a guesser view (`{"slots", "drawings",
// "guesses", "turn", "remaining_seconds"}` JSON). `fill_in_the_blank` selects sentinel runs instead of
// one `_` per hidden word.
//
// # Safety
// Pointers must be valid; `view_json` NUL-terminated.
enum IconaryStatus iconary_render_guesser_input(const struct IconaryLibrary *lib,
                                                const char *view_json,
                                                bool fill_in_the_blank,
                                                char **out_text);

// Drawer model input: the phrase with guessed words wrapped in `*`.
//
// # Safety
// Pointers must be valid; `phrase_json` NUL-terminated.
enum IconaryStatus iconary_render_drawer_input(const char *phrase_json, char **out_text);

// Best multiset F1 of a drawing against a JSON list of reference drawings.
// An empty reference list is an invalid argument.
//
// # Safety
// Pointers must be valid; JSON arguments NUL-terminated.
enum IconaryStatus iconary_icon_f1(const char *model_json,
                                   const char *references_json,
                                   double *out);

// Soft win: `guessed[i]` marks a hit at phrase position i; `len` must equal
// the phrase length.
//
// # Safety
// `guessed` must point to `len` booleans; other pointers must be valid.
enum IconaryStatus iconary_soft_win(const char *phrase_json,
                                    const bool *guessed,
                                    size_t len,
                                    bool ood_mode,
                                    bool *out);

// Perplexity of one token sequence from its per-token natural-log
// likelihoods.
//
// # Safety
// `log_likelihoods` must point to `len` doubles; `out` must be valid.
enum IconaryStatus iconary_sequence_perplexity(const double *log_likelihoods,
                                               size_t len,
                                               double *out);

// Opens a session for `phrase_json` (game-schema phrase). With a library
// handle, drawings are checked against it and AI guessers are capped per
// drawing; `lib` may be NULL.
//
// # Safety
// Strings must be NUL-terminated; `lib` NULL or live; `out` valid.
enum IconaryStatus iconary_session_new(const char *id,
                                       const char *phrase_json,
                                       const struct IconaryLibrary *lib,
                                       struct IconarySession **out);

// Applies one raw protocol line from `role_id` (0 drawer, 1 guesser) at
// `at` seconds. `out_messages_json` receives the outbound messages as
// `[{"to": role, "message": {...}}, ...]`. Rejected lines still succeed:
// the rejection is one of the messages.
//
// # Safety
// Pointers must be valid; `line` NUL-terminated.
enum IconaryStatus iconary_session_step(struct IconarySession *session,
                                        double at,
                                        uint32_t role_id,
                                        const char *line,
                                        char **out_messages_json);

// Advances the session clock to `at` without a message (ends the game on
// timeout).
//
// # Safety
// Pointers must be valid.
enum IconaryStatus iconary_session_tick(struct IconarySession *session,
                                        double at,
                                        char **out_messages_json);

// Whether the game has ended.
//
// # Safety
// Pointers must be valid.
enum IconaryStatus iconary_session_is_finished(const struct IconarySession *session, bool *out);

// The session as a game-schema record. `split` is a split name such as
// `train`.
//
// # Safety
// Pointers must be valid; `split` NUL-terminated.
enum IconaryStatus iconary_session_record(const struct IconarySession *session,
                                          const char *split,
                                          char **out_record_json);

// # Safety
// `session` must be NULL or a handle from this library, freed once.
void iconary_session_free(struct IconarySession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ICONARY_H */
