#ifndef TOC_H
#define TOC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every function of the interface.
typedef enum TocStatus {
  TOC_STATUS_OK = 0,
  TOC_STATUS_NULL_ARGUMENT = 1,
  TOC_STATUS_INVALID_UTF8 = 2,
  TOC_STATUS_PARSE = 3,
  TOC_STATUS_UNSUPPORTED = 4,
  TOC_STATUS_RESOURCE = 5,
  TOC_STATUS_MISMATCH = 6,
  TOC_STATUS_INTERNAL = 7,
} TocStatus;

// A parsed ground program.
typedef struct TocProgram TocProgram;

// Encoding switches for `toc_translate` and `toc_check`.
typedef struct TocEncoding {
  bool no_strong;
  bool vub_form;
  bool extensional;
} TocEncoding;

// Model counts reported by `toc_check`.
typedef struct TocCheckSummary {
  size_t stable_models;
  size_t translation_models;
  bool passed;
} TocCheckSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a NUL-terminated program text. On success `*out` owns a new
// handle that must be released with `toc_program_free`.
//
// # Safety
// `text` must be a valid C string and `out` a valid pointer.
enum TocStatus toc_parse(const char *text, struct TocProgram **out);

// Releases a handle from `toc_parse`. Null is ignored.
//
// # Safety
// `handle` must come from `toc_parse` and not be used afterwards.
void toc_program_free(struct TocProgram *handle);

// Number of atoms in the program's signature, hidden ones included.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
enum TocStatus toc_atom_count(const struct TocProgram *handle, size_t *out);

// Writes the SMT-LIB translation to `*out`, a string to be released with
// `toc_string_free`.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
enum TocStatus toc_translate(const struct TocProgram *handle,
                             struct TocEncoding encoding,
                             bool get_model,
                             char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void toc_string_free(char *s);

// Counts the stable models with the reference interpreter.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
enum TocStatus toc_stable_model_count(const struct TocProgram *handle, size_t *out);

// Compares the translation's models with the stable models. Returns
// `Mismatch` when they disagree; the summary is filled in either way.
//
// # Safety
// `handle` must be a live handle and `out` a valid pointer.
enum TocStatus toc_check(const struct TocProgram *handle,
                         struct TocEncoding encoding,
                         struct TocCheckSummary *out);

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *toc_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOC_H */
