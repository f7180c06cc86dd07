#ifndef DECOYKIT_H
#define DECOYKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DkStatus {
  DK_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an out-of-range argument.
  DK_STATUS_INVALID_ARGUMENT = 1,
  // Input or policy rejected; exit code 2 on the command line.
  DK_STATUS_VALIDATION = 2,
  // Capacity, budget or class-size bound exceeded; exit code 3.
  DK_STATUS_CAPACITY = 3,
  DK_STATUS_IO = 4,
  DK_STATUS_INTERNAL = 5,
} DkStatus;

// Loaded table plus its schema.
typedef struct DkDataset DkDataset;

typedef struct DkHierarchies DkHierarchies;

// Secret decoy registry.
typedef struct DkRegistry DkRegistry;

// k-anonymous view of a dataset.
typedef struct DkView DkView;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the next call.
const char *dk_last_error(void);

// Library version as a static string.
const char *dk_version(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void dk_string_free(char *s);

// Loads a CSV table validated against a TOML schema.
//
// # Safety
// Paths must be NUL-terminated strings; `out` must be writable.
enum DkStatus dk_dataset_load(const char *data_path,
                              const char *schema_path,
                              struct DkDataset **out);

// Number of records, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live handle.
uintptr_t dk_dataset_len(const struct DkDataset *ds);

// # Safety
// `ds` must be NULL or a handle from [`dk_dataset_load`] not yet freed.
void dk_dataset_free(struct DkDataset *ds);

// Loads a TOML hierarchy file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DkStatus dk_hierarchies_load(const char *path, struct DkHierarchies **out);

// # Safety
// `h` must be NULL or a handle from [`dk_hierarchies_load`] not yet freed.
void dk_hierarchies_free(struct DkHierarchies *h);

// Finds the minimal-precision-loss k-anonymous generalization of `ds`. Direct identifiers
// are dropped first. `suppression` is the maximum share of suppressed records.
//
// # Safety
// Handles must be live; `out` must be writable.
enum DkStatus dk_anonymize(const struct DkDataset *ds,
                           const struct DkHierarchies *h,
                           uintptr_t k,
                           double suppression,
                           struct DkView **out);

// # Safety
// `v` must be NULL or a live handle.
uintptr_t dk_view_class_count(const struct DkView *v);

// # Safety
// `v` must be NULL or a live handle.
uintptr_t dk_view_suppressed_count(const struct DkView *v);

// Copies up to `cap` class sizes into `buf` and returns the number of classes. Call with
// `cap` 0 to size the buffer.
//
// # Safety
// `buf` must hold `cap` elements.
uintptr_t dk_view_class_sizes(const struct DkView *v, uintptr_t *buf, uintptr_t cap);

// Copies the level vector, same convention as [`dk_view_class_sizes`].
//
// # Safety
// `buf` must hold `cap` elements.
uintptr_t dk_view_level_vector(const struct DkView *v, uintptr_t *buf, uintptr_t cap);

// Writes table.csv and manifest.json into `dir`.
//
// # Safety
// `v` must be live; `dir` a NUL-terminated string.
enum DkStatus dk_view_write(const struct DkView *v, const char *dir);

// # Safety
// `v` must be NULL or a handle from [`dk_anonymize`] not yet freed.
void dk_view_free(struct DkView *v);

// Same-origin test between two generalized tuples over the attributes `attrs`, all of
// length `n`.
//
// # Safety
// `attrs`, `a` and `b` must each point to `n` NUL-terminated strings; `out` writable.
enum DkStatus dk_same_origin(const struct DkHierarchies *h,
                             const char *const *attrs,
                             const char *const *a,
                             const char *const *b,
                             uintptr_t n,
                             bool strict,
                             bool *out);

// Chance that a coalition picks a real decoy when guessing uniformly among `n_d + n_e`
// suspect classes.
//
// # Safety
// `out` must be writable.
enum DkStatus dk_decoy_guess_probability(uintptr_t n_d, uintptr_t n_e, double *out);

// Loads a decoy registry.
//
// # Safety
// `path` must be a NUL-terminated string; `out` writable.
enum DkStatus dk_registry_load(const char *path, struct DkRegistry **out);

// Number of recipients in the registry.
//
// # Safety
// `r` must be NULL or a live handle.
uintptr_t dk_registry_recipient_count(const struct DkRegistry *r);

// # Safety
// `r` must be NULL or a handle from [`dk_registry_load`] not yet freed.
void dk_registry_free(struct DkRegistry *r);

// Scans a leaked file and writes the verdict as JSON to `out_json`, to be released with
// [`dk_string_free`]. `text` selects line-oriented scanning with `delimiters`, NULL for the
// default set.
//
// # Safety
// Handles live, strings NUL-terminated, `out_json` writable.
enum DkStatus dk_attribute_leak(const struct DkRegistry *r,
                                const char *leak_path,
                                bool text,
                                const char *delimiters,
                                double floor,
                                char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOYKIT_H */
