#ifndef KPA_H
#define KPA_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for every fallible entry point.
 */
typedef enum KpaStatus {
  KPA_STATUS_OK = 0,
  KPA_STATUS_NULL_ARGUMENT = 1,
  KPA_STATUS_INVALID_ARGUMENT = 2,
  KPA_STATUS_PARSE_ERROR = 3,
  KPA_STATUS_GUARD_TRIPPED = 4,
  KPA_STATUS_IO_ERROR = 5,
  KPA_STATUS_PANIC = 6,
} KpaStatus;

/**
 * Opaque permutation-array handle.
 */
typedef struct KpaArray KpaArray;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. Borrowed; valid
 * until the next library call on the same thread.
 */
const char *kpa_last_error_message(void);

/**
 * Library version as a static string; never freed.
 */
const char *kpa_version(void);

/**
 * Kendall tau distance between two length-`n` permutations of 0..n-1.
 *
 * # Safety
 * `sigma` and `pi` must point to `n` readable bytes; `out` must be a
 * valid writable pointer.
 */
enum KpaStatus kpa_kendall_distance(const uint8_t *sigma,
                                    const uint8_t *pi,
                                    uintptr_t n,
                                    uint32_t *out);

/**
 * Parses an array from its text form (same format the CLI reads).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be writable.
 */
enum KpaStatus kpa_array_parse(const char *text, struct KpaArray **out);

/**
 * Releases an array handle. Null is accepted and ignored.
 *
 * # Safety
 * `arr` must be a pointer previously returned by this library, or null.
 */
void kpa_array_free(struct KpaArray *arr);

/**
 * Number of members.
 *
 * # Safety
 * `arr` must be a valid handle.
 */
uintptr_t kpa_array_len(const struct KpaArray *arr);

/**
 * Symbol count n of the members.
 *
 * # Safety
 * `arr` must be a valid handle.
 */
uintptr_t kpa_array_n(const struct KpaArray *arr);

/**
 * Exact minimum pairwise distance, with an optional witness pair.
 * Witness out-parameters may be null when not wanted.
 *
 * # Safety
 * `arr` must be a valid handle; non-null out-pointers must be writable.
 */
enum KpaStatus kpa_array_min_distance(const struct KpaArray *arr,
                                      uint32_t *out_distance,
                                      uintptr_t *out_witness_i,
                                      uintptr_t *out_witness_j);

/**
 * Certifies the array at distance `d`; `*out_pass` is 1 on pass, 0 on
 * fail. A failing certificate is still `Ok` status.
 *
 * # Safety
 * `arr` must be a valid handle; `out_pass` must be writable.
 */
enum KpaStatus kpa_array_certify(const struct KpaArray *arr, uint32_t d, int32_t *out_pass);

/**
 * Renders the array in its text form.
 *
 * # Safety
 * `arr` must be a valid handle; `out` must be writable. Free the result
 * with `kpa_string_free`.
 */
enum KpaStatus kpa_array_format(const struct KpaArray *arr, char **out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be a string previously returned by this library, or null.
 */
void kpa_string_free(char *s);

/**
 * Randomized greedy search with restarts over the full space (`m` = 0)
 * or over S_{n,m}. Deterministic for a given seed.
 *
 * # Safety
 * `out` must be writable.
 */
enum KpaStatus kpa_search_greedy(uintptr_t n,
                                 uintptr_t m,
                                 uint32_t d,
                                 uintptr_t restarts,
                                 uint64_t rng_seed,
                                 struct KpaArray **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPA_H */
