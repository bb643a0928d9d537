#ifndef THRESHOLD_LAB_H
#define THRESHOLD_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Zero-energy classification.
typedef enum TlClassification {
  TL_CLASSIFICATION_REGULAR = 0,
  TL_CLASSIFICATION_FIRST_KIND = 1,
  TL_CLASSIFICATION_SECOND_KIND = 2,
  TL_CLASSIFICATION_THIRD_KIND = 3,
} TlClassification;

// Result of every fallible call.
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_UTF8 = 2,
  TL_STATUS_CONFIG = 3,
  TL_STATUS_DOMAIN = 4,
  TL_STATUS_NUMERICAL = 5,
  TL_STATUS_OUT_OF_RANGE = 6,
  TL_STATUS_IO = 7,
  TL_STATUS_UNKNOWN = 8,
  TL_STATUS_PANIC = 99,
} TlStatus;

// A validated run configuration.
typedef struct TlConfig TlConfig;

// A discretized and classified potential (or the free case).
typedef struct TlMedium TlMedium;

// A propagator time series.
typedef struct TlSeries TlSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tl_version(void);

// Copy the last error message of this thread into `buf` (NUL-terminated, truncated
// to `len`). Returns the full message length without the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t tl_last_error(char *buf, size_t len);

// Parse a TOML run configuration.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum TlStatus tl_config_from_toml(const char *toml, struct TlConfig **out);

// Default configuration for a unit-radius square well of coupling `c`.
struct TlConfig *tl_config_square_well(double c);

// # Safety
// `cfg` must come from this library and not be used afterwards.
void tl_config_free(struct TlConfig *cfg);

// Discretize and classify the configured potential.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum TlStatus tl_medium_new(const struct TlConfig *cfg, struct TlMedium **out);

// # Safety
// `medium` must be a live handle and `out` a valid pointer.
enum TlStatus tl_medium_classification(const struct TlMedium *medium, enum TlClassification *out);

// # Safety
// `medium` must come from this library and not be used afterwards.
void tl_medium_free(struct TlMedium *medium);

// Coupling at which channel `ell` first reaches threshold along the configured family.
//
// # Safety
// `cfg` must be a live handle and `c_star` a valid pointer.
enum TlStatus tl_tune(const struct TlConfig *cfg, size_t ell, double *c_star);

// Propagator series for the configured multiplier, times and pairs.
//
// # Safety
// Handles must be live and `out` a valid pointer.
enum TlStatus tl_evolve(const struct TlMedium *medium,
                        const struct TlConfig *cfg,
                        struct TlSeries **out);

// Number of accepted rows.
//
// # Safety
// `series` must be a live handle.
size_t tl_series_len(const struct TlSeries *series);

// Row `i`: time, pair index, value and error estimate.
//
// # Safety
// `series` must be a live handle; output pointers must be valid.
enum TlStatus tl_series_row(const struct TlSeries *series,
                            size_t i,
                            double *t,
                            size_t *pair,
                            double *re,
                            double *im,
                            double *err);

// Least-squares slope of `log |K|` against `log t` for one pair.
//
// # Safety
// `series` must be a live handle and `slope` a valid pointer.
enum TlStatus tl_series_slope(const struct TlSeries *series, size_t pair, double *slope);

// # Safety
// `series` must come from this library and not be used afterwards.
void tl_series_free(struct TlSeries *series);

// Run one oscillatory or spatial integral check.
//
// # Safety
// `id` must be a NUL-terminated string; output pointers must be valid.
enum TlStatus tl_verify(const char *id, uint64_t seed, int *pass, double *sup_ratio);

// Outgoing (`sign > 0`) or incoming four-dimensional resolvent kernel at distance `d`.
//
// # Safety
// Output pointers must be valid.
enum TlStatus tl_free_kernel_4d(double lambda, int sign, double d, double *re, double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THRESHOLD_LAB_H */
