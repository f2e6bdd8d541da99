#ifndef PRION_H
#define PRION_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from the prion-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Column selector for [`prion_trajectory_series`].
typedef enum PrionSeries {
  PRION_SERIES_TIME = 0,
  PRION_SERIES_MONOMERS = 1,
  PRION_SERIES_POLYMER_NUMBER = 2,
  PRION_SERIES_POLYMER_MASS = 3,
  PRION_SERIES_OVERFLOW = 4,
  PRION_SERIES_BALANCE_RESIDUAL = 5,
} PrionSeries;

// Result code of every fallible call.
typedef enum PrionStatus {
  PRION_STATUS_OK = 0,
  // A required pointer argument was null.
  PRION_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  PRION_STATUS_INVALID_UTF8 = 2,
  // The configuration failed validation; see `prion_last_error`.
  PRION_STATUS_INVALID_CONFIG = 3,
  // The solver reported an error; see `prion_last_error`.
  PRION_STATUS_RUNTIME = 4,
} PrionStatus;

// Parsed run configuration (opaque).
typedef struct PrionModel PrionModel;

// Stored simulation output (opaque).
typedef struct PrionTrajectory PrionTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *prion_last_error(void);

// Crate version as a static string.
const char *prion_version(void);

// Parses and validates a JSON run configuration.
//
// `base_dir` resolves relative paths inside the configuration and may be
// null for the current directory. On success `*out` owns the model; free
// it with [`prion_model_free`].
//
// # Safety
// `json` (and `base_dir` when non-null) must point to NUL-terminated
// strings; `out` must be a valid writable pointer.
enum PrionStatus prion_model_parse(const char *json, const char *base_dir, struct PrionModel **out);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must have been produced by [`prion_model_parse`] and not freed.
void prion_model_free(struct PrionModel *model);

// Runs the configured simulation. On success `*out` owns the trajectory;
// free it with [`prion_trajectory_free`].
//
// # Safety
// `model` must be a live handle from [`prion_model_parse`]; `out` must be
// a valid writable pointer.
enum PrionStatus prion_simulate(const struct PrionModel *model, struct PrionTrajectory **out);

// Releases a trajectory handle. Null is a no-op.
//
// # Safety
// `traj` must have been produced by [`prion_simulate`] and not freed.
void prion_trajectory_free(struct PrionTrajectory *traj);

// Number of stored output times.
//
// # Safety
// `traj` must be a live handle from [`prion_simulate`].
uintptr_t prion_trajectory_len(const struct PrionTrajectory *traj);

// Copies one output column into a caller-provided buffer of capacity `cap`.
// Returns the number of values written, or -1 when arguments are invalid.
//
// # Safety
// `traj` must be a live handle; `buf` must point to at least `cap`
// writable doubles.
intptr_t prion_trajectory_series(const struct PrionTrajectory *traj,
                                 enum PrionSeries series,
                                 double *buf,
                                 uintptr_t cap);

// Audits the configured rate set against the uniqueness hypotheses and
// returns the report as a JSON string. Free it with [`prion_string_free`].
//
// # Safety
// `model` must be a live handle; `out` must be a valid writable pointer.
enum PrionStatus prion_check_hypotheses(const struct PrionModel *model, char **out);

// Runs the simulation and compares it against the closed moment oracle,
// returning a JSON summary. Free it with [`prion_string_free`]. Fails when
// the configured rates are outside the constant-rate family.
//
// # Safety
// `model` must be a live handle; `out` must be a valid writable pointer.
enum PrionStatus prion_oracle_compare(const struct PrionModel *model, char **out);

// Frees a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must have been returned by a prion function and not freed before.
void prion_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRION_H */
