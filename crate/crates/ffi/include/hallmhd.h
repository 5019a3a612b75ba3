#ifndef HALLMHD_H
#define HALLMHD_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

// Result codes.
typedef enum HallmhdStatus {
  HALLMHD_STATUS_OK = 0,
  HALLMHD_STATUS_NULL_POINTER = 1,
  HALLMHD_STATUS_INVALID_ARGUMENT = 2,
  HALLMHD_STATUS_CONFIG_ERROR = 3,
  HALLMHD_STATUS_NOT_CONVERGED = 4,
  HALLMHD_STATUS_RUNTIME_ERROR = 5,
  HALLMHD_STATUS_IO_ERROR = 6,
  HALLMHD_STATUS_PANIC = 7,
} HallmhdStatus;

typedef enum HallmhdStopReason {
  HALLMHD_STOP_REASON_T_END = 0,
  HALLMHD_STOP_REASON_GRADIENT_STOP = 1,
  HALLMHD_STOP_REASON_DIVERGED = 2,
} HallmhdStopReason;

// Parsed and validated configuration.
typedef struct HallmhdConfig HallmhdConfig;

// Completed run.
typedef struct HallmhdRun HallmhdRun;

// Blow-up estimate of a run. `t_extrapolated` and `fit_quality` are NaN when
// no blow-up was detected.
typedef struct HallmhdPrediction {
  double t_riccati_lower;
  double t_theorem_cap;
  double t_extrapolated;
  double fit_quality;
  size_t fit_samples;
  bool detected;
} HallmhdPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next call into this library on the same thread.
const char *hallmhd_last_error(void);

// Library version as a static NUL-terminated string.
const char *hallmhd_version(void);

// Parses the configuration file at `path` into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum HallmhdStatus hallmhd_config_from_file(const char *path, struct HallmhdConfig **out);

// Parses configuration text into `*out`. `name` labels diagnostics and may
// be NULL.
//
// # Safety
// `text` (and `name` unless NULL) must be NUL-terminated strings and `out` a
// valid pointer.
enum HallmhdStatus hallmhd_config_from_str(const char *text,
                                           const char *name,
                                           struct HallmhdConfig **out);

// # Safety
// `cfg` must be NULL or a handle from a `hallmhd_config_from_*` call that
// has not been freed.
void hallmhd_config_free(struct HallmhdConfig *cfg);

// Runs the configured simulation into `*out`. When `out_dir` is not NULL the
// usual outputs (series, snapshots, report) are written there as well.
//
// A run that diverges still succeeds; check [`hallmhd_run_stop_reason`].
//
// # Safety
// `cfg` must be a live handle, `out_dir` NULL or a NUL-terminated string,
// `out` a valid pointer.
enum HallmhdStatus hallmhd_run(const struct HallmhdConfig *cfg,
                               const char *out_dir,
                               struct HallmhdRun **out);

// # Safety
// `run` must be NULL or a handle from [`hallmhd_run`] that has not been freed.
void hallmhd_run_free(struct HallmhdRun *run);

// Number of time levels recorded (initial state included); 0 for NULL.
//
// # Safety
// `run` must be NULL or a live handle.
size_t hallmhd_run_len(const struct HallmhdRun *run);

// Number of series columns.
size_t hallmhd_series_columns(void);

// Static name of series column `index`, or NULL when out of range.
const char *hallmhd_series_column_name(size_t index);

// Copies series column `column` (one value per time level) into `buf`,
// which must hold `hallmhd_run_len(run)` values.
//
// # Safety
// `run` must be a live handle and `buf` writable for `len` doubles.
enum HallmhdStatus hallmhd_run_series(const struct HallmhdRun *run,
                                      size_t column,
                                      double *buf,
                                      size_t len);

// # Safety
// `run` must be NULL or a live handle.
enum HallmhdStopReason hallmhd_run_stop_reason(const struct HallmhdRun *run);

// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum HallmhdStatus hallmhd_run_prediction(const struct HallmhdRun *run,
                                          struct HallmhdPrediction *out);

// Solves `-(d_rr + (3/r) d_r + d_zz) phi = omega` on an `nr x nz` grid over
// `[0, r_max] x [-z_half, z_half]`. Arrays are row-major with index
// `i * nz + j` (`i` radial). On success `*residual` holds the achieved
// residual; on [`HallmhdStatus::NotConverged`] `phi` still receives the best
// iterate.
//
// # Safety
// `omega` must be readable and `phi` writable for `nr * nz` doubles;
// `residual` must be NULL or valid.
enum HallmhdStatus hallmhd_solve_stream(size_t nr,
                                        size_t nz,
                                        double r_max,
                                        double z_half,
                                        const double *omega,
                                        double tol,
                                        size_t max_iter,
                                        double *phi,
                                        double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HALLMHD_H */
