#ifndef FRAMETIME_H
#define FRAMETIME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FtAlgo {
  FT_ALGO_RLS = 0,
  FT_ALGO_DCD_RLS = 1,
} FtAlgo;

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_ARGUMENT = 2,
  FT_STATUS_DOMAIN = 3,
  FT_STATUS_DIMENSION = 4,
  FT_STATUS_NON_FINITE = 5,
  FT_STATUS_DEGENERATE = 6,
  FT_STATUS_PANIC = 7,
  FT_STATUS_OTHER = 8,
} FtStatus;

typedef enum FtSensitivityMethod {
  FT_SENSITIVITY_METHOD_TWO_POINT = 0,
  FT_SENSITIVITY_METHOD_LAGRANGE3 = 1,
} FtSensitivityMethod;

/**
 * Opaque model handle.
 */
typedef struct FtModel FtModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ft_last_error_message(void);

/**
 * Arithmetic operations per update for `m` regressors.
 */
uintptr_t ft_op_count(uintptr_t m, enum FtAlgo algo);

/**
 * RLS model over `counters` selected counters with default settings.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum FtStatus ft_model_new_rls(uintptr_t counters, struct FtModel **out);

/**
 * DCD-RLS model. `nu` coordinate updates per sample, `mb` amplitude levels
 * starting at `h_amp`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum FtStatus ft_model_new_dcd(uintptr_t counters,
                               uintptr_t nu,
                               uint32_t mb,
                               double h_amp,
                               struct FtModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ft_model_free(struct FtModel *model);

/**
 * Number of regressors, two frequency terms plus the counters.
 *
 * # Safety
 * `model` must be a live handle.
 */
uintptr_t ft_model_dim(const struct FtModel *model);

/**
 * Copies the coefficients in raw units into `out`, which must hold at
 * least [`ft_model_dim`] values.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for `len` writes.
 */
enum FtStatus ft_model_coefficients(const struct FtModel *model, double *out, uintptr_t len);

/**
 * Feeds raw counter values to the scale calibration window.
 *
 * # Safety
 * `counters` must be valid for `len` reads.
 */
enum FtStatus ft_model_calibrate(struct FtModel *model, const double *counters, uintptr_t len);

/**
 * Predicted frame time for the interval that starts at `cur_freq`.
 *
 * # Safety
 * `deltas` must be valid for `len` reads and `out` for one write.
 */
enum FtStatus ft_model_predict(const struct FtModel *model,
                               double prev_frame_time,
                               double prev_freq,
                               double cur_freq,
                               const double *deltas,
                               uintptr_t len,
                               double *out);

/**
 * Learns from the realized frame time of the interval.
 *
 * # Safety
 * `deltas` must be valid for `len` reads.
 */
enum FtStatus ft_model_update(struct FtModel *model,
                              double prev_frame_time,
                              double prev_freq,
                              double cur_freq,
                              const double *deltas,
                              uintptr_t len,
                              double actual_frame_time);

/**
 * Predicted frame-time change when moving from `f_k` to `f_new`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum FtStatus ft_model_candidate_delta(const struct FtModel *model,
                                       double frame_time,
                                       double f_k,
                                       double f_new,
                                       double *out);

/**
 * Frame-time sensitivity in ms per MHz at table frequency `f_k`.
 * `method` may be null.
 *
 * # Safety
 * `table` must be valid for `table_len` reads, `out` for one write and
 * `method` null or valid for one write.
 */
enum FtStatus ft_model_sensitivity(const struct FtModel *model,
                                   double frame_time,
                                   const double *table,
                                   uintptr_t table_len,
                                   double f_k,
                                   double *out,
                                   enum FtSensitivityMethod *method);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRAMETIME_H */
