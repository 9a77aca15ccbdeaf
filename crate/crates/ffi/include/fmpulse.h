#ifndef FMPULSE_H
#define FMPULSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_UTF8 = 2,
  FM_STATUS_DOMAIN = 3,
  FM_STATUS_PARSE = 4,
  FM_STATUS_INVALID_STEPS = 5,
  FM_STATUS_SINGULARITY = 6,
  FM_STATUS_CONFIG = 7,
  FM_STATUS_NO_CONVERGENCE = 8,
  FM_STATUS_NOT_FOUND = 9,
  FM_STATUS_OUT_OF_RANGE = 10,
  FM_STATUS_PANIC = 11,
} FmStatus;

/**
 * Opaque pulse handle.
 */
typedef struct FmPulse FmPulse;

/**
 * Opaque trajectory handle.
 */
typedef struct FmTrajectory FmTrajectory;

/**
 * One trajectory sample.
 */
typedef struct FmSample {
  double t;
  double psi;
  double theta;
  double varphi;
  double ax;
  double ay;
  double az;
} FmSample;

/**
 * All residuals of one trajectory.
 */
typedef struct FmResiduals {
  double eta11;
  double eta12;
  double eta13;
  double eta21;
  double eta22;
  double eta23;
  double eta24;
  double eta25;
  double eta26;
  double bc_psi;
  double bc_theta;
} FmResiduals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *fm_last_error(void);

/**
 * Static description of a status code.
 */
const char *fm_status_str(enum FmStatus status);

/**
 * Flat pulse with no phase coefficients.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum FmStatus fm_pulse_new(double chi, double v0, struct FmPulse **out);

/**
 * Built-in published pulse, looked up case-insensitively.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` as for [`fm_pulse_new`].
 */
enum FmStatus fm_pulse_builtin(const char *name, struct FmPulse **out);

/**
 * Parses pulse-file text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` as for [`fm_pulse_new`].
 */
enum FmStatus fm_pulse_parse(const char *text, struct FmPulse **out);

/**
 * Serializes a pulse; release the string with [`fm_string_free`].
 *
 * # Safety
 * `pulse` must be a live handle and `out` a writable pointer.
 */
enum FmStatus fm_pulse_serialize(const struct FmPulse *pulse, char **out);

/**
 * # Safety
 * `pulse` must be a live handle.
 */
enum FmStatus fm_pulse_set_coeff(struct FmPulse *pulse, size_t index, double value);

/**
 * `b_index`, zero when absent or when `pulse` is null.
 *
 * # Safety
 * `pulse` must be null or a live handle.
 */
double fm_pulse_coeff(const struct FmPulse *pulse, size_t index);

/**
 * # Safety
 * `pulse` must be null or a live handle.
 */
double fm_pulse_v0(const struct FmPulse *pulse);

/**
 * # Safety
 * `pulse` must be null or a live handle.
 */
double fm_pulse_chi(const struct FmPulse *pulse);

/**
 * # Safety
 * `pulse` must be null or a handle not yet freed.
 */
void fm_pulse_free(struct FmPulse *pulse);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void fm_string_free(char *s);

/**
 * Integrates the rotation with `steps` uniform RK4 steps.
 *
 * # Safety
 * `pulse` must be a live handle and `out` a writable pointer.
 */
enum FmStatus fm_propagate(const struct FmPulse *pulse, size_t steps, struct FmTrajectory **out);

/**
 * Number of samples, `steps + 1`; zero for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t fm_trajectory_len(const struct FmTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle and `out` a writable pointer.
 */
enum FmStatus fm_trajectory_sample(const struct FmTrajectory *traj,
                                   size_t index,
                                   struct FmSample *out);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void fm_trajectory_free(struct FmTrajectory *traj);

/**
 * Every condition and boundary residual of a trajectory.
 *
 * # Safety
 * `traj` must be a live handle and `out` a writable pointer.
 */
enum FmStatus fm_evaluate(const struct FmTrajectory *traj, struct FmResiduals *out);

/**
 * Max-norm over the residuals that apply at `order` (1 or 2).
 *
 * # Safety
 * `res` must be null or point to a valid struct.
 */
double fm_residuals_max_abs(const struct FmResiduals *res, uint8_t order);

/**
 * Multi-start solve from the published pulses plus `random_seeds` random
 * starts. Writes the best pulse to `out` even when it did not converge, in
 * which case the status is `NoConvergence`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum FmStatus fm_solve(uint8_t order,
                       double chi,
                       size_t grid,
                       double tol,
                       size_t random_seeds,
                       uint64_t rng_seed,
                       struct FmPulse **out);

/**
 * `d(U_c)` for a pulse of duration `tau` on the default one-spin bath with
 * coupling `lambda`.
 *
 * # Safety
 * `pulse` must be a live handle and `out` a writable pointer.
 */
enum FmStatus fm_correction_error(const struct FmPulse *pulse,
                                  double lambda,
                                  double tau,
                                  size_t steps,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FMPULSE_H */
