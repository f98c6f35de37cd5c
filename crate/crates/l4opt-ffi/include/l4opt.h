#ifndef L4OPT_H
#define L4OPT_H

/* Generated by cbindgen from the l4opt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Momentum-direction flavor tag for [`L4Params::flavor`].
 */
#define L4_FLAVOR_MOM 0

/**
 * Adam-style-direction flavor tag for [`L4Params::flavor`].
 */
#define L4_FLAVOR_ADAM 1

/**
 * Status code returned by every fallible entry point.
 */
typedef enum L4Status {
  /**
   * The call succeeded.
   */
  L4_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  L4_STATUS_NULL_POINTER = 1,
  /**
   * A configuration value violates its documented range, the flavor tag
   * is unknown, or the dimension is zero.
   */
  L4_STATUS_INVALID_CONFIG = 2,
  /**
   * The loss was negative (losses must be non-negative by contract).
   */
  L4_STATUS_INVALID_LOSS = 3,
  /**
   * The loss, gradient, or updated parameter vector stopped being finite.
   */
  L4_STATUS_DIVERGED = 4,
  /**
   * The buffer length passed to `l4opt_step` does not match the dimension
   * the handle was created with.
   */
  L4_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * An internal panic was caught at the boundary; the handle is left in
   * an unspecified but memory-safe state and should be freed.
   */
  L4_STATUS_INTERNAL_PANIC = 6,
} L4Status;

/**
 * Opaque optimizer handle.
 */
typedef struct L4Handle L4Handle;

/**
 * Hyperparameters for [`l4opt_create`]. Obtain a defaults-filled value from
 * [`l4opt_params_default`] and override selectively; `alpha` is the only
 * field that normally gets touched.
 */
typedef struct L4Params {
  /**
   * Fraction of the loss gap to close per step. Default 0.15.
   */
  double alpha;
  /**
   * Fraction of the minimum-loss estimate used as the step target,
   * in (0, 1]. Default 0.9.
   */
  double gamma;
  /**
   * Fraction of the first observed loss used to initialize the
   * minimum-loss estimate, in (0, 1]. Default 0.75.
   */
  double gamma0;
  /**
   * Forgetting timescale of the minimum-loss estimate, in steps.
   * Default 1000.
   */
  double tau;
  /**
   * Additive guard in the stepsize denominator. Default 1e-12.
   */
  double epsilon;
  /**
   * Timescale of the gradient moving average. Default 10.
   */
  double tau_m;
  /**
   * Timescale of the squared-gradient moving average (Adam flavor only).
   * Default 1000.
   */
  double tau_s;
  /**
   * `L4_FLAVOR_MOM` or `L4_FLAVOR_ADAM`. Kept as a plain integer so that
   * out-of-range values arriving from C are a checkable error instead of
   * undefined behavior.
   */
  int32_t flavor;
} L4Params;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The recommended hyperparameters for the given flavor tag.
 *
 * Unknown tags yield the momentum defaults with the tag passed through, so
 * the error is surfaced (as `L4_STATUS_INVALID_CONFIG`) when the value
 * reaches [`l4opt_create`] rather than silently repaired here.
 */
struct L4Params l4opt_params_default(int32_t flavor);

/**
 * Allocate an optimizer for `dim`-dimensional parameters.
 *
 * Validates the configuration eagerly (range checks, known flavor tag,
 * `dim > 0`) and writes the new handle to `*out` on success. On any error
 * `*out` is left untouched.
 *
 * # Safety
 *
 * `params` and `out` must be valid for reads/writes of their types.
 */
enum L4Status l4opt_create(const struct L4Params *params, size_t dim, struct L4Handle **out);

/**
 * Feed one `(loss, gradient)` observation and update `theta` in place.
 *
 * `grad` and `theta` must each point to `len` doubles, and `len` must equal
 * the dimension the handle was created with. The first call initializes the
 * minimum-loss estimate from `loss` and then applies the first update with
 * the same observation.
 *
 * On `L4_STATUS_DIVERGED` the non-finite value is reported before any state
 * it would corrupt is kept: a non-finite loss or gradient leaves `theta`
 * untouched, while parameters that became non-finite during the update are
 * left in the buffer for inspection.
 *
 * # Safety
 *
 * `handle` must come from [`l4opt_create`] and not have been freed; `grad`
 * and `theta` must be valid for `len` reads (and writes, for `theta`).
 */
enum L4Status l4opt_step(struct L4Handle *handle,
                         double loss,
                         const double *grad,
                         double *theta,
                         size_t len);

/**
 * The stepsize applied by the most recent successful step, or NaN if no
 * step has succeeded yet (or `handle` is null).
 */
double l4opt_last_eta(const struct L4Handle *handle);

/**
 * The `g.v` inner product of the most recent successful step (non-negative
 * by construction), or NaN if no step has succeeded yet (or `handle` is
 * null).
 */
double l4opt_last_gv(const struct L4Handle *handle);

/**
 * The current minimum-loss estimate, or NaN before the first step (or if
 * `handle` is null).
 */
double l4opt_lmin(const struct L4Handle *handle);

/**
 * Number of successful parameter updates performed, 0 for a null handle.
 */
uint64_t l4opt_steps(const struct L4Handle *handle);

/**
 * Release a handle. Null is accepted and ignored.
 *
 * # Safety
 *
 * `handle` must come from [`l4opt_create`] and must not be used afterwards.
 */
void l4opt_free(struct L4Handle *handle);

/**
 * A static, null-terminated description of a status code. Accepts the raw
 * integer so that any value coming back from the API (or an arbitrary int)
 * can be looked up safely; unknown values yield `"unknown status"`.
 */
const char *l4opt_status_message(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L4OPT_H */
