#ifndef MARRIAGE_OC_H
#define MARRIAGE_OC_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Trajectory columns accepted by [`moc_result_copy_column`].
 */
#define MOC_COLUMN_T 0

#define MOC_COLUMN_X1 1

#define MOC_COLUMN_X2 2

#define MOC_COLUMN_LAMBDA1 3

#define MOC_COLUMN_LAMBDA2 4

#define MOC_COLUMN_U1 5

#define MOC_COLUMN_U2 6

typedef enum {
  MOC_STATUS_OK = 0,
  MOC_STATUS_NULL_POINTER = 1,
  MOC_STATUS_INVALID_ARGUMENT = 2,
  MOC_STATUS_DIVERGED = 3,
  MOC_STATUS_BUFFER_TOO_SMALL = 4,
  MOC_STATUS_PANIC = 5,
} MocStatus;

typedef enum {
  MOC_STYLE_CONFLICT_AVOIDING = 0,
  MOC_STYLE_VALIDATING = 1,
  MOC_STYLE_MIXED = 2,
} MocStyle;

typedef enum {
  MOC_CLASSIFICATION_SADDLE = 0,
  MOC_CLASSIFICATION_UNSTABLE_NODE = 1,
  MOC_CLASSIFICATION_UNSTABLE_SPIRAL = 2,
  MOC_CLASSIFICATION_DEGENERATE = 3,
} MocClassification;

/**
 * Opaque solved trajectory with its diagnostics.
 */
typedef struct MocResult MocResult;

typedef struct {
  size_t n_steps;
  double tolerance;
  double relaxation;
  size_t max_iters;
} MocSolverConfig;

/**
 * Model constants. `epsilon` is ignored when `epsilon_infinite` is set.
 */
typedef struct {
  double r1;
  double r2;
  double xbar1;
  double xbar2;
  double alpha;
  double epsilon;
  bool epsilon_infinite;
  double u0;
  double u1max;
  double u2max;
  double horizon;
  double x1_0;
  double x2_0;
} MocParams;

typedef struct {
  MocClassification classification;
  double mu_plus_re;
  double mu_plus_im;
  double mu_minus_re;
  double mu_minus_im;
  /**
   * False when the fixed point is at infinity.
   */
  bool has_point;
  double lambda1;
  double lambda2;
} MocEquilibrium;

typedef struct {
  bool u1_singular_capable;
  bool u2_singular_capable;
  bool u2_singular_capable_literal;
} MocSingularity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *moc_version(void);

/**
 * Message of the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *moc_last_error_message(void);

/**
 * Fills `out` with the default sweep settings.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one `MocSolverConfig`.
 */
MocStatus moc_solver_config_default(MocSolverConfig *out);

/**
 * Checks every parameter constraint.
 *
 * # Safety
 * `params` must be NULL or point to a valid `MocParams`.
 */
MocStatus moc_params_validate(const MocParams *params);

/**
 * Solves with the forward-backward sweep. On success `*out` owns a new
 * handle; running out of iterations is still a success with
 * `moc_result_converged` false.
 *
 * # Safety
 * `params` and `config` must point to valid structs and `out` to writable
 * storage for one pointer. `config` may be NULL for the defaults.
 */
MocStatus moc_solve(const MocParams *params, const MocSolverConfig *config, MocResult **out);

/**
 * Assembles the small-epsilon expansion of order 0 or 1 on `n_steps`
 * intervals. The handle reports `converged` true and zero iterations.
 *
 * # Safety
 * As for [`moc_solve`].
 */
MocStatus moc_perturb(const MocParams *params, size_t n_steps, int32_t order, MocResult **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `result` must be NULL or a handle from this library not yet freed.
 */
void moc_result_free(MocResult *result);

/**
 * Number of grid nodes, 0 for NULL.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
size_t moc_result_len(const MocResult *result);

/**
 * # Safety
 * `result` must be NULL or a live handle.
 */
bool moc_result_converged(const MocResult *result);

/**
 * # Safety
 * `result` must be NULL or a live handle.
 */
size_t moc_result_iterations(const MocResult *result);

/**
 * Payoff of the trajectory; NaN for NULL.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
double moc_result_objective(const MocResult *result);

/**
 * Copies one column (`MOC_COLUMN_*`) into `buf`, which must hold at least
 * `moc_result_len` values.
 *
 * # Safety
 * `result` must be a live handle and `buf` must point to `len` writable
 * doubles.
 */
MocStatus moc_result_copy_column(const MocResult *result, int32_t column, double *buf, size_t len);

/**
 * Interaction style of each spouse with the default thresholds.
 *
 * # Safety
 * `result` must be a live handle, `params` a valid struct and both outputs
 * writable.
 */
MocStatus moc_result_styles(const MocResult *result,
                            const MocParams *params,
                            MocStyle *spouse1,
                            MocStyle *spouse2);

/**
 * Fixed point and eigenvalues of the adjoint system for frozen controls.
 *
 * # Safety
 * `params` must point to a valid struct and `out` to writable memory.
 */
MocStatus moc_classify_equilibrium(const MocParams *params,
                                   double u1,
                                   double u2,
                                   MocEquilibrium *out);

/**
 * Singular-control conditions at the default tolerance.
 *
 * # Safety
 * `params` must point to a valid struct and `out` to writable memory.
 */
MocStatus moc_singularity(const MocParams *params, MocSingularity *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARRIAGE_OC_H */
