#ifndef SSCN_H
#define SSCN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SscnStatus {
  SSCN_STATUS_OK = 0,
  SSCN_STATUS_NULL_POINTER = 1,
  SSCN_STATUS_INVALID_ARGUMENT = 2,
  SSCN_STATUS_PARSE = 3,
  SSCN_STATUS_IO = 4,
  SSCN_STATUS_NUMERICAL = 5,
  SSCN_STATUS_DIVERGED = 6,
  SSCN_STATUS_PANIC = 7,
} SscnStatus;

/**
 * Curvature choice for [`SscnRunOptions`].
 */
typedef enum SscnCurvature {
  SSCN_CURVATURE_EXACT = 0,
  SSCN_CURVATURE_ZERO = 1,
  SSCN_CURVATURE_FINITE_DIFFERENCE = 2,
} SscnCurvature;

/**
 * Why a run stopped.
 */
typedef enum SscnTermination {
  SSCN_TERMINATION_GRAD_TOL = 0,
  SSCN_TERMINATION_MAX_ITERS = 1,
  SSCN_TERMINATION_MAX_TIME = 2,
} SscnTermination;

/**
 * Opaque LIBSVM dataset.
 */
typedef struct SscnDataset SscnDataset;

/**
 * Opaque objective.
 */
typedef struct SscnObjective SscnObjective;

/**
 * Opaque run trace.
 */
typedef struct SscnTrace SscnTrace;

/**
 * Options for [`sscn_run`]. Start from [`sscn_run_options_default`].
 */
typedef struct SscnRunOptions {
  /**
   * Coordinates per iteration; 0 means all of them.
   */
  size_t tau;
  /**
   * Fixed regularization when positive; otherwise adaptive doubling from `m0`.
   */
  double fixed_m;
  double m0;
  enum SscnCurvature curvature;
  double grad_tol;
  size_t max_iters;
  /**
   * Wall-clock budget in seconds; 0 disables it.
   */
  double max_seconds;
  uint64_t seed;
  size_t full_grad_every;
} SscnRunOptions;

/**
 * One row of a trace. `full_grad_norm` is NaN when not evaluated.
 */
typedef struct SscnRecord {
  size_t k;
  size_t tau;
  double f;
  double grad_subset_norm;
  double full_grad_norm;
  double step_norm;
  double m;
  uint64_t coord_cost;
  uint64_t cum_coord_cost;
  double elapsed_s;
  size_t m_retries;
} SscnRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *sscn_last_error_message(void);

/**
 * Parses LIBSVM text. `n_features` 0 infers the width from the data.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SscnStatus sscn_dataset_parse(const char *text, size_t n_features, struct SscnDataset **out);

/**
 * Loads a LIBSVM file. `n_features` 0 infers the width from the data.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SscnStatus sscn_dataset_load(const char *path, size_t n_features, struct SscnDataset **out);

/**
 * Sizes of a dataset. Any output pointer may be NULL.
 *
 * # Safety
 * `ds` must come from this library; non-null outputs must be valid.
 */
enum SscnStatus sscn_dataset_stats(const struct SscnDataset *ds,
                                   size_t *n_samples,
                                   size_t *n_features,
                                   size_t *nnz);

/**
 * # Safety
 * `ds` must be NULL or come from this library and not be used afterwards.
 */
void sscn_dataset_free(struct SscnDataset *ds);

/**
 * L2-regularized logistic loss over a copy of `ds`. `normalize` nonzero
 * divides the loss by the sample count.
 *
 * # Safety
 * `ds` must come from this library and `out` be a valid pointer.
 */
enum SscnStatus sscn_objective_logistic_new(const struct SscnDataset *ds,
                                            double lambda,
                                            int normalize,
                                            struct SscnObjective **out);

/**
 * `½xᵀAx + bᵀx` with `A` given row-major as `n × n` and symmetrized.
 *
 * # Safety
 * `a` must hold `n*n` values, `b` `n` values and `out` be a valid pointer.
 */
enum SscnStatus sscn_objective_quadratic_new(const double *a,
                                             const double *b,
                                             size_t n,
                                             struct SscnObjective **out);

/**
 * # Safety
 * `obj` must be NULL or come from this library and not be used afterwards.
 */
void sscn_objective_free(struct SscnObjective *obj);

/**
 * Dimension of `obj`, or 0 when `obj` is NULL.
 *
 * # Safety
 * `obj` must be NULL or come from this library.
 */
size_t sscn_objective_dim(const struct SscnObjective *obj);

/**
 * # Safety
 * `x` must hold `n` values and `out` be a valid pointer.
 */
enum SscnStatus sscn_objective_value(const struct SscnObjective *obj,
                                     const double *x,
                                     size_t n,
                                     double *out);

/**
 * Writes the full gradient into `grad`.
 *
 * # Safety
 * `x` and `grad` must each hold `n` values.
 */
enum SscnStatus sscn_objective_gradient(const struct SscnObjective *obj,
                                        const double *x,
                                        size_t n,
                                        double *grad);

/**
 * Global minimizer of `⟨g,h⟩ + ½⟨Qh,h⟩ + (M/6)‖h‖³` with `Q` row-major
 * `tau × tau`. Writes the step to `h` and the model value to `model_value`
 * (which may be NULL).
 *
 * # Safety
 * `g` and `h` must hold `tau` values, `q` `tau*tau` values.
 */
enum SscnStatus sscn_solve_cubic(const double *g,
                                 const double *q,
                                 size_t tau,
                                 double m,
                                 double tol,
                                 double *h,
                                 double *model_value);

struct SscnRunOptions sscn_run_options_default(void);

/**
 * Runs the optimizer from `x0`. `options` NULL uses the defaults.
 *
 * # Safety
 * `obj` must come from this library, `x0` hold `n` values, `options` be
 * NULL or valid and `out` be a valid pointer.
 */
enum SscnStatus sscn_run(const struct SscnObjective *obj,
                         const double *x0,
                         size_t n,
                         const struct SscnRunOptions *options,
                         struct SscnTrace **out);

/**
 * # Safety
 * `trace` must be NULL or come from this library and not be used afterwards.
 */
void sscn_trace_free(struct SscnTrace *trace);

/**
 * Number of records, or 0 when `trace` is NULL.
 *
 * # Safety
 * `trace` must be NULL or come from this library.
 */
size_t sscn_trace_len(const struct SscnTrace *trace);

/**
 * # Safety
 * `trace` must come from this library and `out` be a valid pointer.
 */
enum SscnStatus sscn_trace_record(const struct SscnTrace *trace,
                                  size_t index,
                                  struct SscnRecord *out);

/**
 * Copies the final iterate into `x`, which must hold exactly the problem dimension.
 *
 * # Safety
 * `trace` must come from this library and `x` hold `n` values.
 */
enum SscnStatus sscn_trace_final_x(const struct SscnTrace *trace, double *x, size_t n);

/**
 * # Safety
 * `trace` must come from this library and `out` be a valid pointer.
 */
enum SscnStatus sscn_trace_termination(const struct SscnTrace *trace, enum SscnTermination *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSCN_H */
