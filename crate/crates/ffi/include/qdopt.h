#ifndef QDOPT_H
#define QDOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QdoptStatus {
  QDOPT_STATUS_OK = 0,
  QDOPT_STATUS_INVALID_ARGUMENT = 1,
  QDOPT_STATUS_BUDGET_EXHAUSTED = 2,
  QDOPT_STATUS_DIMENSION_MISMATCH = 3,
  QDOPT_STATUS_IO = 4,
  QDOPT_STATUS_NULL_POINTER = 5,
  QDOPT_STATUS_PANIC = 6,
} QdoptStatus;

/**
 * A benchmark function with an evaluation budget.
 */
typedef struct QdoptObjective QdoptObjective;

/**
 * The result of one optimization trial.
 */
typedef struct QdoptOutcome QdoptOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *qdopt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qdopt_version(void);

/**
 * `min(1, amplitude * exp(-delta_x * sqrt(delta_f) / gamma))`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum QdoptStatus qdopt_tunneling_probability(double delta_f,
                                             double delta_x,
                                             double gamma,
                                             double amplitude,
                                             double *out);

/**
 * Creates an objective for `function` ("F1".."F12", "double_well", "paraboloid").
 *
 * # Safety
 * `function` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QdoptStatus qdopt_objective_new(const char *function,
                                     size_t dim,
                                     uint64_t max_fes,
                                     struct QdoptObjective **out);

/**
 * Evaluates `x` (length `len`), spending one unit of budget.
 *
 * # Safety
 * `objective` must come from `qdopt_objective_new`, `x` must point to `len`
 * doubles and `out` must be valid.
 */
enum QdoptStatus qdopt_objective_evaluate(struct QdoptObjective *objective,
                                          const double *x,
                                          size_t len,
                                          double *out);

/**
 * Evaluations spent so far, or 0 for a null handle.
 *
 * # Safety
 * `objective` must be null or come from `qdopt_objective_new`.
 */
uint64_t qdopt_objective_evals_used(const struct QdoptObjective *objective);

/**
 * Dimension of the objective, or 0 for a null handle.
 *
 * # Safety
 * `objective` must be null or come from `qdopt_objective_new`.
 */
size_t qdopt_objective_dim(const struct QdoptObjective *objective);

/**
 * Best error `f(x_best) - f(x*)` so far, or `+inf` before any evaluation.
 *
 * # Safety
 * `objective` must be null or come from `qdopt_objective_new`.
 */
double qdopt_objective_best_error(const struct QdoptObjective *objective);

/**
 * Releases an objective. Null is ignored.
 *
 * # Safety
 * `objective` must be null or come from `qdopt_objective_new`, and not be used afterwards.
 */
void qdopt_objective_free(struct QdoptObjective *objective);

/**
 * Runs one trial of `algorithm` ("bip", "bbpso", "bbfwa", "gbde") with default settings.
 *
 * # Safety
 * `algorithm` and `function` must be NUL-terminated strings and `out` a valid pointer.
 */
enum QdoptStatus qdopt_run(const char *algorithm,
                           const char *function,
                           size_t dim,
                           uint64_t max_fes,
                           uint64_t seed,
                           struct QdoptOutcome **out);

/**
 * Runs one trial from a JSON algorithm config, in the form printed under
 * `"config"` by `qdopt run --dump-config`.
 *
 * # Safety
 * `config_json` and `function` must be NUL-terminated strings and `out` a valid pointer.
 */
enum QdoptStatus qdopt_run_json(const char *config_json,
                                const char *function,
                                size_t dim,
                                uint64_t max_fes,
                                struct QdoptOutcome **out);

/**
 * Final error of the trial, or NaN for a null handle.
 *
 * # Safety
 * `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
 */
double qdopt_outcome_final_error(const struct QdoptOutcome *outcome);

/**
 * Evaluations the trial spent, or 0 for a null handle.
 *
 * # Safety
 * `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
 */
uint64_t qdopt_outcome_evals_used(const struct QdoptOutcome *outcome);

/**
 * Whether the final error reached the success threshold.
 *
 * # Safety
 * `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
 */
bool qdopt_outcome_succeeded(const struct QdoptOutcome *outcome);

/**
 * Copies the best position into `buf` (capacity `len`, at least the dimension).
 *
 * # Safety
 * `outcome` must come from `qdopt_run`/`qdopt_run_json` and `buf` must hold `len` doubles.
 */
enum QdoptStatus qdopt_outcome_best_position(const struct QdoptOutcome *outcome,
                                             double *buf,
                                             size_t len);

/**
 * Number of points in the best-error trace, or 0 for a null handle.
 *
 * # Safety
 * `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
 */
size_t qdopt_outcome_trace_len(const struct QdoptOutcome *outcome);

/**
 * Copies the best-error trace into `evals` and `errors`, each with capacity `len`.
 *
 * # Safety
 * `outcome` must come from `qdopt_run`/`qdopt_run_json`; `evals` and `errors`
 * must each hold `len` elements.
 */
enum QdoptStatus qdopt_outcome_trace(const struct QdoptOutcome *outcome,
                                     uint64_t *evals,
                                     double *errors,
                                     size_t len);

/**
 * Releases an outcome. Null is ignored.
 *
 * # Safety
 * `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`, and not be used afterwards.
 */
void qdopt_outcome_free(struct QdoptOutcome *outcome);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDOPT_H */
