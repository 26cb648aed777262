#ifndef REFRACT_H
#define REFRACT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RefractStatus {
  REFRACT_STATUS_OK = 0,
  REFRACT_STATUS_NULL_POINTER = 1,
  REFRACT_STATUS_INVALID_ARGUMENT = 2,
  REFRACT_STATUS_CONFIG_ERROR = 3,
  REFRACT_STATUS_ASSUMPTION_VIOLATED = 4,
  REFRACT_STATUS_NUMERICAL_FAILURE = 5,
  REFRACT_STATUS_PANIC = 6,
} RefractStatus;

/**
 * Opaque solved problem.
 */
typedef struct RefractSolution RefractSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *refract_last_error(void);

/**
 * Parses a TOML problem configuration and solves it.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RefractStatus refract_solve_toml(const char *config_toml, struct RefractSolution **out);

/**
 * Releases a solution. NULL is ignored.
 *
 * # Safety
 * `solution` must come from [`refract_solve_toml`] and not be used afterwards.
 */
void refract_solution_free(struct RefractSolution *solution);

/**
 * Number of stages `N`, or 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live handle.
 */
uintptr_t refract_solution_stages(const struct RefractSolution *solution);

/**
 * Threshold of stage `stage` (1-based).
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum RefractStatus refract_solution_threshold(const struct RefractSolution *solution,
                                              uintptr_t stage,
                                              double *out);

/**
 * Value function of stage `stage` (1-based) at log-price `x`.
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum RefractStatus refract_solution_evaluate(const struct RefractSolution *solution,
                                             uintptr_t stage,
                                             double x,
                                             double *out);

/**
 * Seconds spent on the roots and on the recursion.
 *
 * # Safety
 * `solution` must be a live handle; the output pointers must be valid.
 */
enum RefractStatus refract_solution_timings(const struct RefractSolution *solution,
                                            double *root_phase,
                                            double *recursion_phase);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REFRACT_H */
