#ifndef SMESS_H
#define SMESS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  SMESS_STATUS_OK = 0,
  /**
   * Schedule violates the model, or no feasible schedule exists.
   */
  SMESS_STATUS_VIOLATION = 1,
  /**
   * Malformed scenario, schedule or argument.
   */
  SMESS_STATUS_INPUT = 2,
  /**
   * Solver failure.
   */
  SMESS_STATUS_BACKEND = 3,
  SMESS_STATUS_NULL_POINTER = 4,
  /**
   * Rust panic caught at the boundary.
   */
  SMESS_STATUS_INTERNAL = 5,
} SmessStatus;

/**
 * Parsed scenario.
 */
typedef struct SmessScenario SmessScenario;

/**
 * Schedule returned by [`smess_solve`] or [`smess_schedule_from_json`].
 */
typedef struct SmessSchedule SmessSchedule;

/**
 * Solver settings. `backend` is 0 for HiGHS, 1 for CBC.
 */
typedef struct {
  double gap;
  double time_limit_s;
  uint32_t backend;
} SmessSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the
 * library; valid until the next failing call on the same thread.
 */
const char *smess_last_error(void);

/**
 * Library version as a static string.
 */
const char *smess_version(void);

/**
 * Parse a scenario document. On success `*out` owns a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
SmessStatus smess_scenario_parse(const char *json, SmessScenario **out);

/**
 * # Safety
 * `scenario` must come from [`smess_scenario_parse`] or be null.
 */
void smess_scenario_free(SmessScenario *scenario);

/**
 * Select the case variant, 1 to 5.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
SmessStatus smess_scenario_set_case(SmessScenario *scenario, uint32_t case_);

/**
 * Default solver settings.
 */
SmessSolveOptions smess_solve_options_default(void);

/**
 * Build and solve the scenario. On `SMESS_STATUS_OK`, `*schedule` owns a
 * new handle and `*objective` holds the incumbent value. Returns
 * `SMESS_STATUS_VIOLATION` with `*schedule` null when no schedule exists.
 *
 * # Safety
 * `scenario` must be a live handle; `schedule` and `objective` valid pointers.
 */
SmessStatus smess_solve(const SmessScenario *scenario,
                        SmessSolveOptions options,
                        SmessSchedule **schedule,
                        double *objective);

/**
 * # Safety
 * `schedule` must come from this library or be null.
 */
void smess_schedule_free(SmessSchedule *schedule);

/**
 * Schedule as JSON; release with [`smess_string_free`]. Null on failure.
 *
 * # Safety
 * `schedule` must be a live handle.
 */
char *smess_schedule_to_json(const SmessSchedule *schedule);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
SmessStatus smess_schedule_from_json(const char *json, SmessSchedule **out);

/**
 * Check `schedule` against `scenario`. Returns `SMESS_STATUS_OK` when no
 * constraint is violated beyond `tolerance`, `SMESS_STATUS_VIOLATION`
 * otherwise; `*violations` receives the count.
 *
 * # Safety
 * Handles must be live; `violations` a valid pointer.
 */
SmessStatus smess_validate(const SmessScenario *scenario,
                           const SmessSchedule *schedule,
                           double tolerance,
                           uintptr_t *violations);

/**
 * Objective of `schedule` recomputed from the scenario.
 *
 * # Safety
 * Handles must be live; `objective` a valid pointer.
 */
SmessStatus smess_objective(const SmessScenario *scenario,
                            const SmessSchedule *schedule,
                            double *objective);

/**
 * Exhaustive optimum of a tiny scenario. Returns `SMESS_STATUS_VIOLATION`
 * when the scenario has no feasible schedule.
 *
 * # Safety
 * `scenario` must be a live handle; `objective` a valid pointer.
 */
SmessStatus smess_oracle(const SmessScenario *scenario, double *objective);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void smess_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMESS_H */
