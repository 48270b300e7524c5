#ifndef EM_PLANNER_H
#define EM_PLANNER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmStatus {
  EM_STATUS_OK = 0,
  EM_STATUS_NULL_POINTER = 1,
  EM_STATUS_INVALID_UTF8 = 2,
  EM_STATUS_INVALID_SCENARIO = 3,
  EM_STATUS_INVALID_CONFIG = 4,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  EM_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * No cycle has been planned yet.
   */
  EM_STATUS_NO_TRAJECTORY = 6,
  EM_STATUS_PANIC = 7,
} EmStatus;

/**
 * Parsed and validated scenario.
 */
typedef struct EmScenario EmScenario;

/**
 * Closed loop over a scenario, advanced with [`em_simulation_step`].
 */
typedef struct EmSimulation EmSimulation;

typedef struct EmCycleSummary {
  size_t cycle;
  /**
   * Simulation time at the start of the cycle, seconds.
   */
  double time;
  /**
   * Index of the chosen lane in scenario order, or -1 on a comfort stop.
   */
  int32_t chosen_lane;
  bool fallback;
  size_t point_count;
  uint64_t plan_us;
} EmCycleSummary;

typedef struct EmTrajectoryPoint {
  /**
   * Seconds since the start of the cycle.
   */
  double t;
  double x;
  double y;
  double heading;
  double kappa;
  double v;
  double a;
} EmTrajectoryPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *em_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *em_version(void);

/**
 * Parses a scenario document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum EmStatus em_scenario_from_json(const char *json, struct EmScenario **out);

/**
 * Cycle count the scenario asks for, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t em_scenario_cycles(const struct EmScenario *scenario);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void em_scenario_free(struct EmScenario *scenario);

/**
 * Starts a closed loop. `config_toml` may be null for the defaults. The
 * simulation keeps its own copy of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle, `config_toml` null or a valid string,
 * and `out` a valid pointer.
 */
enum EmStatus em_simulation_new(const struct EmScenario *scenario,
                                const char *config_toml,
                                struct EmSimulation **out);

/**
 * Plans one cycle and advances the ego. `summary` may be null.
 *
 * # Safety
 * `sim` must be a live handle and `summary` null or valid for writes.
 */
enum EmStatus em_simulation_step(struct EmSimulation *sim, struct EmCycleSummary *summary);

/**
 * Copies the trajectory of the last planned cycle into `buffer`. On
 * `EM_STATUS_BUFFER_TOO_SMALL` nothing is copied and `written` holds the
 * required length.
 *
 * # Safety
 * `sim` must be a live handle, `buffer` valid for `capacity` writes (or
 * null when `capacity` is 0) and `written` a valid pointer.
 */
enum EmStatus em_simulation_trajectory(const struct EmSimulation *sim,
                                       struct EmTrajectoryPoint *buffer,
                                       size_t capacity,
                                       size_t *written);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void em_simulation_free(struct EmSimulation *sim);

/**
 * Runs `cycles` cycles (the scenario's own count when 0) and returns the
 * trace as a JSON string to be released with [`em_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle, `config_toml` null or a valid string,
 * and `out` a valid pointer.
 */
enum EmStatus em_run_trace_json(const struct EmScenario *scenario,
                                size_t cycles,
                                const char *config_toml,
                                char **out);

/**
 * # Safety
 * `text` must be null or a string returned by this library and not yet
 * freed.
 */
void em_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EM_PLANNER_H */
