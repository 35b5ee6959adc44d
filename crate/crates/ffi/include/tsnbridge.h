#ifndef TSNBRIDGE_H
#define TSNBRIDGE_H

#pragma once

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsnStatus {
  TSN_STATUS_OK = 0,
  TSN_STATUS_NULL_ARGUMENT = 1,
  TSN_STATUS_INVALID_UTF8 = 2,
  TSN_STATUS_PARSE = 3,
  TSN_STATUS_VALIDATION = 4,
  TSN_STATUS_ADMISSION = 5,
  TSN_STATUS_RUNTIME = 6,
  TSN_STATUS_IO = 7,
  TSN_STATUS_PANIC = 8,
} TsnStatus;

/**
 * Traces and summary of one simulation run.
 */
typedef struct TsnRun TsnRun;

/**
 * A scenario description.
 */
typedef struct TsnScenario TsnScenario;

/**
 * Bridge delay bounds in nanoseconds.
 */
typedef struct TsnBounds {
  uint64_t min_ns;
  uint64_t max_ns;
} TsnBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *tsn_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void tsn_string_free(char *s);

/**
 * Creates a built-in scenario (`periodic` or `heterogeneous`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsnStatus tsn_scenario_preset(const char *name, struct TsnScenario **out);

/**
 * Parses a scenario from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsnStatus tsn_scenario_from_json(const char *json, struct TsnScenario **out);

/**
 * Serializes the scenario to JSON.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum TsnStatus tsn_scenario_to_json(const struct TsnScenario *s, char **out);

/**
 * Replaces the scheduler, e.g. `gf_static:20` or
 * `gf_adaptive+dynamic:max_ci`.
 *
 * # Safety
 * `s` must be a live scenario handle and `spec` a NUL-terminated string.
 */
enum TsnStatus tsn_scenario_set_scheduler(struct TsnScenario *s, const char *spec);

/**
 * Validates the scenario. `report_json` (which may be null) receives the
 * full error and warning list; the status is `Validation` when there are
 * errors.
 *
 * # Safety
 * `s` must be a live scenario handle; `report_json` is null or valid.
 */
enum TsnStatus tsn_scenario_validate(const struct TsnScenario *s, char **report_json);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void tsn_scenario_free(struct TsnScenario *s);

/**
 * Simulates the scenario with one seed.
 *
 * # Safety
 * `s` must be a live scenario handle and `out` a valid pointer.
 */
enum TsnStatus tsn_run(const struct TsnScenario *s, uint64_t seed, struct TsnRun **out);

/**
 * Number of frame records of a run; zero for a null handle.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
uintptr_t tsn_run_frame_count(const struct TsnRun *r);

/**
 * Run summary as JSON.
 *
 * # Safety
 * `r` must be a live run handle and `out` a valid pointer.
 */
enum TsnStatus tsn_run_summary_json(const struct TsnRun *r, char **out);

/**
 * Frame trace as CSV.
 *
 * # Safety
 * `r` must be a live run handle and `out` a valid pointer.
 */
enum TsnStatus tsn_run_frames_csv(const struct TsnRun *r, char **out);

/**
 * Writes the run's trace files into `dir`, as JSON when `json` is true
 * and CSV otherwise.
 *
 * # Safety
 * `r` must be a live run handle and `dir` a NUL-terminated string.
 */
enum TsnStatus tsn_run_write(const struct TsnRun *r, const char *dir, bool json);

/**
 * Releases a run. Null is ignored.
 *
 * # Safety
 * `r` must come from this library and must not be used afterwards.
 */
void tsn_run_free(struct TsnRun *r);

/**
 * Dynamic-scheduling bridge delay of a TDD pattern such as `DDDSU`.
 *
 * # Safety
 * `pattern` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsnStatus tsn_dynamic_bd(const char *pattern,
                              uint8_t mu,
                              uint64_t delta_ns,
                              bool bs_known,
                              struct TsnBounds *out);

/**
 * Grant-free bridge delay; `single_slot` selects the pinned-slot case.
 *
 * # Safety
 * `pattern` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsnStatus tsn_static_bd(const char *pattern,
                             uint8_t mu,
                             uint64_t delta_ns,
                             bool single_slot,
                             struct TsnBounds *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSNBRIDGE_H */
