#ifndef EDGEVERSE_H
#define EDGEVERSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EvStatus {
  EV_STATUS_OK = 0,
  EV_STATUS_INVALID_ARGUMENT = 1,
  EV_STATUS_PARSE = 2,
  EV_STATUS_VALIDATION = 3,
  EV_STATUS_CAPACITY = 4,
  EV_STATUS_SOLVER_FAILURE = 5,
  EV_STATUS_USAGE = 6,
  EV_STATUS_IO = 7,
  EV_STATUS_NULL_POINTER = 8,
  EV_STATUS_BUFFER_TOO_SMALL = 9,
  EV_STATUS_PANIC = 10,
} EvStatus;

typedef enum EvStrategy {
  EV_STRATEGY_OPTIMAL_LATENCY_EARNING = 0,
  EV_STRATEGY_OPTIMAL_EARNING = 1,
  EV_STRATEGY_OPTIMAL_LATENCY = 2,
  EV_STRATEGY_RANDOM = 3,
} EvStrategy;

// Opaque scenario handle.
typedef struct EvScenario EvScenario;

// Opaque solve result handle.
typedef struct EvSolveResult EvSolveResult;

// Generator overrides. A NaN field keeps the generator default; a range
// applies only when neither end is NaN.
typedef struct EvOverrides {
  double uplink_min;
  double uplink_max;
  double downlink_min;
  double downlink_max;
  double compute_demand_min;
  double compute_demand_max;
  double uplink_size;
  double compute_capacity;
  double d_min;
  double d_max;
  double omega;
  double alpha;
  double beta;
  bool per_user_rates;
} EvOverrides;

typedef struct EvSolveOptions {
  uint32_t max_iters;
  double tol;
  uint64_t seed;
  uint32_t samples;
  uint32_t sdr_size_cap;
  bool subsample;
  bool allow_fallback;
} EvSolveOptions;

typedef struct EvMetrics {
  double total_latency;
  double total_earning;
  double utility;
  uint32_t iterations;
} EvMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *ev_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ev_version(void);

// Overrides with every field unset.
struct EvOverrides ev_overrides_default(void);

struct EvSolveOptions ev_solve_options_default(void);

// Random scenario. `overrides` may be null.
//
// # Safety
// `overrides` must be null or point to a valid `EvOverrides`; `out` must be
// a valid pointer to writable storage.
enum EvStatus ev_scenario_generate(size_t n_users,
                                   size_t n_servers,
                                   uint64_t seed,
                                   const struct EvOverrides *overrides,
                                   struct EvScenario **out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum EvStatus ev_scenario_from_json(const char *json, struct EvScenario **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum EvStatus ev_scenario_load(const char *path, struct EvScenario **out);

// # Safety
// `s` must be a live scenario handle and `path` a NUL-terminated string.
enum EvStatus ev_scenario_save(const struct EvScenario *s, const char *path);

// Number of users, or zero for a null handle.
//
// # Safety
// `s` must be null or a live scenario handle.
size_t ev_scenario_n_users(const struct EvScenario *s);

// Number of servers, or zero for a null handle.
//
// # Safety
// `s` must be null or a live scenario handle.
size_t ev_scenario_n_servers(const struct EvScenario *s);

// # Safety
// `s` must be null or a handle not yet freed.
void ev_scenario_free(struct EvScenario *s);

// Solves `s` with `strategy`. `options` may be null for defaults.
//
// # Safety
// `s` must be a live scenario handle, `options` null or valid, `out` writable.
enum EvStatus ev_solve(const struct EvScenario *s,
                       enum EvStrategy strategy,
                       const struct EvSolveOptions *options,
                       struct EvSolveResult **out);

// # Safety
// `r` must be a live result handle and `out` writable.
enum EvStatus ev_result_metrics(const struct EvSolveResult *r, struct EvMetrics *out);

// Number of users in the result.
//
// # Safety
// `r` must be null or a live result handle.
size_t ev_result_n_users(const struct EvSolveResult *r);

// Length of the utility trace (zero for strategies without one).
//
// # Safety
// `r` must be null or a live result handle.
size_t ev_result_trace_len(const struct EvSolveResult *r);

// Copies each user's server index into `buf`, which holds `len` entries.
//
// # Safety
// `r` must be a live result handle and `buf` valid for `len` writes.
enum EvStatus ev_result_assignment(const struct EvSolveResult *r, size_t *buf, size_t len);

// Copies each user's data size into `buf`.
//
// # Safety
// `r` must be a live result handle and `buf` valid for `len` writes.
enum EvStatus ev_result_plan(const struct EvSolveResult *r, double *buf, size_t len);

// Copies the utility trace into `buf`.
//
// # Safety
// `r` must be a live result handle and `buf` valid for `len` writes.
enum EvStatus ev_result_trace(const struct EvSolveResult *r, double *buf, size_t len);

// # Safety
// `r` must be null or a handle not yet freed.
void ev_result_free(struct EvSolveResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGEVERSE_H */
