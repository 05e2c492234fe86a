#ifndef ROBUST_AGG_H
#define ROBUST_AGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every call.
typedef enum RaStatus {
  RA_STATUS_OK = 0,
  RA_STATUS_NULL_POINTER = 1,
  RA_STATUS_INVALID_UTF8 = 2,
  RA_STATUS_PARSE = 3,
  RA_STATUS_INVALID_SCENARIO = 4,
  RA_STATUS_INVALID_RULE = 5,
  RA_STATUS_SIZE_MISMATCH = 6,
  RA_STATUS_SIZE_CAP = 7,
  RA_STATUS_SOLVER = 8,
  RA_STATUS_PANIC = 9,
} RaStatus;

// Opaque aggregation rule.
typedef struct RaRule RaRule;

// Opaque binary scenario.
typedef struct RaScenario RaScenario;

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *ra_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void ra_string_free(char *s);

// Scenario from prior `mu`, posteriors `p1 < 1/2 < p2` and `n` agents.
//
// # Safety
// String arguments must be valid NUL-terminated strings; `out` must be writable.
enum RaStatus ra_scenario_new(const char *mu,
                              const char *p1,
                              const char *p2,
                              size_t n,
                              struct RaScenario **out);

// Scenario from prior `mu` and the conditional means `a < b`.
//
// # Safety
// As [`ra_scenario_new`].
enum RaStatus ra_scenario_from_conditionals(const char *mu,
                                            const char *a,
                                            const char *b,
                                            size_t n,
                                            struct RaScenario **out);

// As [`ra_scenario_new`], taking the exact binary value of each double.
//
// # Safety
// `out` must be writable.
enum RaStatus ra_scenario_new_f64(double mu,
                                  double p1,
                                  double p2,
                                  size_t n,
                                  struct RaScenario **out);

// # Safety
// `s` must come from this library and not be freed twice. Null is ignored.
void ra_scenario_free(struct RaScenario *s);

// Agent count, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live handle.
size_t ra_scenario_n(const struct RaScenario *s);

// Probability of a high signal in state 0 (`a`) and state 1 (`b`).
//
// # Safety
// `s` must be a live handle; `a` and `b` must be writable.
enum RaStatus ra_scenario_conditionals(const struct RaScenario *s, char **a, char **b);

// # Safety
// `out` must be writable.
enum RaStatus ra_rule_identity(size_t n, struct RaRule **out);

// Deterministic rule guessing 1 iff the high fraction is at least `tau`.
//
// # Safety
// `tau` must be a valid string; `out` must be writable.
enum RaStatus ra_rule_threshold(size_t n, const char *tau, struct RaRule **out);

// Rule with `values[k] = f(k/n)` for `k = 0..len`, so `n = len - 1`.
//
// # Safety
// `values` must point to `len` valid strings; `out` must be writable.
enum RaStatus ra_rule_from_values(const char *const *values, size_t len, struct RaRule **out);

// As [`ra_rule_from_values`], taking the exact binary value of each double.
//
// # Safety
// `values` must point to `len` doubles; `out` must be writable.
enum RaStatus ra_rule_from_f64(const double *values, size_t len, struct RaRule **out);

// # Safety
// `r` must come from this library and not be freed twice. Null is ignored.
void ra_rule_free(struct RaRule *r);

// Agent count of the rule, or 0 for a null handle.
//
// # Safety
// `r` must be null or a live handle.
size_t ra_rule_n(const struct RaRule *r);

// `f(k/n)`.
//
// # Safety
// `r` must be a live handle; `out` must be writable.
enum RaStatus ra_rule_value(const struct RaRule *r, size_t k, char **out);

// Worst-case regret of the rule over all information structures.
//
// # Safety
// Handles must be live; `out` must be writable.
enum RaStatus ra_worst_case_regret(const struct RaScenario *s, const struct RaRule *r, char **out);

// # Safety
// As [`ra_worst_case_regret`].
enum RaStatus ra_worst_case_regret_f64(const struct RaScenario *s,
                                       const struct RaRule *r,
                                       double *out);

// Worst-case success probability of the rule.
//
// # Safety
// As [`ra_worst_case_regret`].
enum RaStatus ra_minimax_value(const struct RaScenario *s, const struct RaRule *r, char **out);

// Approximation ratio to within `tol` below; a null `tol` means 1e-9.
//
// # Safety
// Handles must be live; `tol` null or a valid string; `out` writable.
enum RaStatus ra_approx_ratio(const struct RaScenario *s,
                              const struct RaRule *r,
                              const char *tol,
                              char **out);

// Regret-optimal rule and its regret. Either output may be null to skip it.
//
// # Safety
// `s` must be a live handle; non-null outputs must be writable.
enum RaStatus ra_optimal_rule(const struct RaScenario *s,
                              struct RaRule **rule_out,
                              char **regret_out);

// Optimal regret as a double.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum RaStatus ra_optimal_regret_f64(const struct RaScenario *s, double *out);

// Random-dictator check: whether the scenario is in the regime, whether
// every asserted check held, and the optimal regret.
//
// # Safety
// `s` must be a live handle; outputs must be writable.
enum RaStatus ra_verify_dictator(const struct RaScenario *s,
                                 bool *in_region,
                                 bool *passed,
                                 char **regret_out);

// Closed-form two-agent optimum under a uniform prior.
//
// # Safety
// Strings must be valid; outputs must be writable.
enum RaStatus ra_two_agent(const char *a,
                           const char *b,
                           uint8_t *case_out,
                           char **f_half_out,
                           char **regret_out);

#endif  /* ROBUST_AGG_H */
