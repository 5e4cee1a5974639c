#pragma once

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from the ddreach-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call that does not return a pointer.
typedef enum DdrStatus {
  // Success.
  DDR_OK = 0,
  // A required pointer argument was null.
  DDR_NULL_ARG = 1,
  // Invalid argument or model (dimension mismatch, bad support, ...).
  DDR_INVALID = 2,
  // Model text failed to parse; the message carries the line number.
  DDR_PARSE = 3,
  // The run exceeded its time budget.
  DDR_TIMEOUT = 4,
  // An internal panic was caught at the boundary.
  DDR_PANIC = 5,
} DdrStatus;

// Algorithm selector for [`ddr_run`]; pass the enum value as `uint32_t`.
typedef enum DdrAlgorithm {
  // Breadth-first fixpoint over the merged relation.
  DDR_ALG_BFS = 0,
  // Recursive fixpoint on binary diagrams.
  DDR_ALG_REACH_BDD = 1,
  // Fork-join parallel recursive fixpoint (binary diagrams).
  DDR_ALG_REACH_BDD_PAR = 2,
  // Recursive fixpoint on multi-valued diagrams.
  DDR_ALG_REACH_MDD = 3,
  // Bottom-up event saturation over the partial relations.
  DDR_ALG_SATURATION = 4,
} DdrAlgorithm;

// Opaque state set (reachability result) bound to its store.
typedef struct DdrSet DdrSet;

// Opaque diagram store: the node arena, unique table and operation cache.
typedef struct DdrStore DdrStore;

// Opaque transition system bound to the store that built it.
typedef struct DdrSystem DdrSystem;

// Instrumentation of one reachability run. `reach_calls` counts cache-miss
// entries of the recursive fixpoint; `image_calls` and `union_calls` count
// the algorithm's own invocation sites; `top_loop_iterations` includes the
// final confirming pass.
typedef struct DdrRunStats {
  uint32_t n;
  uint32_t m;
  uint32_t workers;
  uint64_t reach_calls;
  uint64_t image_calls;
  uint64_t union_calls;
  uint64_t top_loop_iterations;
  uint64_t peak_node_count;
  double wall_time_ms;
} DdrRunStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread; never free it.
const char *ddr_last_error(void);

// Library version as a static string; never free it.
const char *ddr_version(void);

// Creates a store for `vars` variables over domain `{0..domain-1}`.
// `cache_bits` sizes the operation cache at `2^cache_bits` slots; pass 0
// for the default (the DDREACH_CACHE_BITS environment variable, or 20).
// Returns null on invalid configuration. Free with [`ddr_store_free`].
struct DdrStore *ddr_store_new(uint32_t vars, uint32_t domain, uint32_t cache_bits);

// Frees a store. Systems and sets created from it must already be freed.
//
// # Safety
// `store` must be a pointer returned by [`ddr_store_new`] that has not been
// freed, or null (a no-op).
void ddr_store_free(struct DdrStore *store);

// Total nodes allocated in the store so far; 0 when `store` is null.
//
// # Safety
// `store` must be a live store pointer or null.
uint64_t ddr_store_num_nodes(const struct DdrStore *store);

// Parses model text in the .tsys format into a system bound to `store`.
// The store's dimensions must match the `vars`/`domain` header. Returns
// null on failure. Free with [`ddr_system_free`].
//
// # Safety
// `store` must be a live store pointer; `text` must be a valid
// NUL-terminated string.
struct DdrSystem *ddr_system_parse(const struct DdrStore *store, const char *text);

// Builds the n-bit binary counter model. The store needs at least `n`
// variables over domain 2. Free with [`ddr_system_free`].
//
// # Safety
// `store` must be a live store pointer.
struct DdrSystem *ddr_system_counter(const struct DdrStore *store, uint32_t n);

// Builds the dining-philosophers model with `k` seats (3k variables over
// domain 2). Free with [`ddr_system_free`].
//
// # Safety
// `store` must be a live store pointer.
struct DdrSystem *ddr_system_philosophers(const struct DdrStore *store, uint32_t k);

// Wraps a binary system in the parity guard that defeats subproblem reuse,
// adding one variable. The store must have room for it. Free with
// [`ddr_system_free`].
//
// # Safety
// `store` and `system` must be live pointers created against each other.
struct DdrSystem *ddr_system_bad_case(const struct DdrStore *store, const struct DdrSystem *system);

// Frees a system.
//
// # Safety
// `system` must be a pointer returned by a `ddr_system_*` constructor that
// has not been freed, or null (a no-op).
void ddr_system_free(struct DdrSystem *system);

// Number of state variables of the system; 0 when `system` is null.
//
// # Safety
// `system` must be a live system pointer or null.
uint32_t ddr_system_vars(const struct DdrSystem *system);

// Renders the system in the .tsys format. Returns a heap string to release
// with [`ddr_string_free`], or null when the system carries no row
// description.
//
// # Safety
// `system` must be a live system pointer.
char *ddr_system_write(const struct DdrSystem *system);

// Runs one algorithm to the reachability fixpoint. `algorithm` takes a
// `DdrAlgorithm` value; `workers` only matters for the parallel fixpoint;
// `timeout_ms <= 0` means no limit. On success `*out_set` receives the
// reachable set (free with [`ddr_set_free`]) and `*out_stats`, when not
// null, receives the run's instrumentation.
//
// # Safety
// `store` and `system` must be live pointers created against each other;
// `out_set` must point to writable storage; `out_stats` may be null.
enum DdrStatus ddr_run(const struct DdrStore *store,
                       const struct DdrSystem *system,
                       uint32_t algorithm,
                       uint32_t workers,
                       double timeout_ms,
                       struct DdrSet **out_set,
                       struct DdrRunStats *out_stats);

// Frees a state set.
//
// # Safety
// `set` must be a pointer produced by [`ddr_run`] that has not been freed,
// or null (a no-op).
void ddr_set_free(struct DdrSet *set);

// Number of states in the set as a decimal string (counts can exceed any
// fixed-width integer). Release with [`ddr_string_free`]; null on error.
//
// # Safety
// `store` and `set` must be live pointers created against each other.
char *ddr_set_count(const struct DdrStore *store, const struct DdrSet *set);

// Membership test: 1 when `state` (one value per variable, `len` values)
// is in the set, 0 when not, -1 on error.
//
// # Safety
// `store` and `set` must be live pointers created against each other;
// `state` must point to `len` readable bytes.
int ddr_set_contains(const struct DdrStore *store,
                     const struct DdrSet *set,
                     const uint8_t *state,
                     size_t len);

// Checks a system against the explicit-state oracle (small models only):
// returns 1 when the oracle's state count matches `expected_count` states
// of the given set, 0 on mismatch, -1 on error (for example when the state
// space is too large to enumerate).
//
// # Safety
// All pointers must be live and created against each other.
int ddr_oracle_matches(const struct DdrStore *store,
                       const struct DdrSystem *system,
                       const struct DdrSet *set);

// Frees a string returned by this library.
//
// # Safety
// `text` must be a pointer returned by a `ddr_*` function documented to be
// released here, not yet freed, or null (a no-op).
void ddr_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
