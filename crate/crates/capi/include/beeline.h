#ifndef BEELINE_H
#define BEELINE_H

/* Generated by cbindgen from beeline-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every API call.
 */
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  /**
   * The requested search has no solution (a result, not a failure).
   */
  BL_STATUS_NO_SOLUTION = 1,
  BL_STATUS_IO_ERROR = 2,
  BL_STATUS_PARSE_ERROR = 3,
  BL_STATUS_INVALID_ARGUMENT = 4,
  BL_STATUS_BUDGET_EXHAUSTED = 5,
  BL_STATUS_UNAVAILABLE = 6,
  /**
   * A provided buffer was too small; the required size is reported
   * through the relevant out-parameter.
   */
  BL_STATUS_BUFFER_TOO_SMALL = 7,
  BL_STATUS_PANIC = 99,
} BlStatus;

/**
 * Terminal state of a search, mirrored into [`BlSearchSummary`].
 */
typedef enum BlSearchStatus {
  BL_SEARCH_SUCCESS = 0,
  BL_SEARCH_BUDGET_EXHAUSTED = 1,
  BL_SEARCH_ITERATIONS_EXHAUSTED = 2,
} BlSearchStatus;

/**
 * Opaque: a loaded instance (transition table plus optional responses).
 */
typedef struct BlInstance BlInstance;

/**
 * Opaque: a scoring oracle.
 */
typedef struct BlOracle BlOracle;

/**
 * Search knobs, one-to-one with the core configuration.
 */
typedef struct BlSearchConfig {
  size_t population_size;
  uint32_t max_iterations;
  uint32_t stagnation_threshold;
  size_t tournament_size;
  size_t selection_count;
  double mutation_split;
  size_t max_path_length;
  size_t init_length_cap;
  uint64_t rng_seed;
} BlSearchConfig;

/**
 * Outcome of one search run.
 */
typedef struct BlSearchSummary {
  enum BlSearchStatus status;
  /**
   * Best fitness band seen, or -1 when nothing was scored.
   */
  int32_t best_fitness;
  uint64_t total_queries;
  uint32_t iterations_run;
  /**
   * Steps of the winning path written to the caller's buffer, or -1 when
   * the search did not succeed.
   */
  int32_t winning_len;
} BlSearchSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bl_last_error_message(void);

/**
 * Loads an instance file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
enum BlStatus bl_instance_load(const char *path, struct BlInstance **out);

/**
 * Writes the instance in canonical form.
 *
 * # Safety
 * `instance` must come from this library; `path` must be NUL-terminated.
 */
enum BlStatus bl_instance_save(const struct BlInstance *instance, const char *path);

/**
 * # Safety
 * `instance` must be a pointer previously returned by this library, or null.
 */
void bl_instance_free(struct BlInstance *instance);

/**
 * # Safety
 * `instance` must be a valid handle.
 */
uint32_t bl_instance_strategy_count(const struct BlInstance *instance);

/**
 * # Safety
 * `instance` must be a valid handle.
 */
uint32_t bl_instance_threshold(const struct BlInstance *instance);

/**
 * Minimum-step success path from the origin. `steps`/`capacity` receive the
 * result; `out_len` reports how many steps were (or would be) written.
 *
 * # Safety
 * `instance`, `steps` (for `capacity` elements) and `out_len` must be valid.
 */
enum BlStatus bl_shortest_path(const struct BlInstance *instance,
                               uint32_t *steps,
                               size_t capacity,
                               size_t *out_len);

/**
 * Progress level reached by folding the given steps from the origin.
 *
 * # Safety
 * `instance` and `out_level` must be valid; `steps` must hold `len` items.
 */
enum BlStatus bl_prefix_progress(const struct BlInstance *instance,
                                 const uint32_t *steps,
                                 size_t len,
                                 uint32_t *out_level);

/**
 * Deterministic oracle from an instance that carries response levels.
 *
 * # Safety
 * `instance` and `out` must be valid pointers.
 */
enum BlStatus bl_oracle_tabular(const struct BlInstance *instance, struct BlOracle **out);

/**
 * Seeded stochastic oracle with a constant per-level advance probability.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BlStatus bl_oracle_synthetic(uint64_t seed,
                                  double advance_prob,
                                  uint32_t step_increment,
                                  uint32_t threshold,
                                  double noise_prob,
                                  uint32_t strategy_count,
                                  struct BlOracle **out);

/**
 * # Safety
 * `oracle` must be a pointer previously returned by this library, or null.
 */
void bl_oracle_free(struct BlOracle *oracle);

/**
 * Search preset for smaller targets (3 rounds, paths up to 3, population 5).
 */
struct BlSearchConfig bl_search_config_small(uint64_t seed);

/**
 * Search preset for harder targets (5 rounds, paths up to 5, population 10).
 */
struct BlSearchConfig bl_search_config_large(uint64_t seed);

/**
 * Runs one search against the oracle. On success the winning path's steps
 * are written to `winning_steps` (up to `winning_capacity` entries) and
 * `summary.winning_len` reports the full length.
 *
 * # Safety
 * `oracle`, `config` and `summary` must be valid; `winning_steps` must hold
 * `winning_capacity` items (it may be null when the capacity is 0).
 */
enum BlStatus bl_search_run(const struct BlOracle *oracle,
                            const struct BlSearchConfig *config,
                            uint64_t budget_max,
                            struct BlSearchSummary *summary,
                            uint32_t *winning_steps,
                            size_t winning_capacity);

/**
 * Library version as a static string.
 */
const char *bl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEELINE_H */
