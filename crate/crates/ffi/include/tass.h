#ifndef TASS_H
#define TASS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum TassStatus {
  TASS_STATUS_OK = 0,
  TASS_STATUS_NULL_POINTER = 1,
  TASS_STATUS_INVALID_ARGUMENT = 2,
  TASS_STATUS_PARSE_ERROR = 3,
  TASS_STATUS_NOT_FOUND = 4,
  TASS_STATUS_EMPTY = 5,
  TASS_STATUS_MISMATCH = 6,
  TASS_STATUS_OUT_OF_RANGE = 7,
  TASS_STATUS_PANIC = 99,
} TassStatus;

typedef enum TassMode {
  TASS_MODE_LESS_SPECIFIC = 0,
  TASS_MODE_MORE_SPECIFIC = 1,
} TassMode;

/**
 * A disjoint routed partition.
 */
typedef struct TassPartition TassPartition;

/**
 * A density-ranked selection.
 */
typedef struct TassSelection TassSelection;

/**
 * A set of responsive addresses from one scan.
 */
typedef struct TassSnapshot TassSnapshot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *tass_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tass_version(void);

/**
 * Parse `a.b.c.d/len`; host bits below `len` are rejected.
 *
 * # Safety
 * `text` must be a NUL-terminated string; the out-pointers must be valid.
 */
enum TassStatus tass_prefix_parse(const char *text, uint32_t *network, uint8_t *length);

/**
 * Build a partition from pfx2as text (`network<TAB>length<TAB>as`).
 * Malformed lines are skipped; a table without valid lines is `Empty`.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be valid.
 */
enum TassStatus tass_partition_from_pfx2as(const char *data,
                                           size_t len,
                                           enum TassMode mode,
                                           struct TassPartition **out);

/**
 * Build a partition from `count` announced prefixes given as parallel
 * network and length arrays. Nested prefixes are resolved per `mode`.
 *
 * # Safety
 * `networks` and `lengths` must each hold `count` elements; `out` must be
 * valid.
 */
enum TassStatus tass_partition_build(const uint32_t *networks,
                                     const uint8_t *lengths,
                                     size_t count,
                                     enum TassMode mode,
                                     struct TassPartition **out);

/**
 * # Safety
 * `partition` must come from a tass constructor and not be freed twice.
 */
void tass_partition_free(struct TassPartition *partition);

/**
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_partition_len(const struct TassPartition *partition, size_t *len);

/**
 * Sum of the partition's prefix sizes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_partition_total_addresses(const struct TassPartition *partition,
                                               uint64_t *total);

/**
 * Prefix at `index` in ascending network order.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_partition_get(const struct TassPartition *partition,
                                   size_t index,
                                   uint32_t *network,
                                   uint8_t *length);

/**
 * The partition prefix holding `address` (host byte order), or `NotFound`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_partition_longest_match(const struct TassPartition *partition,
                                             uint32_t address,
                                             uint32_t *network,
                                             uint8_t *length);

/**
 * Build a snapshot from `count` addresses; duplicates collapse. String
 * arguments may be NULL.
 *
 * # Safety
 * `addresses` must hold `count` elements; strings must be NUL-terminated;
 * `out` must be valid.
 */
enum TassStatus tass_snapshot_from_addresses(const uint32_t *addresses,
                                             size_t count,
                                             const char *protocol,
                                             const char *captured_at,
                                             const char *source_id,
                                             struct TassSnapshot **out);

/**
 * Build a snapshot from newline-delimited dotted quads. `# protocol: x` and
 * `# captured_at: y` comment lines set the metadata.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `source_id` may be NULL;
 * `out` must be valid.
 */
enum TassStatus tass_snapshot_from_text(const char *data,
                                        size_t len,
                                        const char *source_id,
                                        struct TassSnapshot **out);

/**
 * # Safety
 * `snapshot` must come from a tass constructor and not be freed twice.
 */
void tass_snapshot_free(struct TassSnapshot *snapshot);

/**
 * Number of distinct addresses.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_snapshot_len(const struct TassSnapshot *snapshot, size_t *len);

/**
 * Rank the seed's responsive prefixes and select the smallest prefix of the
 * ranking whose host share exceeds `phi_numer / phi_denom` (all of them for
 * phi = 1).
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_select(const struct TassPartition *partition,
                            const struct TassSnapshot *seed,
                            uint64_t phi_numer,
                            uint64_t phi_denom,
                            struct TassSelection **out);

/**
 * # Safety
 * `selection` must come from [`tass_select`] and not be freed twice.
 */
void tass_selection_free(struct TassSelection *selection);

/**
 * Number of selected prefixes and number of ranked (responsive) prefixes.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_selection_counts(const struct TassSelection *selection,
                                      size_t *k,
                                      size_t *ranked);

/**
 * Ranked prefix at 0-based `rank`; ranks below `k` are selected.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_selection_get(const struct TassSelection *selection,
                                   size_t rank,
                                   uint32_t *network,
                                   uint8_t *length,
                                   uint64_t *host_count);

/**
 * Exact coverage of the selection as numerator/denominator pairs: seed
 * hosts covered over routed seed hosts, and selected addresses over routed
 * addresses.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_selection_coverage(const struct TassSelection *selection,
                                        uint64_t *hosts_selected,
                                        uint64_t *hosts_total,
                                        uint64_t *addresses_selected,
                                        uint64_t *addresses_total);

/**
 * Hosts of `later` inside the selected prefixes. The hitrate is
 * `covered / ground_truth`; `ground_truth` is 0 for an empty snapshot.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_simulate_tass(const struct TassSelection *selection,
                                   const struct TassPartition *partition,
                                   const struct TassSnapshot *later,
                                   uint64_t *covered,
                                   uint64_t *ground_truth);

/**
 * Hosts of `later` that were already responsive in `seed`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TassStatus tass_simulate_hitlist(const struct TassSnapshot *seed,
                                      const struct TassSnapshot *later,
                                      uint64_t *covered,
                                      uint64_t *ground_truth);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TASS_H */
