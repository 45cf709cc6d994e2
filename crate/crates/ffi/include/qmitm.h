#ifndef QMITM_H
#define QMITM_H

/* Generated by cbindgen from qmitm-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Attack selector.
 */
typedef enum {
  QMITM_ALGORITHM_EXHAUSTIVE = 0,
  QMITM_ALGORITHM_MITM2 = 1,
  QMITM_ALGORITHM_MITM4 = 2,
  QMITM_ALGORITHM_DISSECT4 = 3,
} QmitmAlgorithm;

/**
 * Status code returned by every call.
 */
typedef enum {
  QMITM_STATUS_OK = 0,
  QMITM_STATUS_NULL_POINTER = 1,
  QMITM_STATUS_BAD_ARGUMENT = 2,
  QMITM_STATUS_INFEASIBLE_SIZE = 3,
  QMITM_STATUS_ATTACK_FAILED = 4,
  QMITM_STATUS_IO = 5,
  QMITM_STATUS_INTERNAL = 6,
} QmitmStatus;

/**
 * Opaque handle over a seeded permutation family.
 */
typedef struct QmitmFamily QmitmFamily;

/**
 * Opaque handle over a planted instance.
 */
typedef struct QmitmInstance QmitmInstance;

/**
 * Ledger and recovered keys of one attack run.
 */
typedef struct {
  uint64_t keys[4];
  uint32_t key_count;
  uint64_t forward_queries;
  uint64_t inverse_queries;
  uint64_t time_units;
  uint64_t peak_memory_units;
  /**
   * 1 when the tuple re-checked against every pair.
   */
  uint8_t verified;
} QmitmAttackResult;

/**
 * Closed-form cost estimate; exponents are exact rationals.
 */
typedef struct {
  double queries;
  double time_units;
  double memory_units;
  int64_t time_exponent_num;
  int64_t time_exponent_den;
  int64_t space_exponent_num;
  int64_t space_exponent_den;
} QmitmCostEstimate;

/**
 * Szegedy-walk simulation summary.
 */
typedef struct {
  uint64_t edge_dimension;
  double stationary_marked_mass;
  double final_marked_mass;
  double peak_marked_mass;
  double spectral_gap;
} QmitmWalkReport;

/**
 * Adversary lift verification summary.
 */
typedef struct {
  uint64_t fiber_size;
  double norm_cf;
  double norm_ke2;
  uint8_t fibers_constant;
  uint8_t tensor_ok;
  uint8_t query_reduction_ok;
} QmitmAdvReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static C string.
 */
const char *qmitm_version(void);

/**
 * Message of the last error on this thread, or null.
 */
const char *qmitm_last_error_message(void);

/**
 * Generates a family of `n_keys` random permutations of
 * `[block_space]` from the seed. The handle must be released with
 * `qmitm_family_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_family_generate(uint64_t seed,
                                  uint64_t n_keys,
                                  uint64_t block_space,
                                  QmitmFamily **out);

/**
 * # Safety
 * `family` must come from `qmitm_family_generate` and not be freed twice.
 */
void qmitm_family_free(QmitmFamily *family);

/**
 * Plants an instance over a copy of the family. `keys` has `depth`
 * entries; `plaintexts` has `pair_count` entries.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
QmitmStatus qmitm_instance_plant(const QmitmFamily *family,
                                 uint32_t depth,
                                 const uint64_t *keys,
                                 const uint32_t *plaintexts,
                                 uint64_t pair_count,
                                 QmitmInstance **out);

/**
 * # Safety
 * `instance` must come from this library and not be freed twice.
 */
void qmitm_instance_free(QmitmInstance *instance);

/**
 * One counted oracle query against the instance: `direction` is +1
 * for forward, -1 for inverse; the answer lands in `out`.
 *
 * # Safety
 * `instance` and `out` must be valid pointers.
 */
QmitmStatus qmitm_instance_query(const QmitmInstance *instance,
                                 uint64_t key,
                                 uint32_t point,
                                 int8_t direction,
                                 uint32_t *out);

/**
 * Conjugates every permutation by the transposition (a b) and maps
 * the pairs along, yielding a fresh handle.
 *
 * # Safety
 * `instance` and `out` must be valid pointers.
 */
QmitmStatus qmitm_instance_conjugate_transposition(const QmitmInstance *instance,
                                                   uint32_t a,
                                                   uint32_t b,
                                                   QmitmInstance **out);

/**
 * Left-composes every permutation with a fresh seeded random one and
 * recomputes the ciphertexts, yielding a fresh handle.
 *
 * # Safety
 * `instance` and `out` must be valid pointers.
 */
QmitmStatus qmitm_instance_randomize(const QmitmInstance *instance,
                                     uint64_t seed,
                                     QmitmInstance **out);

/**
 * Writes the flat binary instance layout to `path`.
 *
 * # Safety
 * `instance` must be valid; `path` must be a NUL-terminated string.
 */
QmitmStatus qmitm_instance_to_file(const QmitmInstance *instance, const char *path);

/**
 * Reads an instance from the flat binary layout at `path`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
QmitmStatus qmitm_instance_from_file(const char *path, QmitmInstance **out);

/**
 * Runs a classical attack and fills the result struct.
 *
 * # Safety
 * `instance` and `out` must be valid pointers.
 */
QmitmStatus qmitm_attack_run(const QmitmInstance *instance,
                             QmitmAlgorithm algorithm,
                             QmitmAttackResult *out);

/**
 * Closed-form cost of the quantum 2-encryption attack.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_cost_ke2(uint64_t n_keys, QmitmCostEstimate *out);

/**
 * Closed-form cost of the quantum 4-encryption attack.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_cost_ke4(uint64_t n_keys, uint64_t block_space, QmitmCostEstimate *out);

/**
 * Grover iteration count for `marked` targets among `space_size`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_cost_grover(uint64_t space_size, uint64_t marked, QmitmCostEstimate *out);

/**
 * Exact Grover simulation marking the first `marked` elements;
 * writes the success probability after `iterations` steps.
 *
 * # Safety
 * `out_probability` must be a valid pointer.
 */
QmitmStatus qmitm_grover_simulate(uint64_t space_size,
                                  uint64_t marked,
                                  uint64_t iterations,
                                  double *out_probability);

/**
 * Szegedy walk on J(n_keys, subset_size) with the planted pair
 * (i, j) marked, run for `steps` steps.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_walk_simulate(uint64_t n_keys,
                                uint64_t subset_size,
                                uint64_t pair_i,
                                uint64_t pair_j,
                                uint64_t steps,
                                QmitmWalkReport *out);

/**
 * Lifts the uniform d-CF adversary matrix to d-KE2 at (N, M, P, C)
 * and reports the structure checks.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QmitmStatus qmitm_adv_verify(uint64_t n_keys,
                             uint64_t block_space,
                             uint32_t p,
                             uint32_t c,
                             QmitmAdvReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMITM_H */
