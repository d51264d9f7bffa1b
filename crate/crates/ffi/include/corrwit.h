#ifndef CORRWIT_H
#define CORRWIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CorrwitStatus {
  CORRWIT_STATUS_OK = 0,
  CORRWIT_STATUS_NULL_POINTER = 1,
  CORRWIT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input matrix failed validation (shape, Hermiticity, positivity, trace).
   */
  CORRWIT_STATUS_INVALID_INPUT = 3,
  /**
   * A construction failed for mathematical reasons.
   */
  CORRWIT_STATUS_CONSTRUCTION_FAILED = 4,
  /**
   * A panic was caught at the boundary.
   */
  CORRWIT_STATUS_INTERNAL = 5,
} CorrwitStatus;

typedef enum CorrwitCrossing {
  CORRWIT_CROSSING_NON_CQ = 0,
  CORRWIT_CROSSING_NON_CC = 1,
  CORRWIT_CROSSING_NON_CQ_OR_QC = 2,
} CorrwitCrossing;

/**
 * Opaque POVM.
 */
typedef struct CorrwitPovm CorrwitPovm;

/**
 * Opaque bipartite density matrix.
 */
typedef struct CorrwitState CorrwitState;

typedef struct CorrwitClassReport {
  bool npt;
  bool cq;
  bool qc;
  bool cc;
  double min_pt_eig;
  double max_commutator_a;
  double max_commutator_b;
} CorrwitClassReport;

typedef struct CorrwitPovmAnalysis {
  size_t dim_e;
  size_t dim_xe;
  bool informationally_complete;
  bool decides_cq;
} CorrwitPovmAnalysis;

typedef struct CorrwitWitnessSummary {
  double lambda;
  /**
   * Smallest eigenvalue of the partial transpose of the perturbed state.
   */
  double min_pt_eig;
  /**
   * Whether the perturbed state left the class its base belonged to.
   */
  bool crossed;
} CorrwitWitnessSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the length of the full message without the
 * terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t corrwit_last_error_message(char *buf, size_t len);

/**
 * Builds a state on C^d ⊗ C^d from row-major real and imaginary parts of
 * length `d^4`.
 *
 * # Safety
 * `re` and `im` must be valid for `d^4` doubles and `out` must be writable.
 */
enum CorrwitStatus corrwit_state_new(size_t d,
                                     const double *re,
                                     const double *im,
                                     struct CorrwitState **out);

/**
 * The maximally mixed state I/d².
 *
 * # Safety
 * `out` must be writable.
 */
enum CorrwitStatus corrwit_state_maximally_mixed(size_t d, struct CorrwitState **out);

/**
 * # Safety
 * `state` must be null or a handle from this library not yet freed.
 */
void corrwit_state_free(struct CorrwitState *state);

/**
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum CorrwitStatus corrwit_state_classify(const struct CorrwitState *state,
                                          double tol,
                                          struct CorrwitClassReport *out);

/**
 * Minimal POVM that decides CQ membership (d⁴ − d² + 1 outcomes).
 *
 * # Safety
 * `out` must be writable.
 */
enum CorrwitStatus corrwit_povm_minimal_cq(size_t d, double epsilon, struct CorrwitPovm **out);

/**
 * # Safety
 * `povm` must be null or a handle from this library not yet freed.
 */
void corrwit_povm_free(struct CorrwitPovm *povm);

/**
 * Number of outcomes, or 0 for a null handle.
 *
 * # Safety
 * `povm` must be null or a live handle.
 */
size_t corrwit_povm_len(const struct CorrwitPovm *povm);

/**
 * # Safety
 * `povm` must be a live handle and `out` writable.
 */
enum CorrwitStatus corrwit_povm_analyze(const struct CorrwitPovm *povm,
                                        struct CorrwitPovmAnalysis *out);

/**
 * Outcome probabilities tr(E_j ρ), written to `probs` of length `len`,
 * which must equal the number of outcomes.
 *
 * # Safety
 * Handles must be live and `probs` valid for `len` doubles.
 */
enum CorrwitStatus corrwit_povm_statistics(const struct CorrwitPovm *povm,
                                           const struct CorrwitState *state,
                                           double *probs,
                                           size_t len);

/**
 * Entangling perturbation along the seeded random direction. On success the
 * perturbed state is written to `out_state` (if non-null).
 *
 * # Safety
 * `out` must be writable; `out_state` must be null or writable.
 */
enum CorrwitStatus corrwit_witness_entangle(size_t d,
                                            uint64_t seed,
                                            struct CorrwitWitnessSummary *out,
                                            struct CorrwitState **out_state);

/**
 * Class-crossing perturbation along the seeded random direction.
 *
 * # Safety
 * `out` must be writable; `out_state` must be null or writable.
 */
enum CorrwitStatus corrwit_witness_crossing(enum CorrwitCrossing kind,
                                            size_t d,
                                            uint64_t seed,
                                            double tol,
                                            struct CorrwitWitnessSummary *out,
                                            struct CorrwitState **out_state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRWIT_H */
