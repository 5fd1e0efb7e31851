#ifndef SCS_TELEPORT_H
#define SCS_TELEPORT_H

/* Generated by cbindgen from scs-teleport-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Family selector for situation queries.
typedef enum StFamily {
  // Branches heralded by a nonzero-even count.
  ST_FAMILY_MINUS = 0,
  // Branches heralded by an odd count.
  ST_FAMILY_PLUS = 1,
} StFamily;

// Terminal-situation selector for situation queries.
typedef enum StSituation {
  // Payload delivered directly (atom stays lower, cavity empty).
  ST_SITUATION_DIRECT_SUCCESS = 0,
  // Photon-counted failures, aggregated over the count.
  ST_SITUATION_PHOTON_COUNTED = 1,
  // Second-cavity release heralded by the lower readout.
  ST_SITUATION_RELEASE_LOWER = 2,
  // Second-cavity retention heralded by the upper readout.
  ST_SITUATION_RELEASE_UPPER = 3,
} StSituation;

// Status codes returned by every fallible entry point.
typedef enum StStatus {
  // Success.
  ST_STATUS_OK = 0,
  // A required pointer argument was null.
  ST_STATUS_NULL_POINTER = 1,
  // Arguments outside the supported domain.
  ST_STATUS_INVALID_INPUT = 2,
  // The requested tail bound cannot be met at this amplitude.
  ST_STATUS_CUTOFF_TOO_SMALL = 3,
  // Amplitude leaked past the truncated basis during evolution.
  ST_STATUS_CUTOFF_LEAK = 4,
  // A state degenerated to zero norm.
  ST_STATUS_DEGENERATE = 5,
  // An internal consistency check failed.
  ST_STATUS_INVARIANT_VIOLATION = 6,
  // Unexpected internal failure (caught panic).
  ST_STATUS_INTERNAL = 7,
} StStatus;

// Opaque evaluation result; create with [`st_evaluation_new`], release with
// [`st_evaluation_free`].
typedef struct StEvaluation StEvaluation;

// Flat summary of one evaluation.
typedef struct StPointSummary {
  double alpha_sq;
  double theta;
  double phi;
  // Vacuum overlap weight e^(−|α|²).
  double x;
  // Vacuum probability of the payload.
  double p_i0;
  // Channel concurrence.
  double concurrence;
  // Herald probabilities: the both-silent case and one branch of each
  // two-branch family.
  double p_case_i;
  double p_nze_each;
  double p_odd_each;
  // Fidelity of the discarded both-silent branch.
  double case_i_fidelity;
  // Average fidelity from the simulation tree and from the closed forms.
  double f_avg_sim;
  double f_avg_closed;
  // Large-amplitude asymptotic law.
  double f_avg_asymptotic;
} StPointSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Evaluate the protocol at one parameter point.
//
// `tail_bound` ≤ 0 selects the default (1e-12). On success `*out` owns the
// evaluation; free it with [`st_evaluation_free`].
//
// # Safety
// `out` must be a valid pointer to writable memory for one pointer.
enum StStatus st_evaluation_new(double alpha_sq,
                                double theta,
                                double phi,
                                double tail_bound,
                                struct StEvaluation **out);

// Release an evaluation. Null is a no-op.
//
// # Safety
// `handle` must be null or a pointer previously returned by
// [`st_evaluation_new`] that has not been freed.
void st_evaluation_free(struct StEvaluation *handle);

// Copy the flat summary of an evaluation into `out`.
//
// # Safety
// `handle` must be a live evaluation pointer; `out` must point to writable
// memory for one [`StPointSummary`].
enum StStatus st_evaluation_summary(const struct StEvaluation *handle, struct StPointSummary *out);

// Fetch one terminal situation's conditional probability and fidelity.
//
// # Safety
// `handle` must be a live evaluation pointer; `probability` and `fidelity`
// must point to writable memory for one `double` each.
enum StStatus st_evaluation_situation(const struct StEvaluation *handle,
                                      enum StFamily family,
                                      enum StSituation situation,
                                      double *probability,
                                      double *fidelity);

// Fetch one herald's simulated and closed-form probabilities by index
// (0 = both silent, 1-2 = nonzero-even heralds, 3-4 = odd heralds).
//
// # Safety
// `handle` must be a live evaluation pointer; `simulated` and `closed_form`
// must point to writable memory for one `double` each.
enum StStatus st_evaluation_branch(const struct StEvaluation *handle,
                                   int index,
                                   double *simulated,
                                   double *closed_form);

// Library version as a static NUL-terminated string.
const char *st_version(void);

// Static human-readable description of a status code.
const char *st_status_message(enum StStatus status);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SCS_TELEPORT_H */
