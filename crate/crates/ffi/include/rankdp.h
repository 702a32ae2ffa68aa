#ifndef RANKDP_H
#define RANKDP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RankdpStatus {
  RANKDP_STATUS_OK = 0,
  RANKDP_STATUS_NULL_POINTER = 1,
  RANKDP_STATUS_INVALID_RANKING = 2,
  RANKDP_STATUS_INVALID_ARGUMENT = 3,
  RANKDP_STATUS_CAP_EXCEEDED = 4,
  RANKDP_STATUS_INTERNAL = 5,
} RankdpStatus;

// Laplace score-perturbation mechanism.
typedef struct RankdpLaplace RankdpLaplace;

// Mallows synthesizer for a fixed `epsilon` and `m`.
typedef struct RankdpMallows RankdpMallows;

// Seeded random generator.
typedef struct RankdpRng RankdpRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty when none. Valid until
// the next failing call on the same thread.
const char *rankdp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *rankdp_version(void);

// # Safety
// `out` must be valid for writing one pointer.
enum RankdpStatus rankdp_rng_new(uint64_t seed, struct RankdpRng **out);

// # Safety
// `rng` must come from [`rankdp_rng_new`] and not be used afterwards. Null is ignored.
void rankdp_rng_free(struct RankdpRng *rng);

// # Safety
// `out` must be valid for writing one pointer.
enum RankdpStatus rankdp_mallows_new(double epsilon, size_t m, struct RankdpMallows **out);

// # Safety
// `mech` must come from [`rankdp_mallows_new`] and not be used afterwards. Null is ignored.
void rankdp_mallows_free(struct RankdpMallows *mech);

// Draws one synthetic ranking of `input` into `output` (both `m` ranks).
//
// # Safety
// Pointers must be valid; `input` and `output` must hold `m` elements.
enum RankdpStatus rankdp_mallows_synthesize(const struct RankdpMallows *mech,
                                            struct RankdpRng *rng,
                                            const size_t *input,
                                            size_t m,
                                            size_t *output);

// Probability of `output` given `input` under the Mallows model.
//
// # Safety
// Pointers must be valid; `input` and `output` must hold `m` elements.
enum RankdpStatus rankdp_mallows_pmf(const struct RankdpMallows *mech,
                                     const size_t *input,
                                     const size_t *output,
                                     size_t m,
                                     double *out);

// Exact privacy loss of the synthesizer around `base` (`m` <= 8).
//
// # Safety
// Pointers must be valid; `base` must hold `m` elements.
enum RankdpStatus rankdp_exact_epsilon(const struct RankdpMallows *mech,
                                       const size_t *base,
                                       size_t m,
                                       double *out);

// # Safety
// `out` must be valid for writing one pointer.
enum RankdpStatus rankdp_laplace_new(double epsilon, size_t m, struct RankdpLaplace **out);

// # Safety
// `mech` must come from [`rankdp_laplace_new`] and not be used afterwards. Null is ignored.
void rankdp_laplace_free(struct RankdpLaplace *mech);

// Writes the noisy scores `rank_i + Laplace(scale)` for `input` into `scores`.
//
// # Safety
// Pointers must be valid; `input` and `scores` must hold `m` elements.
enum RankdpStatus rankdp_laplace_perturb(const struct RankdpLaplace *mech,
                                         struct RankdpRng *rng,
                                         const size_t *input,
                                         size_t m,
                                         double *scores);

// Ranks of `m` scores in ascending order, ties to the lower index.
//
// # Safety
// `scores` and `ranks` must hold `m` elements.
enum RankdpStatus rankdp_induced_ranking(const double *scores, size_t m, size_t *ranks);

// Number of item pairs ordered the same way by both rankings.
//
// # Safety
// `a` and `b` must hold `m` elements; `out` must be valid.
enum RankdpStatus rankdp_concordant_pairs(const size_t *a, const size_t *b, size_t m, size_t *out);

// Closed-form expected concordance of the Mallows synthesizer.
//
// # Safety
// `out` must be valid.
enum RankdpStatus rankdp_expected_concordance_mallows(size_t m, double epsilon, double *out);

// Closed-form expected concordance of the Laplace mechanism.
//
// # Safety
// `out` must be valid.
enum RankdpStatus rankdp_expected_concordance_laplace(size_t m, double epsilon, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANKDP_H */
