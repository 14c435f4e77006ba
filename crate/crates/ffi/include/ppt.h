#ifndef PPT_H
#define PPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first four match the exit statuses of the `ppt` binary.
 */
typedef enum PptStatus {
  PPT_STATUS_OK = 0,
  PPT_STATUS_VIOLATION = 1,
  PPT_STATUS_INVALID_INPUT = 2,
  PPT_STATUS_SOLVER_FAILURE = 3,
  PPT_STATUS_NULL_POINTER = 4,
  PPT_STATUS_PANIC = 5,
  PPT_STATUS_IO = 6,
} PptStatus;

/**
 * Law of a point process on the enumerated configurations of `k` sites.
 */
typedef struct PptLaw PptLaw;

/**
 * Finite measure on `{0, …, k-1}`.
 */
typedef struct PptMeasure PptMeasure;

/**
 * Outcome of an inequality check `lhs ≤ rhs`.
 */
typedef struct PptVerdict {
  double lhs;
  double rhs;
  double margin;
  double tolerance;
  bool violated;
  bool vacuous;
} PptVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ppt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ppt_version(void);

/**
 * Creates a measure from `len` nonnegative finite weights. Weights summing
 * to one (within round-off) give a probability measure.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum PptStatus ppt_measure_new(const double *weights, size_t len, struct PptMeasure **out);

/**
 * # Safety
 * `m` must be null or a handle from [`ppt_measure_new`] not yet freed.
 */
void ppt_measure_free(struct PptMeasure *m);

/**
 * `H(nu | gamma)`; may be `+inf`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum PptStatus ppt_relative_entropy(const struct PptMeasure *nu,
                                    const struct PptMeasure *gamma,
                                    double *out);

/**
 * Marton cost `Σ_x ν₂(x) [1 - ν₁(x)/ν₂(x)]_+²` of two probability measures.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum PptStatus ppt_marton_cost(const struct PptMeasure *nu1,
                               const struct PptMeasure *nu2,
                               double *out);

/**
 * `α_t(u)` for `t, u ∈ [0, 1]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PptStatus ppt_alpha_t(double t, double u, double *out);

/**
 * Checks the universal weak Hamming inequality with `α_t` for
 * `(gamma, nu1, nu2)`. Returns `PPT_STATUS_VIOLATION` if it fails.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum PptStatus ppt_verify_base_dembo(const struct PptMeasure *gamma,
                                     const struct PptMeasure *nu1,
                                     const struct PptMeasure *nu2,
                                     double t,
                                     struct PptVerdict *out);

/**
 * Truncated Poisson law with intensity `nu` on configurations of mass at
 * most `cap`.
 *
 * # Safety
 * `nu` must be live; `out` must be writable.
 */
enum PptStatus ppt_poisson_law_new(const struct PptMeasure *nu, uint32_t cap, struct PptLaw **out);

/**
 * Binomial law `B_{μ,n}` on configurations of mass at most `cap ≥ n`.
 *
 * # Safety
 * `mu` must be live; `out` must be writable.
 */
enum PptStatus ppt_binomial_law_new(const struct PptMeasure *mu,
                                    uint32_t n,
                                    uint32_t cap,
                                    struct PptLaw **out);

/**
 * Law with the given weights (normalized) in enumeration order: by mass,
 * then lexicographically descending counts.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum PptStatus ppt_law_from_weights(size_t k,
                                    uint32_t cap,
                                    const double *weights,
                                    size_t len,
                                    struct PptLaw **out);

/**
 * # Safety
 * `law` must be null or a live law handle.
 */
void ppt_law_free(struct PptLaw *law);

/**
 * Number of enumerated configurations.
 *
 * # Safety
 * `law` must be live; `out` must be writable.
 */
enum PptStatus ppt_law_len(const struct PptLaw *law, size_t *out);

/**
 * Copies the probabilities into `buf`, which must hold the whole law.
 *
 * # Safety
 * `law` must be live; `buf` must point to `len` writable doubles.
 */
enum PptStatus ppt_law_probabilities(const struct PptLaw *law, double *buf, size_t len);

/**
 * `H(pi | reference)` between laws on the same enumeration.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum PptStatus ppt_law_relative_entropy(const struct PptLaw *pi,
                                        const struct PptLaw *reference,
                                        double *out);

/**
 * Weak process inequality with `α_t` for `(pi1, pi2)` against `law`
 * (binomial or Poisson).
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum PptStatus ppt_verify_marton_process(const struct PptLaw *law,
                                         const struct PptLaw *pi1,
                                         const struct PptLaw *pi2,
                                         double t,
                                         struct PptVerdict *out);

/**
 * Runs a JSON experiment configuration and writes `report.json` and the
 * CSV tables into `out_dir`. `seed` overrides the configuration seed when
 * `override_seed` is true.
 *
 * # Safety
 * `config_json` and `out_dir` must be NUL-terminated UTF-8 strings.
 */
enum PptStatus ppt_run_config(const char *config_json,
                              const char *out_dir,
                              bool override_seed,
                              uint64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPT_H */
