#ifndef TWOPHASE_H
#define TWOPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_ARGUMENT = 2,
  TP_STATUS_DIMENSION = 3,
  TP_STATUS_NOT_UNITARY = 4,
  TP_STATUS_UNCERTAINTY = 5,
  TP_STATUS_NOT_POSITIVE_DEFINITE = 6,
  TP_STATUS_INDETERMINATE_PHASE = 7,
  TP_STATUS_SINGULAR_FISHER = 8,
  TP_STATUS_NOT_IDENTIFIABLE = 9,
  TP_STATUS_ESTIMATOR = 10,
  TP_STATUS_CONFIG = 11,
  TP_STATUS_IO = 12,
  TP_STATUS_NUMERICAL = 13,
  TP_STATUS_PANIC = 14,
} TpStatus;

typedef enum TpLoMode {
  /**
   * `param1 = k₁`, `param2 = k₂`.
   */
  TP_LO_MODE_TUNED = 0,
  /**
   * `param1 = θ₁`, `param2 = θ₂`.
   */
  TP_LO_MODE_EXPLICIT = 1,
  /**
   * `param1 = δ₁`, `param2 = δ₂`.
   */
  TP_LO_MODE_OFFSET = 2,
} TpLoMode;

/**
 * Probe and local-oscillator configuration.
 */
typedef struct TpModel TpModel;

/**
 * Joint homodyne outcomes.
 */
typedef struct TpSampleBatch TpSampleBatch;

/**
 * Library version as a static NUL-terminated string.
 */
const char *tp_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t tp_last_error_message(char *buf, size_t len);

/**
 * Creates a model for a probe `|α₁, r⟩ ⊗ |α₂⟩` and an LO setting.
 *
 * # Safety
 * `out` must be a valid pointer; the handle written there must be released
 * with [`tp_model_free`].
 */
enum TpStatus tp_model_new(double alpha1,
                           double alpha2,
                           double r,
                           enum TpLoMode lo_mode,
                           double param1,
                           double param2,
                           struct TpModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`tp_model_new`] not yet freed.
 */
void tp_model_free(struct TpModel *model);

/**
 * LO angles `θ[2]` the model uses at the given phases.
 *
 * # Safety
 * `model` must be a live handle and `theta` point to 2 doubles.
 */
enum TpStatus tp_resolve_lo(const struct TpModel *model, double phi_s, double phi_d, double *theta);

/**
 * Mean `mu[2]` and covariance `sigma[4]` of the homodyne outcomes.
 *
 * # Safety
 * `model` must be a live handle; `mu` and `sigma` must point to 2 and 4 doubles.
 */
enum TpStatus tp_output_distribution(const struct TpModel *model,
                                     double phi_s,
                                     double phi_d,
                                     double *mu,
                                     double *sigma);

/**
 * Exact Fisher information. Any of `signal`, `noise`, `total` may be null.
 *
 * # Safety
 * `model` must be a live handle; non-null outputs must point to 4 doubles.
 */
enum TpStatus tp_fim_exact(const struct TpModel *model,
                           double phi_s,
                           double phi_d,
                           double *signal,
                           double *noise,
                           double *total);

/**
 * Total asymptotic information for tuned detectors with common `k`.
 *
 * # Safety
 * `out` must point to 4 doubles.
 */
enum TpStatus tp_fim_total_asymptotic(double beta, double ns, double nc, double k, double *out);

/**
 * Cramér–Rao variances `var[2] = diag(F⁻¹)/ν`.
 *
 * # Safety
 * `fim` must point to 4 doubles and `var` to 2.
 */
enum TpStatus tp_crb(const double *fim, uint64_t nu, double *var);

/**
 * Pseudo-inverse bound `w F⁺ wᵀ / ν` on `w·φ`.
 *
 * # Safety
 * `fim` must point to 4 doubles, `weights` to 2 and `var` to 1.
 */
enum TpStatus tp_crb_pseudo(const double *fim, const double *weights, uint64_t nu, double *var);

/**
 * Draws `nu` outcomes at the given phases on RNG stream `stream` of `seed`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer; release the batch
 * with [`tp_batch_free`].
 */
enum TpStatus tp_sample(const struct TpModel *model,
                        double phi_s,
                        double phi_d,
                        size_t nu,
                        uint64_t seed,
                        uint64_t stream,
                        struct TpSampleBatch **out);

/**
 * # Safety
 * `batch` must be null or a handle from [`tp_sample`] not yet freed.
 */
void tp_batch_free(struct TpSampleBatch *batch);

/**
 * Number of outcomes in the batch, 0 for null.
 *
 * # Safety
 * `batch` must be null or a live handle.
 */
size_t tp_batch_len(const struct TpSampleBatch *batch);

/**
 * Copies outcomes as interleaved `x₁, x₂` pairs into `out` (`2·len` doubles).
 *
 * # Safety
 * `batch` must be a live handle and `out` point to `2·capacity` doubles.
 */
enum TpStatus tp_batch_outcomes(const struct TpSampleBatch *batch, double *out, size_t capacity);

/**
 * Closed-form estimates `phases[2] = (φ̃_s, φ̃_d)` for a batch drawn with
 * `α₁ = 0` and equal tuning. `(ref_s, ref_d)` selects the branch and should
 * be the operating point the oscillators are locked to.
 *
 * # Safety
 * `model` and `batch` must be live handles and `phases` point to 2 doubles.
 */
enum TpStatus tp_estimate_closed_form(const struct TpModel *model,
                                      const struct TpSampleBatch *batch,
                                      double ref_s,
                                      double ref_d,
                                      double *phases);

/**
 * Numeric maximum-likelihood estimate from `(init_s, init_d)`, with the LO
 * angles resolved at the initial point. `converged` may be null.
 *
 * # Safety
 * `model` and `batch` must be live handles and `phases` point to 2 doubles.
 */
enum TpStatus tp_estimate_numeric(const struct TpModel *model,
                                  const struct TpSampleBatch *batch,
                                  double init_s,
                                  double init_d,
                                  double *phases,
                                  bool *converged);

/**
 * Human-readable name of a status code.
 */
const char *tp_status_name(enum TpStatus status);

#endif  /* TWOPHASE_H */
