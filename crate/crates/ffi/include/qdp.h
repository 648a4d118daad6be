#ifndef QDP_H
#define QDP_H

#pragma once

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum QdpStatus {
  QDP_STATUS_OK = 0,
  QDP_STATUS_NULL_POINTER = 1,
  QDP_STATUS_INVALID_ARGUMENT = 2,
  QDP_STATUS_OUT_OF_RANGE = 3,
  QDP_STATUS_BUFFER_TOO_SMALL = 4,
  QDP_STATUS_UNBOUNDED = 5,
  QDP_STATUS_UNREACHABLE = 6,
  QDP_STATUS_PANIC = 7,
} QdpStatus;

/**
 * Opaque quantized Gaussian mechanism: noise, quantizer and sensitivity.
 */
typedef struct QdpMechanism QdpMechanism;

/**
 * Opaque k-level stochastic quantizer.
 */
typedef struct QdpQuantizer QdpQuantizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qdp_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator; 0 when there is no error.
 */
size_t qdp_last_error_message(char *buf, size_t len);

/**
 * Creates a mechanism with `k` levels, clipping radius `c_q` and noise
 * standard deviation `sigma`. Sensitivity is `c_q`.
 */
enum QdpStatus qdp_mechanism_new(size_t k, double c_q, double sigma, struct QdpMechanism **out);

void qdp_mechanism_free(struct QdpMechanism *mech);

enum QdpStatus qdp_mechanism_levels(const struct QdpMechanism *mech, size_t *out);

/**
 * Fills `probs[0..k]` with the output pmf for input `x` in `[-c_q/2, c_q/2]`.
 */
enum QdpStatus qdp_mechanism_pmf(const struct QdpMechanism *mech,
                                 double x,
                                 double *probs,
                                 size_t len);

/**
 * Order-1 budget (nats).
 */
enum QdpStatus qdp_mechanism_epsilon_one(const struct QdpMechanism *mech, double *out);

/**
 * Closed-form order-infinity budget (nats).
 */
enum QdpStatus qdp_mechanism_epsilon_infinity(const struct QdpMechanism *mech, double *out);

/**
 * `D_alpha(p || q)` for two probability vectors of length `len`. Pass
 * `INFINITY` for the order-infinity divergence.
 */
enum QdpStatus qdp_renyi_divergence(const double *p,
                                    const double *q,
                                    size_t len,
                                    double alpha,
                                    double *out);

/**
 * Gaussian mechanism RDP `alpha * s^2 / (2 sigma^2)`; `Unbounded` at infinite order.
 */
enum QdpStatus qdp_gaussian_rdp(double sensitivity, double sigma, double alpha, double *out);

/**
 * Converts `(alpha, epsilon)`-RDP to the DP epsilon at `delta`.
 */
enum QdpStatus qdp_rdp_to_dp(double alpha, double epsilon, double delta, double *out);

/**
 * Smallest Gaussian sigma meeting `(epsilon, delta)` after `rounds`
 * compositions, over the default order grid.
 */
enum QdpStatus qdp_calibrate_sigma(double epsilon,
                                   double delta,
                                   size_t rounds,
                                   double sensitivity,
                                   double *out);

enum QdpStatus qdp_quantizer_new(size_t k, double c_q, struct QdpQuantizer **out);

void qdp_quantizer_free(struct QdpQuantizer *q);

/**
 * Clips `input` to the quantizer's l2 ball and rounds each coordinate onto
 * the lattice, writing `len` values to `output`. Randomness comes from the
 * `(seed, stream)` counter-based generator: coordinate `i` uses draw `i`.
 */
enum QdpStatus qdp_quantize(const struct QdpQuantizer *q,
                            const double *input,
                            size_t len,
                            uint64_t seed,
                            uint64_t stream,
                            double *output);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDP_H */
