#ifndef SPREADKIT_H
#define SPREADKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SK_PROXY_GEOMETRIC 0

#define SK_PROXY_LEVY 1

typedef enum SkStatus {
  SK_STATUS_OK = 0,
  SK_STATUS_NULL_ARGUMENT = 1,
  /**
   * Malformed JSON or a document that does not match the schema.
   */
  SK_STATUS_SCHEMA = 2,
  /**
   * Numerically infeasible input (e.g. Levy matching, factorization).
   */
  SK_STATUS_NUMERICAL = 3,
  /**
   * Well-formed input that violates a model invariant.
   */
  SK_STATUS_VALIDATION = 4,
  SK_STATUS_PANIC = 5,
  SK_STATUS_INVALID_UTF8 = 6,
} SkStatus;

/**
 * Opaque pricer handle.
 */
typedef struct SkPricer SkPricer;

/**
 * Prices at orders 0 to 3 and the effective strike and ratio variance.
 * `kappa_star` and `nu2` are NaN when the price is exact.
 */
typedef struct SkPrices {
  double vg[4];
  double kappa_star;
  double nu2;
} SkPrices;

typedef struct SkMcResult {
  double price;
  double std_error;
  uint64_t paths_used;
} SkMcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an instrument document and stores a new pricer in `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SkStatus sk_pricer_from_json(const char *json, struct SkPricer **out);

/**
 * Releases a pricer. Null is ignored.
 *
 * # Safety
 * `pricer` must come from [`sk_pricer_from_json`] and not be used afterwards.
 */
void sk_pricer_free(struct SkPricer *pricer);

/**
 * Number of assets in the reduced basket (pseudo-assets for Asian payoffs).
 *
 * # Safety
 * `pricer` must be a live handle and `out` a valid pointer.
 */
enum SkStatus sk_pricer_asset_count(const struct SkPricer *pricer, size_t *out);

/**
 * Prices at orders 0 to 3 with the given proxy (`SK_PROXY_*`).
 *
 * # Safety
 * `pricer` must be a live handle and `out` a valid pointer.
 */
enum SkStatus sk_pricer_price(const struct SkPricer *pricer, uint32_t proxy, struct SkPrices *out);

/**
 * Monte Carlo price of the instrument (antithetic, control variate, 1000 batches).
 *
 * # Safety
 * `pricer` must be a live handle and `out` a valid pointer.
 */
enum SkStatus sk_pricer_mc(const struct SkPricer *pricer,
                           uint64_t paths,
                           uint64_t seed,
                           struct SkMcResult *out);

/**
 * Black-76 price; `direction` is +1 for a call and -1 for a put.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SkStatus sk_black(double forward,
                       double strike,
                       double variance,
                       double discount,
                       int32_t direction,
                       double *out);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *sk_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *sk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPREADKIT_H */
