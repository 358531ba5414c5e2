#ifndef WBOOT_H
#define WBOOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum WbootStatus {
  WBOOT_STATUS_OK = 0,
  WBOOT_STATUS_NULL_POINTER = 1,
  WBOOT_STATUS_INVALID_ARGUMENT = 2,
  WBOOT_STATUS_DOMAIN = 3,
  WBOOT_STATUS_DEGENERATE_WEIGHTS = 4,
  WBOOT_STATUS_DEGENERATE_SAMPLE = 5,
  WBOOT_STATUS_DEGENERATE_BOOTSTRAP_SAMPLE = 6,
  WBOOT_STATUS_UNSUPPORTED_PARADIGM = 7,
  WBOOT_STATUS_UNSUPPORTED_MODE = 8,
  WBOOT_STATUS_INFEASIBLE_QUANTILE = 9,
  WBOOT_STATUS_CONFIG = 10,
  WBOOT_STATUS_EXPERIMENT = 11,
  WBOOT_STATUS_IO = 12,
  WBOOT_STATUS_BUFFER_TOO_SMALL = 13,
  WBOOT_STATUS_INTERNAL = 14,
} WbootStatus;

// Opaque data generator.
typedef struct WbootGenerator WbootGenerator;

// Opaque data sample.
typedef struct WbootSample WbootSample;

// Opaque bootstrap scheme (Efron with an m-rule, or i.i.d. positive weights).
typedef struct WbootScheme WbootScheme;

// The three bootstrapped t-statistics for one weight vector.
typedef struct WbootBootTriple {
  double t_star;
  // NaN when `has_t_star_star` is false (constant bootstrap sample).
  double t_star_star;
  bool has_t_star_star;
  double t_star_star_sn;
  // `S*^2`.
  double boot_var;
  // `V_n^2`.
  double v_n_sq;
} WbootBootTriple;

// A bootstrap-t bound for one fixed sample.
typedef struct WbootBound {
  uint8_t kind;
  double alpha;
  size_t b;
  // 1-based order statistic index.
  size_t l;
  // `C^{(B)}`, the l-th smallest replicate.
  double c;
  // `Xbar - C S_n / sqrt(n)`.
  double mu_lower_bound;
  size_t weight_redraws;
} WbootBound;

// Summary of a coverage experiment.
typedef struct WbootCoverage {
  uint8_t kind;
  double nominal;
  double empirical;
  size_t repetitions;
  double mean_c;
  double z_alpha;
  size_t degenerate_samples;
  size_t weight_redraws;
} WbootCoverage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the calling thread's last failure, or NULL. The pointer stays
// valid until the next library call on this thread.
const char *wboot_last_error(void);

// Library version as a static NUL-terminated string.
const char *wboot_version(void);

enum WbootStatus wboot_normal_cdf(double x, double *out_p);

// Standard normal quantile for `p` in (0, 1).
enum WbootStatus wboot_normal_quantile(double p, double *out_z);

// KS distance between the empirical law of `values` (any order) and N(0,1).
enum WbootStatus wboot_ks_to_normal(const double *values, size_t len, double *out_d);

// Copies `values` into a new sample.
enum WbootStatus wboot_sample_new(const double *values,
                                  size_t len,
                                  struct WbootSample **out_sample);

void wboot_sample_free(struct WbootSample *sample);

// Number of observations; 0 for NULL.
size_t wboot_sample_len(const struct WbootSample *sample);

// Mean and variance (denominator n) of the sample.
enum WbootStatus wboot_sample_moments(const struct WbootSample *sample,
                                      double *out_mean,
                                      double *out_variance);

// `sqrt(n)(Xbar - mu)/S_n`.
enum WbootStatus wboot_t_statistic(const struct WbootSample *sample, double mu, double *out_t);

// T*, T** and T**_{m,S_n} for explicit non-negative weights (one per
// observation, not all zero).
enum WbootStatus wboot_boot_t_statistics(const struct WbootSample *sample,
                                         const double *weights,
                                         size_t len,
                                         struct WbootBootTriple *out_triple);

// Parses a scheme (`efron`, `gamma`, `gamma:SHAPE,RATE`, `exp:RATE`,
// `const:C`) with an m-rule (`fixed:M`, `ratio:C`, `nlogn:C`, `sqrt-cap`)
// used by Efron only. `m_rule` may be NULL for `ratio:1`.
enum WbootStatus wboot_scheme_parse(const char *scheme,
                                    const char *m_rule,
                                    struct WbootScheme **out_scheme);

void wboot_scheme_free(struct WbootScheme *scheme);

// Draws `n` weights into `buf` (capacity `buf_len >= n`) and their total
// mass into `out_mass` (may be NULL).
enum WbootStatus wboot_draw_weights(const struct WbootScheme *scheme,
                                    size_t n,
                                    uint64_t seed,
                                    uint64_t replicate,
                                    double *buf,
                                    size_t buf_len,
                                    double *out_mass);

// Parses `normal[:MU,SD]`, `exp-centered[:RATE]`, `t:NU` or
// `two-point:LO,HI,P`.
enum WbootStatus wboot_generator_parse(const char *spec, struct WbootGenerator **out_generator);

void wboot_generator_free(struct WbootGenerator *generator);

// Draws a sample of size `n` from the generator.
enum WbootStatus wboot_draw_sample(const struct WbootGenerator *generator,
                                   size_t n,
                                   uint64_t seed,
                                   uint64_t replicate,
                                   struct WbootSample **out_sample);

// `l = floor(alpha (B + 1))`, failing when it falls outside `1..=B`.
enum WbootStatus wboot_order_index(double alpha, size_t b, size_t *out_l);

// Bootstrap-t bound `C^{(B)}` of kind 1-4 for a fixed sample.
enum WbootStatus wboot_build_bound(const struct WbootSample *sample,
                                   const struct WbootScheme *scheme,
                                   uint8_t kind,
                                   size_t b,
                                   double alpha,
                                   uint64_t seed,
                                   struct WbootBound *out_bound);

// Coverage of `T_n <= C^{(B)}` over `repetitions` fresh samples.
enum WbootStatus wboot_coverage(const struct WbootGenerator *generator,
                                const struct WbootScheme *scheme,
                                uint8_t kind,
                                size_t n,
                                size_t b,
                                double alpha,
                                size_t repetitions,
                                uint64_t seed,
                                struct WbootCoverage *out_coverage);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WBOOT_H */
