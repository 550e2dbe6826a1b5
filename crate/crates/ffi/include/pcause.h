/* C interface to the pcause probability-of-causation library. */

#ifndef PCAUSE_H
#define PCAUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Whether pool elements may be matched repeatedly.
typedef enum PcMatchMode {
  PC_MATCH_MODE_WITH_REPLACEMENT = 0,
  PC_MATCH_MODE_BALANCED_ASSIGNMENT = 1,
} PcMatchMode;

// Distance metric used when matching exposed deaths to the unexposed pool.
typedef enum PcMetric {
  PC_METRIC_EUCLIDEAN_STANDARDIZED = 0,
  PC_METRIC_ABSOLUTE_DIFFERENCE = 1,
  PC_METRIC_MAHALANOBIS = 2,
  PC_METRIC_IDENTITY_THRESHOLD = 3,
} PcMetric;

// Which regime a 2x2 table was collected under.
typedef enum PcRegime {
  PC_REGIME_EXPERIMENTAL = 0,
  PC_REGIME_OBSERVATIONAL = 1,
} PcRegime;

// Result of a library call. Anything other than `Ok` leaves a description
// in `pc_last_error_message`.
typedef enum PcStatus {
  // The call succeeded.
  PC_STATUS_OK = 0,
  // A required pointer argument was null.
  PC_STATUS_NULL_ARGUMENT = 1,
  // A byte buffer was not valid UTF-8.
  PC_STATUS_INVALID_UTF8 = 2,
  // Input text could not be parsed; the message carries source and line.
  PC_STATUS_PARSE_ERROR = 3,
  // A parameter sat outside its documented domain.
  PC_STATUS_DOMAIN_ERROR = 4,
  // The computation itself was impossible on this data (empty cells,
  // undefined ratios, infeasible assumptions, and so on).
  PC_STATUS_ESTIMATION_ERROR = 5,
} PcStatus;

// Handling of distance ties at the m-th match.
typedef enum PcTieRule {
  PC_TIE_RULE_FRACTIONAL = 0,
  PC_TIE_RULE_LOWEST_ID = 1,
} PcTieRule;

// A loaded unit dataset. Opaque; create with `pc_dataset_from_csv` or
// `pc_dataset_example1`, release with `pc_dataset_free`.
typedef struct PcDataset PcDataset;

// Matching configuration. Obtain defaults from `pc_match_options_default`
// and adjust the fields you need; `threshold_t` is NaN when unset.
typedef struct PcMatchOptions {
  enum PcMetric metric;
  // Matches taken per exposed death (at least 1).
  size_t m;
  enum PcTieRule tie_rule;
  enum PcMatchMode mode;
  // Similarity cutoff in [0, 1] for the identity-threshold metric; NaN
  // means unset.
  double threshold_t;
} PcMatchOptions;

// A 2x2 exposure-by-outcome table. `n_xy` counts exposed units with the
// outcome, `n_x_not_y_not` unexposed units without it.
typedef struct PcTable {
  uint64_t n_xy;
  uint64_t n_xy_not;
  uint64_t n_x_not_y;
  uint64_t n_x_not_y_not;
  enum PcRegime regime;
} PcTable;

// A PC estimate with its diagnostics.
typedef struct PcEstimate {
  // Fraction of match credit landing in the unexposed survivors.
  double pc_raw;
  // pc_raw clipped into the theoretical bounds.
  double pc_clamped;
  // Transition coefficient a (fraction of A matched into D).
  double a;
  // Transition coefficient b (fraction of B matched into D).
  double b;
  // Risk ratio; +infinity when no unexposed deaths exist.
  double rr;
  double bound_lower;
  double bound_upper;
  // Set sizes: unexposed survivors, unexposed deaths, exposed survivors,
  // exposed deaths.
  uint64_t count_a;
  uint64_t count_b;
  uint64_t count_c;
  uint64_t count_d;
  // True when pc_raw fell meaningfully outside the bounds.
  bool out_of_bounds;
  // False when the two exposure arms differ in size.
  bool arms_balanced;
} PcEstimate;

// Probability-of-necessity bounds, raw and clipped to [0, 1].
typedef struct PcPnBounds {
  double pn_lower;
  double pn_upper;
  double raw_lower;
  double raw_upper;
} PcPnBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message for the most recent failing call on this thread, or an empty
// string after a success. The pointer stays valid until the next pcause
// call on the same thread; copy the string if you need it longer.
const char *pc_last_error_message(void);

// The library version as a static NUL-terminated string.
const char *pc_version(void);

// The default matching configuration: one standardized-euclidean match per
// exposed death, fractional ties, with replacement.
struct PcMatchOptions pc_match_options_default(void);

// Parses a unit dataset from CSV bytes (header `id,x,y,<covariates...>`)
// and stores a new handle in `*out`.
//
// # Safety
//
// `bytes` must point to `len` readable bytes and `out` to a writable
// `PcDataset*`. On success the caller owns the handle and must release it
// with `pc_dataset_free`.
enum PcStatus pc_dataset_from_csv(const uint8_t *bytes, size_t len, struct PcDataset **out);

// Generates a uniform-Id synthetic dataset (`n_per_arm` units per exposure
// arm, unexposed survivor fraction `ab_split`, exposed survivor fraction
// `cd_split`) and stores a new handle in `*out`.
//
// # Safety
//
// `out` must point to a writable `PcDataset*`. On success the caller owns
// the handle and must release it with `pc_dataset_free`.
enum PcStatus pc_dataset_example1(size_t n_per_arm,
                                  double ab_split,
                                  double cd_split,
                                  uint64_t seed,
                                  struct PcDataset **out);

// Number of units in a dataset; 0 for a null handle.
//
// # Safety
//
// `ds` must be null or a live handle from this library.
size_t pc_dataset_len(const struct PcDataset *ds);

// Releases a dataset handle. Null is ignored.
//
// # Safety
//
// `ds` must be null or a handle obtained from this library that has not
// already been freed.
void pc_dataset_free(struct PcDataset *ds);

// Tabulates a dataset into a 2x2 exposure-by-outcome table labeled with
// `regime`.
//
// # Safety
//
// `ds` must be a live handle and `out` a writable `PcTable`.
enum PcStatus pc_dataset_table(const struct PcDataset *ds,
                               enum PcRegime regime,
                               struct PcTable *out);

// Estimates the probability of causation on a dataset by covariate
// matching. `options` may be null for the defaults.
//
// # Safety
//
// `ds` must be a live handle, `options` null or a readable
// `PcMatchOptions`, and `out` a writable `PcEstimate`.
enum PcStatus pc_estimate(const struct PcDataset *ds,
                          const struct PcMatchOptions *options,
                          struct PcEstimate *out);

// Theoretical bounds on the probability of causation from a 2x2 table.
//
// # Safety
//
// `table` must be readable; `lower` and `upper` must be writable doubles.
enum PcStatus pc_bounds_from_table(const struct PcTable *table, double *lower, double *upper);

// Probability-of-necessity bounds from an experimental and an
// observational 2x2 table. The tables must carry the matching regimes.
//
// # Safety
//
// `experimental` and `observational` must be readable and `out` a writable
// `PcPnBounds`.
enum PcStatus pc_pn_bounds(const struct PcTable *experimental,
                           const struct PcTable *observational,
                           struct PcPnBounds *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PCAUSE_H */
