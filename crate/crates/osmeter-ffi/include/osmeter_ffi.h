#ifndef OSMETER_FFI_H
#define OSMETER_FFI_H

/* Generated by cbindgen from the osmeter-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes for every fallible entry point.
 */
typedef enum OsmStatus {
  OSM_STATUS_OK = 0,
  OSM_STATUS_NULL_ARGUMENT = 1,
  OSM_STATUS_INVALID_ARGUMENT = 2,
  OSM_STATUS_COMPUTATION_FAILED = 3,
  OSM_STATUS_BUFFER_TOO_SMALL = 4,
  OSM_STATUS_INVALID_UTF8 = 5,
} OsmStatus;

/*
 Host categories mirrored as a C enum.
 */
typedef enum OsmHostCategory {
  OSM_HOST_CATEGORY_CODE_HOST = 0,
  OSM_HOST_CATEGORY_OPEN_REPO_DOI = 1,
  OSM_HOST_CATEGORY_GOV_OPEN_DATA = 2,
  OSM_HOST_CATEGORY_UNIVERSITY_REPO = 3,
  OSM_HOST_CATEGORY_BENCHMARK_HUB = 4,
  OSM_HOST_CATEGORY_NGO_NONPROFIT = 5,
  OSM_HOST_CATEGORY_OTHER_WEB = 6,
} OsmHostCategory;

/*
 Opaque handle to a fitted binary logit model.
 */
typedef struct OsmLogitFit OsmLogitFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Adjusted likelihood ratio index 1 - (L_final - K) / L_null.
 Requires L_null < 0; returns NaN otherwise.
 */
double osm_adjusted_rho2(double loglik_final, double loglik_null, uintptr_t k);

/*
 Chi-square survival function; NaN on a non-positive df.
 */
double osm_chi2_sf(double x, double df);

/*
 Standard normal survival function.
 */
double osm_normal_sf(double z);

/*
 Cohen's kappa between two boolean label columns (0/1 bytes).

 # Safety
 `a` and `b` must point to `len` readable bytes; `out` must be writable.
 */
enum OsmStatus osm_cohen_kappa(const uint8_t *a, const uint8_t *b, uintptr_t len, double *out);

/*
 Fleiss's kappa over an item-major boolean grid (n_items x n_raters).

 # Safety
 `labels` must point to `n_items * n_raters` readable bytes.
 */
enum OsmStatus osm_fleiss_kappa(const uint8_t *labels,
                                uintptr_t n_items,
                                uintptr_t n_raters,
                                double *out);

/*
 Overall percentage agreement (all raters match) over the same grid shape
 as [`osm_fleiss_kappa`].

 # Safety
 `labels` must point to `n_items * n_raters` readable bytes.
 */
enum OsmStatus osm_percentage_agreement(const uint8_t *labels,
                                        uintptr_t n_items,
                                        uintptr_t n_raters,
                                        double *out);

/*
 Landis-Koch band label for a kappa value, NUL-terminated.

 # Safety
 `buf` must be writable for `buf_len` bytes.
 */
enum OsmStatus osm_kappa_band(double kappa, char *buf, uintptr_t buf_len);

/*
 Welch's t-test from group summaries; outputs t, two-sided p, and the 95%
 CI bounds of mean_a - mean_b.

 # Safety
 All out-pointers must be writable.
 */
enum OsmStatus osm_welch_t_test(double mean_a,
                                double sd_a,
                                uintptr_t n_a,
                                double mean_b,
                                double sd_b,
                                uintptr_t n_b,
                                double *t_out,
                                double *p_out,
                                double *ci_lo_out,
                                double *ci_hi_out);

/*
 Canonical form of a URL, NUL-terminated.

 # Safety
 `url` must be a NUL-terminated string; `buf` writable for `buf_len` bytes.
 */
enum OsmStatus osm_canonize_url(const char *url, char *buf, uintptr_t buf_len);

/*
 Host category of a canonical URL.

 # Safety
 `url` must be a NUL-terminated string; `out` writable.
 */
enum OsmStatus osm_classify_host(const char *url, enum OsmHostCategory *out);

/*
 Fit a binary logit by maximum likelihood.

 `design` is row-major n_obs x n_cols with the intercept as the first
 column; `outcome` holds 0/1 bytes. On success `*out` owns the fit and
 must be released with [`osm_logit_fit_free`].

 # Safety
 `design` must point to `n_obs * n_cols` doubles, `outcome` to `n_obs`
 bytes, `out` must be writable.
 */
enum OsmStatus osm_logit_fit(const double *design,
                             uintptr_t n_obs,
                             uintptr_t n_cols,
                             const uint8_t *outcome,
                             struct OsmLogitFit **out);

/*
 Number of fitted parameters.

 # Safety
 `fit` must be a live handle from [`osm_logit_fit`].
 */
uintptr_t osm_logit_n_params(const struct OsmLogitFit *fit);

/*
 Coefficient estimate at `index`.

 # Safety
 `fit` must be a live handle; `out` writable.
 */
enum OsmStatus osm_logit_coefficient(const struct OsmLogitFit *fit, uintptr_t index, double *out);

/*
 Classical standard error at `index`.

 # Safety
 `fit` must be a live handle; `out` writable.
 */
enum OsmStatus osm_logit_classical_se(const struct OsmLogitFit *fit, uintptr_t index, double *out);

/*
 Robust (sandwich) standard error at `index`.

 # Safety
 `fit` must be a live handle; `out` writable.
 */
enum OsmStatus osm_logit_robust_se(const struct OsmLogitFit *fit, uintptr_t index, double *out);

/*
 Final and intercept-only log-likelihoods.

 # Safety
 `fit` must be a live handle; out-pointers writable.
 */
enum OsmStatus osm_logit_loglik(const struct OsmLogitFit *fit, double *final_out, double *null_out);

/*
 1 when the optimizer met its gradient tolerance.

 # Safety
 `fit` must be a live handle.
 */
int32_t osm_logit_converged(const struct OsmLogitFit *fit);

/*
 Release a fit handle. Passing NULL is a no-op.

 # Safety
 `fit` must be NULL or a handle from [`osm_logit_fit`], not yet freed.
 */
void osm_logit_fit_free(struct OsmLogitFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSMETER_FFI_H */
