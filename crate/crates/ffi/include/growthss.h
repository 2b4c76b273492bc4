/* C interface to the growthss growth-curve fitting library. */

#ifndef GROWTHSS_H
#define GROWTHSS_H

/* Generated by cbindgen from growthss-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Success.
 */
#define GSS_OK 0

/*
 Invalid arguments, unknown names, or malformed input data.
 */
#define GSS_ERR_USAGE 1

/*
 Numerical failure (likelihood not evaluable, non-convergence guards).
 */
#define GSS_ERR_NUMERIC 2

/*
 File system or parse failure.
 */
#define GSS_ERR_IO 3

/*
 A required pointer argument was null.
 */
#define GSS_ERR_NULL 4

/*
 A string argument was not valid UTF-8.
 */
#define GSS_ERR_UTF8 5

/*
 Long-format longitudinal dataset handle.
 */
typedef struct GssDataset GssDataset;

/*
 Fitted-model handle.
 */
typedef struct GssFit GssFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copy the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length in bytes, not
 counting the terminator.
 */
size_t gss_last_error(char *buf, size_t len);

/*
 Library version as a static string.
 */
const char *gss_version(void);

/*
 Read a long-format CSV (columns group,replicate,time,value) into a new
 dataset handle.
 */
int gss_dataset_read_csv(const char *path, struct GssDataset **out);

/*
 Number of records in the dataset.
 */
size_t gss_dataset_len(const struct GssDataset *data);

void gss_dataset_free(struct GssDataset *data);

/*
 Fit one model by maximum marginal likelihood.

 `group` may be null when the dataset holds a single group. `family` is
 one of linear/exponential/logistic/gompertz/richards; `mode` is
 parametric or semiparametric; `deviations` is none or random-walk.
 `scale` multiplies all values at ingest (pass 1.0 for none). Pass 0 for
 `max_evals`/`multistart` to use the defaults.
 */
int gss_fit(const struct GssDataset *data,
            const char *group,
            const char *family,
            const char *mode,
            const char *deviations,
            double scale,
            uint64_t seed,
            size_t max_evals,
            size_t multistart,
            struct GssFit **out);

void gss_fit_free(struct GssFit *fit);

/*
 Marginal log-likelihood of the fit (NaN for a null handle).
 */
double gss_fit_loglik(const struct GssFit *fit);

double gss_fit_bic(const struct GssFit *fit);

/*
 Non-missing scalar observations used by the fit.
 */
size_t gss_fit_n_used(const struct GssFit *fit);

/*
 Absorbed diffuse dimension.
 */
size_t gss_fit_diffuse_count(const struct GssFit *fit);

/*
 Estimated parameter by name (phi, rho, nu, sigma2_eps, sigma2_eta,
 sigma2_dev, constant, scale). NaN when absent or not applicable.
 */
double gss_fit_parameter(const struct GssFit *fit, const char *name);

/*
 Number of grid times of the smoothed mean curve.
 */
size_t gss_fit_curve_len(const struct GssFit *fit);

/*
 Copy the smoothed mean curve into caller-provided arrays of length
 `len` (from `gss_fit_curve_len`). Any of the output pointers may be
 null to skip that column.
 */
int gss_fit_mean_curve(const struct GssFit *fit,
                       double *times,
                       double *estimates,
                       double *variances,
                       size_t len);

/*
 Write the fit as a JSON artifact (the same format the CLI produces).
 */
int gss_fit_write_artifact(const struct GssFit *fit, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROWTHSS_H */
