/* Minimal C consumer: read a dataset, fit a logistic curve, print the fit.
 *
 * Build (from the workspace root, after `cargo build --release -p growthss-ffi`):
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      target/release/libgrowthss_ffi.a -lm -o demo
 */
#include "growthss.h"

#include <stdio.h>

int main(int argc, char **argv) {
    const char *path = argc > 1 ? argv[1] : "data/greek_tractors.csv";
    char err[256];

    GssDataset *data = NULL;
    int rc = gss_dataset_read_csv(path, &data);
    if (rc != GSS_OK) {
        gss_last_error(err, sizeof err);
        fprintf(stderr, "read failed (%d): %s\n", rc, err);
        return 1;
    }
    printf("records: %zu\n", gss_dataset_len(data));

    GssFit *fit = NULL;
    rc = gss_fit(data, NULL, "logistic", "parametric", "none",
                 /*scale=*/1.0, /*seed=*/0, /*max_evals=*/0, /*multistart=*/0, &fit);
    if (rc != GSS_OK) {
        gss_last_error(err, sizeof err);
        fprintf(stderr, "fit failed (%d): %s\n", rc, err);
        gss_dataset_free(data);
        return rc;
    }

    printf("loglik %.4f  bic %.4f  n %zu  d %zu\n", gss_fit_loglik(fit),
           gss_fit_bic(fit), gss_fit_n_used(fit), gss_fit_diffuse_count(fit));
    printf("constant %.4f  scale %.4f  phi %.4f  rho %.4f\n",
           gss_fit_parameter(fit, "constant"), gss_fit_parameter(fit, "scale"),
           gss_fit_parameter(fit, "phi"), gss_fit_parameter(fit, "rho"));

    gss_fit_free(fit);
    gss_dataset_free(data);
    return 0;
}
