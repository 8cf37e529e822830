/* C interface to the bubble-simulation engine.
 *
 * Usage: create a handle, load or assemble a configuration, run one of the
 * entry points, then read results through the scalar/series accessors. All
 * functions returning int yield BSIM_OK (0) on success or a negative error
 * code; bsim_last_error() describes the most recent failure on the handle.
 */
#ifndef BUBBLESIM_C_H
#define BUBBLESIM_C_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct bsim bsim;

enum bsim_status {
    BSIM_OK = 0,
    BSIM_ERR_INVALID_ARG = -1,  /* bad pointer, unknown key, malformed value */
    BSIM_ERR_CONFIG = -2,       /* configuration failed validation */
    BSIM_ERR_RUNTIME = -3,      /* simulation raised (infeasible tables, ...) */
    BSIM_ERR_IO = -4,           /* file could not be read or written */
    BSIM_ERR_NO_RESULT = -5     /* accessor called before a successful run */
};

const char* bsim_version(void);

bsim* bsim_create(void);
void bsim_destroy(bsim* h);

/* Message for the last failed call on this handle; empty string if none. */
const char* bsim_last_error(const bsim* h);

/* Configuration: ordered "key = value" text. */
int bsim_config_load_file(bsim* h, const char* path);
int bsim_config_load_text(bsim* h, const char* text);
int bsim_config_set(bsim* h, const char* key, const char* value);
int bsim_config_write(bsim* h, const char* path);
/* Applies a named preset: figure1, figure2, figure3, figure3-tilt. */
int bsim_apply_preset(bsim* h, const char* name);
/* Writes the validation report into buf (truncating); returns the number of
 * hard errors through n_errors. BSIM_OK even when issues exist. */
int bsim_validate(bsim* h, char* buf, size_t buflen, int* n_errors);

/* Entry points. out_dir may be NULL to skip file output. */
int bsim_run(bsim* h, const char* out_dir);
int bsim_run_tilt(bsim* h, const char* out_dir);
int bsim_verify_martingale(bsim* h, const char* out_csv_path);
int bsim_matching_demo(bsim* h, const char* out_csv_path);

/* Result accessors. Scalar keys after bsim_run / bsim_run_tilt:
 *   paths, periods, wall_seconds, paths_per_second,
 *   mean_beta_1, se_beta_1, tilt_mean_beta_1, tilt_se_beta_1
 * after bsim_verify_martingale:
 *   periods, max_residual, max_mc_ratio, analytic_ok, mc_ok
 * after bsim_matching_demo:
 *   agents, pairs_formed
 * Series keys (length = periods + 1 unless noted):
 *   times, mean_beta, se_beta, mean_p_diff, se_p_diff,
 *   tilt_mean_beta, tilt_se_beta, q (length periods), residual (length periods)
 */
int bsim_result_scalar(bsim* h, const char* key, double* out);
int bsim_result_series(bsim* h, const char* key, double* buf, int cap, int* len);

#ifdef __cplusplus
}
#endif

#endif
