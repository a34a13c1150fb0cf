/* filterstab C API: filter-stability analysis for partially observed Markov
 * processes behind a plain C ABI.
 *
 * Conventions:
 *   - Every fallible call returns fs_status; FS_OK means the out-parameters
 *     are valid. On failure fs_last_error() describes the problem for the
 *     calling thread (pointer valid until the thread's next API call).
 *   - Objects returned through fs_*_new/load/run calls are owned by the
 *     caller and released with the matching fs_*_free.
 *   - Strings returned through char** out-parameters are released with
 *     fs_string_free.
 */
#ifndef FILTERSTAB_H
#define FILTERSTAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
  FS_OK = 0,
  FS_ERR_VALIDATION = 1, /* contract violation or invalid document */
  FS_ERR_IO = 2,         /* unreadable/unwritable file */
  FS_ERR_INTERNAL = 3
} fs_status;

int fs_api_version(void);
const char* fs_last_error(void);
void fs_string_free(char* s);

/* -------------------------------------------------------------------------
 * Models
 * ------------------------------------------------------------------------- */

typedef struct fs_model fs_model;

fs_status fs_model_load(const char* path, fs_model** out);
fs_status fs_model_parse(const char* json_text, fs_model** out);
fs_status fs_model_serialize(const fs_model* m, char** out_text);
const char* fs_model_name(const fs_model* m);
const char* fs_model_kind(const fs_model* m); /* "finite" or "gaussian1d" */
void fs_model_free(fs_model* m);

/* -------------------------------------------------------------------------
 * Stability analysis of a model
 * ------------------------------------------------------------------------- */

typedef struct fs_analysis fs_analysis;

fs_status fs_model_analyze(const fs_model* m, fs_analysis** out);
/* delta(T) for plain models, the per-action infimum for controlled ones. */
double fs_analysis_delta_t(const fs_analysis* a);
double fs_analysis_delta_q(const fs_analysis* a);
double fs_analysis_alpha(const fs_analysis* a);
int fs_analysis_is_stable(const fs_analysis* a);
int fs_analysis_is_controlled(const fs_analysis* a);
size_t fs_analysis_action_count(const fs_analysis* a);
fs_status fs_analysis_action(const fs_analysis* a, size_t index, const char** name_out,
                             double* delta_out);
/* 1 = transition kernel is mixing (epsilon written), 0 = not mixing. */
int fs_analysis_mixing(const fs_analysis* a, double* epsilon_out);
/* Literature baseline decay factor after m steps; only valid when mixing. */
fs_status fs_analysis_hilbert_factor(const fs_analysis* a, size_t m, double* out);
void fs_analysis_free(fs_analysis* a);

/* -------------------------------------------------------------------------
 * Monte Carlo dual-filter experiments
 * ------------------------------------------------------------------------- */

typedef struct fs_experiment fs_experiment;

/* Runs the experiment described by a config file (which references its model
 * by path). seed_override < 0 keeps the config seed; threads 0 = auto. */
fs_status fs_experiment_run_file(const char* config_path, long long seed_override,
                                 unsigned threads, fs_experiment** out);
size_t fs_experiment_steps(const fs_experiment* e); /* horizon + 1 */
double fs_experiment_mean_tv(const fs_experiment* e, size_t step);
double fs_experiment_std(const fs_experiment* e, size_t step);
double fs_experiment_ci95(const fs_experiment* e, size_t step);
double fs_experiment_envelope(const fs_experiment* e, size_t step);
/* 1 if the step ratio is defined (written to *ratio_out), else 0. */
int fs_experiment_ratio(const fs_experiment* e, size_t step, double* ratio_out);
double fs_experiment_delta_t(const fs_experiment* e);
double fs_experiment_delta_q(const fs_experiment* e);
double fs_experiment_alpha(const fs_experiment* e);
double fs_experiment_prior_tv(const fs_experiment* e);
size_t fs_experiment_total_trials(const fs_experiment* e);
size_t fs_experiment_excluded_trials(const fs_experiment* e);
int fs_experiment_exclusion_warning(const fs_experiment* e);
int fs_experiment_envelope_ok(const fs_experiment* e);
fs_status fs_experiment_csv(const fs_experiment* e, char** out_text);
void fs_experiment_free(fs_experiment* e);

/* -------------------------------------------------------------------------
 * Direct computations on caller-supplied data
 * ------------------------------------------------------------------------- */

fs_status fs_tv_distance(const double* p, const double* q, size_t n, double* out);
fs_status fs_dobrushin_finite(const double* row_major, size_t rows, size_t cols, double* out);
fs_status fs_mixing_coefficient(const double* row_major, size_t rows, size_t cols,
                                int* mixing_out, double* epsilon_out);
fs_status fs_expected_bayes_expansion(const double* mu, const double* nu, size_t n,
                                      const double* q_row_major, size_t n_symbols,
                                      double* out);
fs_status fs_dobrushin_gaussian(double bound, double sigma, double* out);
fs_status fs_contraction_coefficient(double delta_t, double delta_q, double* out);
fs_status fs_stability_envelope(size_t n, double delta_t, double delta_q, double tv0,
                                double* out);
fs_status fs_hilbert_baseline(double epsilon, size_t m, double* out);

typedef enum fs_ratio_kind {
  FS_RATIO_THRESHOLD = 0,    /* finite threshold written to *threshold_out */
  FS_RATIO_NOT_REQUIRED = 1, /* delta(T) already certifies stability */
  FS_RATIO_UNBOUNDED = 2     /* no finite measurement ratio suffices */
} fs_ratio_kind;

fs_status fs_min_measurement_ratio(double rt, double* threshold_out, fs_ratio_kind* kind_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FILTERSTAB_H */
