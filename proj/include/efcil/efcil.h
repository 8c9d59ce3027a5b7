/* C interface to the EFCIL laboratory.
 *
 * Every function that can fail returns an efcil_status; on failure the
 * message is available from efcil_last_error() on the same thread until the
 * next call. Objects are opaque handles released with their _free function.
 * Strings are returned through caller buffers: `needed` receives the full
 * length plus the terminating NUL, and the copy is truncated to `capacity`.
 */
#ifndef EFCIL_EFCIL_H
#define EFCIL_EFCIL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(EFCIL_BUILDING_LIBRARY)
#    define EFCIL_API __declspec(dllexport)
#  else
#    define EFCIL_API __declspec(dllimport)
#  endif
#else
#  define EFCIL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum efcil_status {
  EFCIL_OK = 0,
  EFCIL_ERR_INVALID_ARGUMENT = 1,
  EFCIL_ERR_PARSE = 2,
  EFCIL_ERR_IO = 3,
  EFCIL_ERR_NUMERIC = 4,
  EFCIL_ERR_CONFIG = 5,
  EFCIL_ERR_INFEASIBLE = 6,
  EFCIL_ERR_INTERNAL = 7
} efcil_status;

typedef enum efcil_scenario_kind { EFCIL_SCENARIO_EQUAL = 0, EFCIL_SCENARIO_HALF = 1 } efcil_scenario_kind;

typedef enum efcil_learner_kind {
  EFCIL_LEARNER_DSLDA = 0,
  EFCIL_LEARNER_FETRIL = 1,
  EFCIL_LEARNER_BSIL = 2,
  EFCIL_LEARNER_NCM = 3
} efcil_learner_kind;

typedef struct efcil_dataset efcil_dataset;
typedef struct efcil_scenario efcil_scenario;
typedef struct efcil_accuracy efcil_accuracy;

EFCIL_API const char* efcil_version(void);
EFCIL_API const char* efcil_last_error(void);
EFCIL_API const char* efcil_status_name(efcil_status status);

/* ---- datasets ----------------------------------------------------------- */

typedef struct efcil_synth_spec {
  const char* name;
  int n_classes;
  int dim;
  int n_train;
  int n_test;
  double separation;
  double anisotropy;
  uint64_t seed;
} efcil_synth_spec;

typedef struct efcil_dataset_stats {
  int n_classes;
  double n_mean;
  double sigma_train;
  double mu_test;
  double sigma_test;
  int small;
  double width;
} efcil_dataset_stats;

EFCIL_API efcil_status efcil_dataset_synth(const efcil_synth_spec* spec, efcil_dataset** out);
EFCIL_API efcil_status efcil_dataset_load(const char* path, efcil_dataset** out);
EFCIL_API efcil_status efcil_dataset_save(const efcil_dataset* ds, const char* path);
EFCIL_API efcil_status efcil_dataset_shape(const efcil_dataset* ds, size_t* samples, size_t* dim, size_t* classes);
EFCIL_API efcil_status efcil_dataset_stats_get(const efcil_dataset* ds, efcil_dataset_stats* out);
/* Copies the sorted class ids; `count` receives the number of classes. */
EFCIL_API efcil_status efcil_dataset_classes(const efcil_dataset* ds, int32_t* ids, size_t capacity, size_t* count);
EFCIL_API void efcil_dataset_free(efcil_dataset* ds);

/* ---- scenarios ---------------------------------------------------------- */

EFCIL_API efcil_status efcil_scenario_build(const int32_t* class_ids, size_t n, efcil_scenario_kind kind,
                                            int n_incr_steps, uint64_t seed, efcil_scenario** out);
EFCIL_API size_t efcil_scenario_steps(const efcil_scenario* sc);
EFCIL_API efcil_status efcil_scenario_step(const efcil_scenario* sc, size_t step, int32_t* ids, size_t capacity,
                                           size_t* count);
EFCIL_API efcil_status efcil_scenario_b(const efcil_scenario* sc, int64_t* numerator, int64_t* denominator);
EFCIL_API efcil_status efcil_scenario_text(const efcil_scenario* sc, char* buffer, size_t capacity, size_t* needed);
EFCIL_API void efcil_scenario_free(efcil_scenario* sc);

/* ---- learners and accuracy matrices ------------------------------------- */

typedef struct efcil_learner_params {
  double dslda_shrinkage;
  double fetril_learning_rate;
  int fetril_epochs;
  double fetril_weight_decay;
  double bsil_learning_rate;
  int bsil_epochs;
  double bsil_anchor_weight;
  double bsil_initial_scale;
  uint64_t seed;
} efcil_learner_params;

EFCIL_API void efcil_learner_params_default(efcil_learner_params* params);

EFCIL_API efcil_status efcil_run_incremental(efcil_learner_kind kind, const efcil_dataset* ds,
                                             const efcil_scenario* sc, const efcil_learner_params* params,
                                             efcil_accuracy** out);

/* Steps and subsets are 0-based; subset <= step. */
EFCIL_API efcil_status efcil_accuracy_create(size_t steps, efcil_accuracy** out);
EFCIL_API size_t efcil_accuracy_steps(const efcil_accuracy* acc);
EFCIL_API efcil_status efcil_accuracy_set(efcil_accuracy* acc, size_t step, size_t subset, double value);
EFCIL_API efcil_status efcil_accuracy_get(const efcil_accuracy* acc, size_t step, size_t subset, double* value);
EFCIL_API efcil_status efcil_accuracy_set_cumulative(efcil_accuracy* acc, size_t step, double value);
EFCIL_API efcil_status efcil_accuracy_get_cumulative(const efcil_accuracy* acc, size_t step, double* value);
EFCIL_API efcil_status efcil_accuracy_csv(const efcil_accuracy* acc, char* buffer, size_t capacity, size_t* needed);
EFCIL_API void efcil_accuracy_free(efcil_accuracy* acc);

/* ---- metrics ------------------------------------------------------------ */

typedef struct efcil_metric_set {
  double acc1;
  double avg_acc;
  double forgetting;
  double acc_k;
} efcil_metric_set;

/* b = b_num / b_den is the class fraction of the first step. */
EFCIL_API efcil_status efcil_metrics_compute(const efcil_accuracy* acc, int64_t b_num, int64_t b_den,
                                             efcil_metric_set* out);

/* ---- statistics --------------------------------------------------------- */

/* Least squares on a row-major n x p design (include an intercept column
 * yourself). Any output pointer may be NULL; arrays hold p entries. */
EFCIL_API efcil_status efcil_ols(const double* x_row_major, const double* y, size_t n, size_t p, double* coefficients,
                                 double* std_errors, double* p_values, double* r2, double* aic);
EFCIL_API efcil_status efcil_student_t_pvalue(double t, double df, double* p);
EFCIL_API efcil_status efcil_f_pvalue(double f, double df1, double df2, double* p);
EFCIL_API efcil_status efcil_inv_norm_cdf(double q, double* x);
/* Smallest eigenvalue of a symmetric row-major n x n matrix (cyclic Jacobi). */
EFCIL_API efcil_status efcil_min_eigenvalue(const double* a_row_major, size_t n, double* value);

/* ---- pipeline commands -------------------------------------------------- */

typedef struct efcil_command_options {
  const char* config;         /* config document path */
  const char* out;            /* output directory */
  int has_seed;
  uint64_t seed;              /* replaces base_seed when has_seed */
  unsigned jobs;              /* 0: one worker per logical core */
  int has_alpha;
  double alpha;
  int force_mixed;
  const char* const* results; /* analyze: results.csv paths */
  size_t n_results;
  const char* bundle;         /* report: bundle.json path */
  const char* formats;        /* "csv,md,svg" subset; NULL for all */
  const char* data;           /* run: cell selection, NULL for any */
  const char* train;
  const char* incr;
  const char* scenario;
  int has_rep;
  int rep;
} efcil_command_options;

EFCIL_API void efcil_command_options_init(efcil_command_options* options);

/* Each returns the process exit code: 0 success, 1 usage or config error,
 * 2 grid completed with failed runs, 3 analysis infeasible. The summary or
 * error text is available from efcil_last_message(). */
EFCIL_API int efcil_cmd_synth(const efcil_command_options* options);
EFCIL_API int efcil_cmd_run(const efcil_command_options* options);
EFCIL_API int efcil_cmd_grid(const efcil_command_options* options);
EFCIL_API int efcil_cmd_analyze(const efcil_command_options* options);
EFCIL_API int efcil_cmd_report(const efcil_command_options* options);
EFCIL_API const char* efcil_last_message(void);

#ifdef __cplusplus
}
#endif

#endif /* EFCIL_EFCIL_H */
