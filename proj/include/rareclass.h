/* C interface to the rareclass library.
 *
 * Conventions: every fallible call returns rc_status and leaves a
 * human-readable message for the calling thread in rc_last_error() on
 * failure. Out-parameters are written only on RC_OK. Handles are opaque;
 * free them with the matching rc_*_free (NULL is tolerated). Returned
 * strings and buffers belong to the library: release them with
 * rc_string_free / rc_buffer_free. Pointers returned by accessor calls
 * stay valid until their handle is freed.
 *
 * Missing values travel as NaN at this boundary (out-of-bag probabilities
 * for never-excluded rows, undefined FAR/TS ratios); files render them as
 * empty cells.
 */
#ifndef RARECLASS_H
#define RARECLASS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RC_API __declspec(dllexport)
#else
#define RC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rc_status {
  RC_OK = 0,
  RC_ERR_IO = 1,
  RC_ERR_PARSE = 2,
  RC_ERR_SCHEMA = 3,
  RC_ERR_LABEL = 4,
  RC_ERR_STRUCTURE = 5,
  RC_ERR_DOMAIN = 6,
  RC_ERR_SINGULAR = 7,
  RC_ERR_DEGENERATE = 8,
  RC_ERR_MISMATCH = 9,
  RC_ERR_INVALID_ARGUMENT = 10,
  RC_ERR_CALIBRATION = 11,
  RC_ERR_INTERNAL = 12
} rc_status;

/* Short lowercase tag for a status ("io", "parse", ...). */
RC_API const char* rc_status_name(rc_status status);

/* Message from the calling thread's last failing call; empty after success. */
RC_API const char* rc_last_error(void);

/* Worker-thread cap for forest fitting and other parallel loops.
 * 0 restores the hardware default. Results never depend on this. */
RC_API void rc_set_max_threads(unsigned n);

RC_API void rc_string_free(char* s);
RC_API void rc_buffer_free(void* p);

/* ---- datasets ---------------------------------------------------------- */

typedef struct rc_dataset rc_dataset;

RC_API rc_status rc_dataset_load_csv(const char* path, rc_dataset** out);
RC_API rc_status rc_dataset_write_csv(const rc_dataset* data, const char* path);

/* Standard-normal features, Bernoulli labels through the logistic link with
 * the intercept calibrated to target_prevalence, then independent label
 * flips at mislabel_rate. coefficients must have length p. When
 * use_canonical_schema is nonzero, p must be 41 and the canonical column
 * names are used. */
RC_API rc_status rc_dataset_synth(size_t n, size_t p, const double* coefficients,
                                  double target_prevalence, double mislabel_rate,
                                  uint64_t seed, int use_canonical_schema,
                                  rc_dataset** out);

/* Keeps all minority rows and draws majority rows without replacement so
 * that #minority / #majority-kept is as close to ratio as possible. */
RC_API rc_status rc_dataset_rebalance(const rc_dataset* data, double ratio,
                                      uint64_t seed, rc_dataset** out);

RC_API size_t rc_dataset_rows(const rc_dataset* data);
RC_API size_t rc_dataset_cols(const rc_dataset* data);
RC_API rc_status rc_dataset_class_counts(const rc_dataset* data, size_t* n_pos,
                                         size_t* n_neg, double* prevalence);
/* labels_out must hold rc_dataset_rows(data) ints. */
RC_API rc_status rc_dataset_labels(const rc_dataset* data, int* labels_out);
RC_API void rc_dataset_free(rc_dataset* data);

/* Number of canonical schema column names (41) and the i-th name. */
RC_API size_t rc_schema_size(void);
RC_API const char* rc_schema_name(size_t i);

/* ---- logistic regression ----------------------------------------------- */

typedef struct rc_logistic rc_logistic;

/* Maximum-likelihood fit on all columns; with stepwise nonzero, runs the
 * bidirectional AIC search from the full model instead. */
RC_API rc_status rc_logistic_fit(const rc_dataset* data, int stepwise,
                                 rc_logistic** out);
RC_API rc_status rc_logistic_save(const rc_logistic* model, const char* path);
RC_API rc_status rc_logistic_load(const char* path, rc_logistic** out);
/* probs_out must hold rc_dataset_rows(data) doubles. */
RC_API rc_status rc_logistic_predict(const rc_logistic* model,
                                     const rc_dataset* data, double* probs_out);

RC_API double rc_logistic_intercept(const rc_logistic* model);
RC_API size_t rc_logistic_n_coefficients(const rc_logistic* model);
RC_API rc_status rc_logistic_coefficient(const rc_logistic* model, size_t i,
                                         const char** name_out, double* value_out);
RC_API rc_status rc_logistic_fit_info(const rc_logistic* model,
                                      double* log_likelihood_out, double* aic_out,
                                      int* converged_out);

/* Stepwise trace: entry 0 is the starting model ("start"), later entries one
 * accepted move each ("drop"/"add" plus the feature). Size 0 for plain fits
 * and loaded models. */
RC_API size_t rc_logistic_trace_size(const rc_logistic* model);
RC_API rc_status rc_logistic_trace_entry(const rc_logistic* model, size_t i,
                                         const char** action_out,
                                         const char** feature_out, double* aic_out);
/* Diagnostics for candidate fits the search had to discard. */
RC_API size_t rc_logistic_n_notes(const rc_logistic* model);
RC_API const char* rc_logistic_note(const rc_logistic* model, size_t i);
RC_API void rc_logistic_free(rc_logistic* model);

/* ---- random forest ------------------------------------------------------ */

typedef struct rc_forest rc_forest;

/* mtry 0 means floor(sqrt(p)); bootstrap_size 0 means n. */
RC_API rc_status rc_forest_fit(const rc_dataset* data, size_t n_trees, size_t mtry,
                               size_t bootstrap_size, size_t min_node_size,
                               uint64_t seed, rc_forest** out);
RC_API rc_status rc_forest_save(const rc_forest* model, const char* path);
RC_API rc_status rc_forest_load(const char* path, rc_forest** out);
/* probs_out must hold rc_dataset_rows(data) doubles. */
RC_API rc_status rc_forest_predict(const rc_forest* model, const rc_dataset* data,
                                   double* probs_out);
/* Out-of-bag vote proportions against the training dataset; rows that every
 * tree saw come back as NaN. probs_out as above. */
RC_API rc_status rc_forest_oob(const rc_forest* model, const rc_dataset* data,
                               double* probs_out);
/* Out-of-bag misclassification at threshold 0.5 after 1..n_trees trees;
 * curve_out must hold n_trees doubles. */
RC_API rc_status rc_forest_oob_curve(const rc_forest* model, const rc_dataset* data,
                                     double* curve_out);

RC_API rc_status rc_forest_config(const rc_forest* model, size_t* n_trees,
                                  size_t* mtry, size_t* bootstrap_size,
                                  size_t* min_node_size, uint64_t* master_seed);
RC_API rc_status rc_forest_shape(const rc_forest* model, size_t* n_rows,
                                 size_t* n_features);
RC_API void rc_forest_free(rc_forest* model);

/* Sniffs which model format a JSON file holds. kind_out: 0 logistic,
 * 1 forest. */
RC_API rc_status rc_model_probe(const char* path, int* kind_out);

/* ---- metrics and analysis ---------------------------------------------- */

/* counts are ordered hits, false_alarms, misses, correct_rejections. */
RC_API rc_status rc_confusion(const double* probs, const int* labels, size_t n,
                              double threshold, size_t counts_out[4]);
/* Derived rates; undefined ratios come back as NaN. Any output may be NULL. */
RC_API void rc_rates(const size_t counts[4], double* far_out, double* ts_out,
                     double* sensitivity_out, double* specificity_out);
RC_API rc_status rc_auc(const double* probs, const int* labels, size_t n,
                        double* auc_out);
/* Sweep-grid point with the highest TS among those with FAR <= max_far
 * (ties: lower FAR, then lower threshold). RC_ERR_DEGENERATE when no grid
 * point qualifies. Any output may be NULL. */
RC_API rc_status rc_best_operating_point(const double* probs, const int* labels,
                                         size_t n, size_t n_points, double max_far,
                                         double* threshold_out, double* far_out,
                                         double* ts_out);
RC_API rc_status rc_kendall(const double* a, const double* b, size_t n,
                            double* tau_out, double* p_value_out);
/* The order-preserving probability rescaling; anchors must lie in (0,1]. */
RC_API rc_status rc_rescale(const double* in, size_t n, double low_anchor,
                            double high_anchor, double* out);

/* ---- files and reports -------------------------------------------------- */

RC_API rc_status rc_prob_write(const double* probs, size_t n, const char* path);
/* Allocates *probs_out (rc_buffer_free); empty cells read back as NaN. */
RC_API rc_status rc_prob_read(const char* path, double** probs_out, size_t* n_out);
/* Labels from the trailing "cv" column of any CSV. Allocates *labels_out. */
RC_API rc_status rc_labels_read(const char* path, int** labels_out, size_t* n_out);
RC_API rc_status rc_oob_curve_write(const double* curve, size_t n,
                                    const char* csv_path, const char* svg_path);

/* Full evaluation artifact set under report_dir (confusion.csv, sweep.csv,
 * roc.csv, densities.csv, histograms.csv plus the four charts). Rows with
 * NaN probabilities are dropped and counted; degenerate labels degrade the
 * report instead of failing it. notes_out (optional) receives a
 * newline-joined block of "warning:" and "wrote:" lines. auc_out is NaN
 * when the ROC was skipped. */
RC_API rc_status rc_report_evaluate(const double* probs, const int* labels,
                                    size_t n, double threshold, size_t n_points,
                                    const char* report_dir, size_t counts_out[4],
                                    double* auc_out, size_t* n_used_out,
                                    size_t* n_dropped_out, char** notes_out);

/* compare.csv plus the overlay chart with both operating points marked. */
RC_API rc_status rc_report_compare(const double* probs_a, const int* labels_a,
                                   size_t n_a, const double* probs_b,
                                   const int* labels_b, size_t n_b,
                                   double threshold, size_t n_points,
                                   const char* report_dir, char** notes_out);

#ifdef __cplusplus
}
#endif

#endif /* RARECLASS_H */
