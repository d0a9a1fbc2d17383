#include "rareclass.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rareclass/analysis.hpp"
#include "rareclass/dataset.hpp"
#include "rareclass/error.hpp"
#include "rareclass/forest.hpp"
#include "rareclass/logistic.hpp"
#include "rareclass/metrics.hpp"
#include "rareclass/parallel.hpp"
#include "rareclass/report.hpp"

struct rc_dataset {
  rareclass::Dataset data;
};

struct rc_logistic {
  rareclass::LogisticModel model;
  rareclass::FitReport report;
  std::vector<rareclass::StepRecord> trace;
  std::vector<std::string> notes;
};

struct rc_forest {
  rareclass::ForestModel model;
};

namespace {

using rareclass::Error;
using rareclass::ErrorKind;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string& tl_error() {
  static thread_local std::string message;
  return message;
}

rc_status map_kind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
      return RC_ERR_IO;
    case ErrorKind::parse:
      return RC_ERR_PARSE;
    case ErrorKind::schema:
      return RC_ERR_SCHEMA;
    case ErrorKind::label:
      return RC_ERR_LABEL;
    case ErrorKind::structure:
      return RC_ERR_STRUCTURE;
    case ErrorKind::domain:
      return RC_ERR_DOMAIN;
    case ErrorKind::singular:
      return RC_ERR_SINGULAR;
    case ErrorKind::degenerate:
      return RC_ERR_DEGENERATE;
    case ErrorKind::mismatch:
      return RC_ERR_MISMATCH;
    case ErrorKind::invalid_argument:
      return RC_ERR_INVALID_ARGUMENT;
    case ErrorKind::calibration:
      return RC_ERR_CALIBRATION;
  }
  return RC_ERR_INTERNAL;
}

template <typename Fn>
rc_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    tl_error().clear();
    return RC_OK;
  } catch (const Error& e) {
    tl_error() = e.what();
    return map_kind(e.kind());
  } catch (const std::exception& e) {
    tl_error() = e.what();
    return RC_ERR_INTERNAL;
  } catch (...) {
    tl_error() = "unidentified failure";
    return RC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) {
    throw Error(ErrorKind::invalid_argument, what);
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) {
    throw std::bad_alloc();
  }
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename T>
T* dup_buffer(const std::vector<T>& v) {
  T* out = static_cast<T*>(std::malloc(v.empty() ? sizeof(T) : v.size() * sizeof(T)));
  if (out == nullptr) {
    throw std::bad_alloc();
  }
  if (!v.empty()) {
    std::memcpy(out, v.data(), v.size() * sizeof(T));
  }
  return out;
}

double opt_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

rareclass::ConfusionMatrix counts_to_cm(const size_t counts[4]) {
  rareclass::ConfusionMatrix cm;
  cm.hits = counts[0];
  cm.false_alarms = counts[1];
  cm.misses = counts[2];
  cm.correct_rejections = counts[3];
  return cm;
}

void cm_to_counts(const rareclass::ConfusionMatrix& cm, size_t counts[4]) {
  counts[0] = cm.hits;
  counts[1] = cm.false_alarms;
  counts[2] = cm.misses;
  counts[3] = cm.correct_rejections;
}

std::string join_notes(const std::vector<std::string>& warnings,
                       const std::vector<std::string>& files) {
  std::string out;
  for (const auto& w : warnings) {
    out += "warning: " + w + '\n';
  }
  for (const auto& f : files) {
    out += "wrote: " + f + '\n';
  }
  if (!out.empty()) {
    out.pop_back();
  }
  return out;
}

}  // namespace

extern "C" {

const char* rc_status_name(rc_status status) {
  switch (status) {
    case RC_OK:
      return "ok";
    case RC_ERR_IO:
      return "io";
    case RC_ERR_PARSE:
      return "parse";
    case RC_ERR_SCHEMA:
      return "schema";
    case RC_ERR_LABEL:
      return "label";
    case RC_ERR_STRUCTURE:
      return "structure";
    case RC_ERR_DOMAIN:
      return "domain";
    case RC_ERR_SINGULAR:
      return "singular";
    case RC_ERR_DEGENERATE:
      return "degenerate";
    case RC_ERR_MISMATCH:
      return "mismatch";
    case RC_ERR_INVALID_ARGUMENT:
      return "invalid-argument";
    case RC_ERR_CALIBRATION:
      return "calibration";
    case RC_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* rc_last_error(void) { return tl_error().c_str(); }

void rc_set_max_threads(unsigned n) { rareclass::set_max_threads(n); }

void rc_string_free(char* s) { std::free(s); }

void rc_buffer_free(void* p) { std::free(p); }

/* ---- datasets ---------------------------------------------------------- */

rc_status rc_dataset_load_csv(const char* path, rc_dataset** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must be non-null");
    *out = new rc_dataset{rareclass::load_csv(path)};
  });
}

rc_status rc_dataset_write_csv(const rc_dataset* data, const char* path) {
  return guarded([&] {
    require(data != nullptr && path != nullptr, "data and path must be non-null");
    rareclass::write_csv(data->data, path);
  });
}

rc_status rc_dataset_synth(size_t n, size_t p, const double* coefficients,
                           double target_prevalence, double mislabel_rate,
                           uint64_t seed, int use_canonical_schema,
                           rc_dataset** out) {
  return guarded([&] {
    require(coefficients != nullptr && out != nullptr,
            "coefficients and out must be non-null");
    rareclass::SynthSpec spec;
    spec.n = n;
    spec.p = p;
    spec.true_coefficients.assign(coefficients, coefficients + p);
    spec.target_prevalence = target_prevalence;
    spec.mislabel_rate = mislabel_rate;
    spec.seed = seed;
    if (use_canonical_schema != 0) {
      const auto schema = rareclass::canonical_schema();
      require(p == schema.size(), "the canonical schema requires p = 41");
      const std::vector<std::string> names(schema.begin(), schema.end());
      *out = new rc_dataset{rareclass::synth_generate(spec, &names)};
    } else {
      *out = new rc_dataset{rareclass::synth_generate(spec)};
    }
  });
}

rc_status rc_dataset_rebalance(const rc_dataset* data, double ratio, uint64_t seed,
                               rc_dataset** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "data and out must be non-null");
    rareclass::RebalanceSpec spec;
    spec.ratio = ratio;
    spec.seed = seed;
    *out = new rc_dataset{rareclass::rebalance(data->data, spec)};
  });
}

size_t rc_dataset_rows(const rc_dataset* data) {
  return data == nullptr ? 0 : data->data.rows();
}

size_t rc_dataset_cols(const rc_dataset* data) {
  return data == nullptr ? 0 : data->data.cols();
}

rc_status rc_dataset_class_counts(const rc_dataset* data, size_t* n_pos,
                                  size_t* n_neg, double* prevalence) {
  return guarded([&] {
    require(data != nullptr, "data must be non-null");
    const auto summary = rareclass::class_counts(data->data);
    if (n_pos != nullptr) {
      *n_pos = summary.n_pos;
    }
    if (n_neg != nullptr) {
      *n_neg = summary.n_neg;
    }
    if (prevalence != nullptr) {
      *prevalence = summary.prevalence;
    }
  });
}

rc_status rc_dataset_labels(const rc_dataset* data, int* labels_out) {
  return guarded([&] {
    require(data != nullptr && labels_out != nullptr,
            "data and labels_out must be non-null");
    const auto labels = data->data.labels();
    std::memcpy(labels_out, labels.data(), labels.size() * sizeof(int));
  });
}

void rc_dataset_free(rc_dataset* data) { delete data; }

size_t rc_schema_size(void) { return rareclass::canonical_schema().size(); }

const char* rc_schema_name(size_t i) {
  const auto schema = rareclass::canonical_schema();
  return i < schema.size() ? schema[i].c_str() : nullptr;
}

/* ---- logistic regression ----------------------------------------------- */

rc_status rc_logistic_fit(const rc_dataset* data, int stepwise, rc_logistic** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "data and out must be non-null");
    if (stepwise != 0) {
      auto result = rareclass::stepwise_select(data->data);
      *out = new rc_logistic{std::move(result.model), result.report,
                             std::move(result.trace), std::move(result.failed_fits)};
    } else {
      auto [model, report] =
          rareclass::fit_irls(data->data, data->data.column_names());
      *out = new rc_logistic{std::move(model), report, {}, {}};
    }
  });
}

rc_status rc_logistic_save(const rc_logistic* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "model and path must be non-null");
    rareclass::save_logistic(model->model, model->report, path);
  });
}

rc_status rc_logistic_load(const char* path, rc_logistic** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must be non-null");
    auto [model, report] = rareclass::load_logistic(path);
    *out = new rc_logistic{std::move(model), report, {}, {}};
  });
}

rc_status rc_logistic_predict(const rc_logistic* model, const rc_dataset* data,
                              double* probs_out) {
  return guarded([&] {
    require(model != nullptr && data != nullptr && probs_out != nullptr,
            "model, data and probs_out must be non-null");
    const auto probs = rareclass::predict_proba(model->model, data->data);
    std::memcpy(probs_out, probs.data(), probs.size() * sizeof(double));
  });
}

double rc_logistic_intercept(const rc_logistic* model) {
  return model == nullptr ? kNaN : model->model.intercept;
}

size_t rc_logistic_n_coefficients(const rc_logistic* model) {
  return model == nullptr ? 0 : model->model.coefficients.size();
}

rc_status rc_logistic_coefficient(const rc_logistic* model, size_t i,
                                  const char** name_out, double* value_out) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    require(i < model->model.coefficients.size(), "coefficient index out of range");
    auto it = model->model.coefficients.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(i));
    if (name_out != nullptr) {
      *name_out = it->first.c_str();
    }
    if (value_out != nullptr) {
      *value_out = it->second;
    }
  });
}

rc_status rc_logistic_fit_info(const rc_logistic* model, double* log_likelihood_out,
                               double* aic_out, int* converged_out) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    if (log_likelihood_out != nullptr) {
      *log_likelihood_out = model->report.log_likelihood;
    }
    if (aic_out != nullptr) {
      *aic_out = model->report.aic;
    }
    if (converged_out != nullptr) {
      *converged_out = model->report.converged ? 1 : 0;
    }
  });
}

size_t rc_logistic_trace_size(const rc_logistic* model) {
  return model == nullptr ? 0 : model->trace.size();
}

rc_status rc_logistic_trace_entry(const rc_logistic* model, size_t i,
                                  const char** action_out, const char** feature_out,
                                  double* aic_out) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    require(i < model->trace.size(), "trace index out of range");
    const auto& rec = model->trace[i];
    if (action_out != nullptr) {
      switch (rec.action) {
        case rareclass::StepRecord::Action::start:
          *action_out = "start";
          break;
        case rareclass::StepRecord::Action::drop:
          *action_out = "drop";
          break;
        case rareclass::StepRecord::Action::add:
          *action_out = "add";
          break;
      }
    }
    if (feature_out != nullptr) {
      *feature_out = rec.feature.c_str();
    }
    if (aic_out != nullptr) {
      *aic_out = rec.aic;
    }
  });
}

size_t rc_logistic_n_notes(const rc_logistic* model) {
  return model == nullptr ? 0 : model->notes.size();
}

const char* rc_logistic_note(const rc_logistic* model, size_t i) {
  if (model == nullptr || i >= model->notes.size()) {
    return nullptr;
  }
  return model->notes[i].c_str();
}

void rc_logistic_free(rc_logistic* model) { delete model; }

/* ---- random forest ------------------------------------------------------ */

rc_status rc_forest_fit(const rc_dataset* data, size_t n_trees, size_t mtry,
                        size_t bootstrap_size, size_t min_node_size, uint64_t seed,
                        rc_forest** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "data and out must be non-null");
    rareclass::ForestConfig config;
    config.n_trees = n_trees;
    config.mtry = mtry;
    config.bootstrap_size = bootstrap_size;
    config.min_node_size = min_node_size;
    config.master_seed = seed;
    *out = new rc_forest{rareclass::fit_forest(data->data, config)};
  });
}

rc_status rc_forest_save(const rc_forest* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "model and path must be non-null");
    rareclass::save_forest(model->model, path);
  });
}

rc_status rc_forest_load(const char* path, rc_forest** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must be non-null");
    *out = new rc_forest{rareclass::load_forest(path)};
  });
}

rc_status rc_forest_predict(const rc_forest* model, const rc_dataset* data,
                            double* probs_out) {
  return guarded([&] {
    require(model != nullptr && data != nullptr && probs_out != nullptr,
            "model, data and probs_out must be non-null");
    const auto probs = rareclass::predict_proba(model->model, data->data);
    std::memcpy(probs_out, probs.data(), probs.size() * sizeof(double));
  });
}

rc_status rc_forest_oob(const rc_forest* model, const rc_dataset* data,
                        double* probs_out) {
  return guarded([&] {
    require(model != nullptr && data != nullptr && probs_out != nullptr,
            "model, data and probs_out must be non-null");
    const auto probs = rareclass::oob_proba(model->model, data->data);
    for (size_t i = 0; i < probs.size(); ++i) {
      probs_out[i] = opt_nan(probs[i]);
    }
  });
}

rc_status rc_forest_oob_curve(const rc_forest* model, const rc_dataset* data,
                              double* curve_out) {
  return guarded([&] {
    require(model != nullptr && data != nullptr && curve_out != nullptr,
            "model, data and curve_out must be non-null");
    const auto curve = rareclass::oob_error_curve(model->model, data->data);
    std::memcpy(curve_out, curve.data(), curve.size() * sizeof(double));
  });
}

rc_status rc_forest_config(const rc_forest* model, size_t* n_trees, size_t* mtry,
                           size_t* bootstrap_size, size_t* min_node_size,
                           uint64_t* master_seed) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    const auto& config = model->model.config;
    if (n_trees != nullptr) {
      *n_trees = config.n_trees;
    }
    if (mtry != nullptr) {
      *mtry = config.mtry;
    }
    if (bootstrap_size != nullptr) {
      *bootstrap_size = config.bootstrap_size;
    }
    if (min_node_size != nullptr) {
      *min_node_size = config.min_node_size;
    }
    if (master_seed != nullptr) {
      *master_seed = config.master_seed;
    }
  });
}

rc_status rc_forest_shape(const rc_forest* model, size_t* n_rows,
                          size_t* n_features) {
  return guarded([&] {
    require(model != nullptr, "model must be non-null");
    if (n_rows != nullptr) {
      *n_rows = model->model.n_rows;
    }
    if (n_features != nullptr) {
      *n_features = model->model.n_features;
    }
  });
}

void rc_forest_free(rc_forest* model) { delete model; }

rc_status rc_model_probe(const char* path, int* kind_out) {
  return guarded([&] {
    require(path != nullptr && kind_out != nullptr,
            "path and kind_out must be non-null");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw Error(ErrorKind::io, std::string("cannot open model file: ") + path);
    }
    char head[256] = {};
    in.read(head, sizeof(head) - 1);
    const std::string text(head, static_cast<size_t>(in.gcount()));
    if (text.find("\"n_trees\"") != std::string::npos) {
      *kind_out = 1;
    } else if (text.find("\"intercept\"") != std::string::npos) {
      *kind_out = 0;
    } else {
      throw Error(ErrorKind::schema,
                  std::string("unrecognized model file format: ") + path);
    }
  });
}

/* ---- metrics and analysis ---------------------------------------------- */

rc_status rc_confusion(const double* probs, const int* labels, size_t n,
                       double threshold, size_t counts_out[4]) {
  return guarded([&] {
    require(probs != nullptr && labels != nullptr && counts_out != nullptr,
            "probs, labels and counts_out must be non-null");
    const auto cm = rareclass::confusion({probs, n}, {labels, n}, threshold);
    cm_to_counts(cm, counts_out);
  });
}

void rc_rates(const size_t counts[4], double* far_out, double* ts_out,
              double* sensitivity_out, double* specificity_out) {
  std::optional<double> far_v, ts_v, se_v, sp_v;
  if (counts != nullptr) {
    const auto cm = counts_to_cm(counts);
    far_v = rareclass::far(cm);
    ts_v = rareclass::ts(cm);
    se_v = rareclass::sensitivity(cm);
    sp_v = rareclass::specificity(cm);
  }
  if (far_out != nullptr) {
    *far_out = opt_nan(far_v);
  }
  if (ts_out != nullptr) {
    *ts_out = opt_nan(ts_v);
  }
  if (sensitivity_out != nullptr) {
    *sensitivity_out = opt_nan(se_v);
  }
  if (specificity_out != nullptr) {
    *specificity_out = opt_nan(sp_v);
  }
}

rc_status rc_auc(const double* probs, const int* labels, size_t n, double* auc_out) {
  return guarded([&] {
    require(probs != nullptr && labels != nullptr && auc_out != nullptr,
            "probs, labels and auc_out must be non-null");
    *auc_out = rareclass::roc({probs, n}, {labels, n}).auc;
  });
}

rc_status rc_best_operating_point(const double* probs, const int* labels, size_t n,
                                  size_t n_points, double max_far,
                                  double* threshold_out, double* far_out,
                                  double* ts_out) {
  return guarded([&] {
    require(probs != nullptr && labels != nullptr,
            "probs and labels must be non-null");
    const auto sw = rareclass::sweep({probs, n}, {labels, n}, n_points);
    const auto best = rareclass::best_operating_point(sw, max_far);
    if (!best) {
      throw Error(ErrorKind::degenerate,
                  "no sweep point has a defined FAR within the bound");
    }
    if (threshold_out != nullptr) {
      *threshold_out = best->threshold;
    }
    if (far_out != nullptr) {
      *far_out = opt_nan(best->far);
    }
    if (ts_out != nullptr) {
      *ts_out = opt_nan(best->ts);
    }
  });
}

rc_status rc_kendall(const double* a, const double* b, size_t n, double* tau_out,
                     double* p_value_out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr, "a and b must be non-null");
    const auto result = rareclass::kendall_paired({a, n}, {b, n});
    if (tau_out != nullptr) {
      *tau_out = result.tau;
    }
    if (p_value_out != nullptr) {
      *p_value_out = result.p_value;
    }
  });
}

rc_status rc_rescale(const double* in, size_t n, double low_anchor,
                     double high_anchor, double* out) {
  return guarded([&] {
    require(in != nullptr && out != nullptr, "in and out must be non-null");
    const rareclass::RescaleParams params{low_anchor, high_anchor};
    for (size_t i = 0; i < n; ++i) {
      out[i] = rareclass::rescale_phi(in[i], params);
    }
  });
}

/* ---- files and reports -------------------------------------------------- */

rc_status rc_prob_write(const double* probs, size_t n, const char* path) {
  return guarded([&] {
    require(probs != nullptr && path != nullptr, "probs and path must be non-null");
    rareclass::write_prob_csv({probs, n}, path);
  });
}

rc_status rc_prob_read(const char* path, double** probs_out, size_t* n_out) {
  return guarded([&] {
    require(path != nullptr && probs_out != nullptr && n_out != nullptr,
            "path, probs_out and n_out must be non-null");
    const auto probs = rareclass::read_prob_csv(path);
    *probs_out = dup_buffer(probs);
    *n_out = probs.size();
  });
}

rc_status rc_labels_read(const char* path, int** labels_out, size_t* n_out) {
  return guarded([&] {
    require(path != nullptr && labels_out != nullptr && n_out != nullptr,
            "path, labels_out and n_out must be non-null");
    const auto labels = rareclass::read_labels_csv(path);
    *labels_out = dup_buffer(labels);
    *n_out = labels.size();
  });
}

rc_status rc_oob_curve_write(const double* curve, size_t n, const char* csv_path,
                             const char* svg_path) {
  return guarded([&] {
    require(curve != nullptr, "curve must be non-null");
    if (csv_path != nullptr) {
      rareclass::write_oob_curve_csv({curve, n}, csv_path);
    }
    if (svg_path != nullptr) {
      rareclass::write_oob_curve_svg({curve, n}, svg_path);
    }
  });
}

rc_status rc_report_evaluate(const double* probs, const int* labels, size_t n,
                             double threshold, size_t n_points,
                             const char* report_dir, size_t counts_out[4],
                             double* auc_out, size_t* n_used_out,
                             size_t* n_dropped_out, char** notes_out) {
  return guarded([&] {
    require(probs != nullptr && labels != nullptr && report_dir != nullptr,
            "probs, labels and report_dir must be non-null");
    const auto report = rareclass::evaluate_report({probs, n}, {labels, n},
                                                   threshold, n_points, report_dir);
    if (counts_out != nullptr) {
      cm_to_counts(report.confusion, counts_out);
    }
    if (auc_out != nullptr) {
      *auc_out = opt_nan(report.auc);
    }
    if (n_used_out != nullptr) {
      *n_used_out = report.n_used;
    }
    if (n_dropped_out != nullptr) {
      *n_dropped_out = report.n_dropped;
    }
    if (notes_out != nullptr) {
      *notes_out = dup_string(join_notes(report.warnings, report.files));
    }
  });
}

rc_status rc_report_compare(const double* probs_a, const int* labels_a, size_t n_a,
                            const double* probs_b, const int* labels_b, size_t n_b,
                            double threshold, size_t n_points,
                            const char* report_dir, char** notes_out) {
  return guarded([&] {
    require(probs_a != nullptr && labels_a != nullptr && probs_b != nullptr &&
                labels_b != nullptr && report_dir != nullptr,
            "probability, label and report_dir arguments must be non-null");
    const auto report =
        rareclass::compare_report({probs_a, n_a}, {labels_a, n_a}, {probs_b, n_b},
                                  {labels_b, n_b}, threshold, n_points, report_dir);
    if (notes_out != nullptr) {
      *notes_out = dup_string(join_notes(report.warnings, report.files));
    }
  });
}

}  // extern "C"
