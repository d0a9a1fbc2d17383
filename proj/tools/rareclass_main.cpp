// Command-line pipeline: synth, rebalance, fit-logistic, fit-forest,
// evaluate, compare. Talks to the library through the C interface only.
// Exit codes: 0 success, 1 module error, 2 usage error.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rareclass.h"

namespace {

struct DatasetDeleter {
  void operator()(rc_dataset* d) const { rc_dataset_free(d); }
};
struct LogisticDeleter {
  void operator()(rc_logistic* m) const { rc_logistic_free(m); }
};
struct ForestDeleter {
  void operator()(rc_forest* m) const { rc_forest_free(m); }
};
struct BufferDeleter {
  void operator()(void* p) const { rc_buffer_free(p); }
};
struct StringDeleter {
  void operator()(char* s) const { rc_string_free(s); }
};

using DatasetPtr = std::unique_ptr<rc_dataset, DatasetDeleter>;
using LogisticPtr = std::unique_ptr<rc_logistic, LogisticDeleter>;
using ForestPtr = std::unique_ptr<rc_forest, ForestDeleter>;
using DoubleBuf = std::unique_ptr<double[], BufferDeleter>;
using IntBuf = std::unique_ptr<int[], BufferDeleter>;
using NotesPtr = std::unique_ptr<char, StringDeleter>;

int fail(const char* verb, rc_status st) {
  std::fprintf(stderr, "rareclass %s: %s error: %s\n", verb, rc_status_name(st),
               rc_last_error());
  return 1;
}

int usage_fail(const std::string& message) {
  std::fprintf(stderr, "rareclass: %s\n", message.c_str());
  return 2;
}

std::string num_or_na(double v) {
  if (std::isnan(v)) {
    return "n/a";
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

bool split_pair(const std::string& s, std::string& left, std::string& right) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    return false;
  }
  left = s.substr(0, eq);
  right = s.substr(eq + 1);
  return true;
}

void print_notes(const char* notes) {
  if (notes != nullptr && notes[0] != '\0') {
    std::printf("%s\n", notes);
  }
}

int load_dataset(const std::string& path, const char* verb, DatasetPtr& out) {
  rc_dataset* raw = nullptr;
  const rc_status st = rc_dataset_load_csv(path.c_str(), &raw);
  if (st != RC_OK) {
    return fail(verb, st);
  }
  out.reset(raw);
  return 0;
}

int print_class_counts(const rc_dataset* data, const char* tag) {
  size_t n_pos = 0;
  size_t n_neg = 0;
  double prevalence = 0.0;
  const rc_status st = rc_dataset_class_counts(data, &n_pos, &n_neg, &prevalence);
  if (st != RC_OK) {
    return fail("counts", st);
  }
  std::printf("%s: %zu rows, %zu positive, %zu negative, prevalence %.6g\n", tag,
              n_pos + n_neg, n_pos, n_neg, prevalence);
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  size_t n = 0;
  size_t p = 0;
  double prevalence = 0.04;
  double mislabel = 0.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string schema;
  std::string coefficients;
};

int run_synth(const SynthArgs& a) {
  std::vector<double> coefs;
  if (!a.coefficients.empty()) {
    std::string rest = a.coefficients;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string tok = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      try {
        size_t used = 0;
        coefs.push_back(std::stod(tok, &used));
        if (used != tok.size()) {
          throw std::invalid_argument(tok);
        }
      } catch (const std::exception&) {
        return usage_fail("--coefficients: not a number: \"" + tok + "\"");
      }
    }
    if (coefs.size() != a.p) {
      return usage_fail("--coefficients needs exactly p = " + std::to_string(a.p) +
                        " comma-separated values");
    }
  } else {
    // Signal on every other feature, alternating sign, scaled so the total
    // signal strength stays comparable across p.
    coefs.assign(a.p, 0.0);
    const double amplitude = 3.0 / std::sqrt(std::ceil(static_cast<double>(a.p) / 2.0));
    double sign = 1.0;
    for (size_t j = 0; j < a.p; j += 2) {
      coefs[j] = sign * amplitude;
      sign = -sign;
    }
  }
  const bool canonical = a.schema == "appendix41";
  if (canonical && a.p != rc_schema_size()) {
    return usage_fail("--schema appendix41 requires --p " +
                      std::to_string(rc_schema_size()));
  }

  rc_dataset* raw = nullptr;
  rc_status st = rc_dataset_synth(a.n, a.p, coefs.data(), a.prevalence, a.mislabel,
                                  a.seed, canonical ? 1 : 0, &raw);
  if (st != RC_OK) {
    return fail("synth", st);
  }
  DatasetPtr data(raw);
  st = rc_dataset_write_csv(data.get(), a.output.c_str());
  if (st != RC_OK) {
    return fail("synth", st);
  }
  std::printf("wrote %s\n", a.output.c_str());
  return print_class_counts(data.get(), "generated");
}

// ---- rebalance --------------------------------------------------------------

struct RebalanceArgs {
  std::string input;
  std::string output;
  double ratio = 0.2;
  std::uint64_t seed = 0;
};

int run_rebalance(const RebalanceArgs& a) {
  DatasetPtr data;
  if (const int rc = load_dataset(a.input, "rebalance", data)) {
    return rc;
  }
  if (const int rc = print_class_counts(data.get(), "before")) {
    return rc;
  }
  rc_dataset* raw = nullptr;
  rc_status st = rc_dataset_rebalance(data.get(), a.ratio, a.seed, &raw);
  if (st != RC_OK) {
    return fail("rebalance", st);
  }
  DatasetPtr sampled(raw);
  if (const int rc = print_class_counts(sampled.get(), "after")) {
    return rc;
  }
  st = rc_dataset_write_csv(sampled.get(), a.output.c_str());
  if (st != RC_OK) {
    return fail("rebalance", st);
  }
  std::printf("wrote %s\n", a.output.c_str());
  return 0;
}

// ---- scoring shared by both fitters ----------------------------------------

template <typename Predict>
int write_scores(const std::vector<std::string>& pairs, const char* verb,
                 Predict predict) {
  for (const auto& pair : pairs) {
    std::string data_path;
    std::string probs_path;
    if (!split_pair(pair, data_path, probs_path)) {
      return usage_fail("--score expects DATA.csv=PROBS.csv, got \"" + pair + "\"");
    }
    DatasetPtr data;
    if (const int rc = load_dataset(data_path, verb, data)) {
      return rc;
    }
    const size_t n = rc_dataset_rows(data.get());
    std::vector<double> probs(n);
    const rc_status st = predict(data.get(), probs.data());
    if (st != RC_OK) {
      return fail(verb, st);
    }
    const rc_status wst = rc_prob_write(probs.data(), n, probs_path.c_str());
    if (wst != RC_OK) {
      return fail(verb, wst);
    }
    std::printf("wrote %s\n", probs_path.c_str());
  }
  return 0;
}

// ---- fit-logistic -----------------------------------------------------------

struct FitLogisticArgs {
  std::string train;
  std::string out;
  bool stepwise = false;
  std::vector<std::string> scores;
};

int run_fit_logistic(const FitLogisticArgs& a) {
  DatasetPtr data;
  if (const int rc = load_dataset(a.train, "fit-logistic", data)) {
    return rc;
  }
  rc_logistic* raw = nullptr;
  rc_status st = rc_logistic_fit(data.get(), a.stepwise ? 1 : 0, &raw);
  if (st != RC_OK) {
    return fail("fit-logistic", st);
  }
  LogisticPtr model(raw);

  const size_t trace_size = rc_logistic_trace_size(model.get());
  for (size_t i = 0; i < trace_size; ++i) {
    const char* action = nullptr;
    const char* feature = nullptr;
    double aic = 0.0;
    if (rc_logistic_trace_entry(model.get(), i, &action, &feature, &aic) != RC_OK) {
      break;
    }
    if (i == 0) {
      std::printf("step 0: start, AIC %.6f\n", aic);
    } else {
      std::printf("step %zu: %s %s, AIC %.6f\n", i, action, feature, aic);
    }
  }
  for (size_t i = 0; i < rc_logistic_n_notes(model.get()); ++i) {
    std::printf("note: %s\n", rc_logistic_note(model.get(), i));
  }

  double ll = 0.0;
  double aic = 0.0;
  int converged = 0;
  rc_logistic_fit_info(model.get(), &ll, &aic, &converged);
  const size_t k = rc_logistic_n_coefficients(model.get());
  std::printf("model: intercept %.6g, %zu features, log-likelihood %.6f, AIC %.6f, converged %s\n",
              rc_logistic_intercept(model.get()), k, ll, aic,
              converged ? "yes" : "no");
  if (k > 0) {
    std::printf("features:");
    for (size_t i = 0; i < k; ++i) {
      const char* name = nullptr;
      if (rc_logistic_coefficient(model.get(), i, &name, nullptr) == RC_OK) {
        std::printf(" %s", name);
      }
    }
    std::printf("\n");
  }

  st = rc_logistic_save(model.get(), a.out.c_str());
  if (st != RC_OK) {
    return fail("fit-logistic", st);
  }
  std::printf("wrote %s\n", a.out.c_str());

  return write_scores(a.scores, "fit-logistic",
                      [&model](const rc_dataset* d, double* out) {
                        return rc_logistic_predict(model.get(), d, out);
                      });
}

// ---- fit-forest -------------------------------------------------------------

struct FitForestArgs {
  std::string train;
  std::string out;
  std::string report;
  std::string score_oob;
  size_t trees = 500;
  size_t mtry = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> scores;
};

int run_fit_forest(const FitForestArgs& a) {
  DatasetPtr data;
  if (const int rc = load_dataset(a.train, "fit-forest", data)) {
    return rc;
  }
  rc_forest* raw = nullptr;
  rc_status st = rc_forest_fit(data.get(), a.trees, a.mtry, 0, 1, a.seed, &raw);
  if (st != RC_OK) {
    return fail("fit-forest", st);
  }
  ForestPtr model(raw);

  size_t mtry_used = 0;
  rc_forest_config(model.get(), nullptr, &mtry_used, nullptr, nullptr, nullptr);
  std::printf("fitted %zu trees (mtry %zu) on %zu rows\n", a.trees, mtry_used,
              rc_dataset_rows(data.get()));

  st = rc_forest_save(model.get(), a.out.c_str());
  if (st != RC_OK) {
    return fail("fit-forest", st);
  }
  std::printf("wrote %s\n", a.out.c_str());

  std::filesystem::path report_dir = a.report;
  if (report_dir.empty()) {
    report_dir = std::filesystem::path(a.out).parent_path();
    if (report_dir.empty()) {
      report_dir = ".";
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(report_dir, ec);
  std::vector<double> curve(a.trees);
  st = rc_forest_oob_curve(model.get(), data.get(), curve.data());
  if (st != RC_OK) {
    return fail("fit-forest", st);
  }
  const auto curve_csv = (report_dir / "oob_curve.csv").string();
  const auto curve_svg = (report_dir / "oob_curve.svg").string();
  st = rc_oob_curve_write(curve.data(), curve.size(), curve_csv.c_str(),
                          curve_svg.c_str());
  if (st != RC_OK) {
    return fail("fit-forest", st);
  }
  std::printf("wrote %s\nwrote %s\n", curve_csv.c_str(), curve_svg.c_str());
  std::printf("out-of-bag error after %zu trees: %s\n", a.trees,
              num_or_na(curve.back()).c_str());

  if (!a.score_oob.empty()) {
    const size_t n = rc_dataset_rows(data.get());
    std::vector<double> probs(n);
    st = rc_forest_oob(model.get(), data.get(), probs.data());
    if (st != RC_OK) {
      return fail("fit-forest", st);
    }
    st = rc_prob_write(probs.data(), n, a.score_oob.c_str());
    if (st != RC_OK) {
      return fail("fit-forest", st);
    }
    std::printf("wrote %s\n", a.score_oob.c_str());
  }

  return write_scores(a.scores, "fit-forest",
                      [&model](const rc_dataset* d, double* out) {
                        return rc_forest_predict(model.get(), d, out);
                      });
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string probs;
  std::string model;
  std::string data;
  std::string labels;
  std::string report;
  double threshold = 0.5;
  double max_far = -1.0;  // negative = not requested
  size_t n_points = 500;
};

int load_model_probs(const std::string& model_path, const std::string& data_path,
                     const char* verb, std::vector<double>& probs_out,
                     DatasetPtr& data_out) {
  if (const int rc = load_dataset(data_path, verb, data_out)) {
    return rc;
  }
  int kind = -1;
  rc_status st = rc_model_probe(model_path.c_str(), &kind);
  if (st != RC_OK) {
    return fail(verb, st);
  }
  const size_t n = rc_dataset_rows(data_out.get());
  probs_out.resize(n);
  if (kind == 0) {
    rc_logistic* raw = nullptr;
    st = rc_logistic_load(model_path.c_str(), &raw);
    if (st != RC_OK) {
      return fail(verb, st);
    }
    LogisticPtr model(raw);
    st = rc_logistic_predict(model.get(), data_out.get(), probs_out.data());
  } else {
    rc_forest* raw = nullptr;
    st = rc_forest_load(model_path.c_str(), &raw);
    if (st != RC_OK) {
      return fail(verb, st);
    }
    ForestPtr model(raw);
    st = rc_forest_predict(model.get(), data_out.get(), probs_out.data());
  }
  if (st != RC_OK) {
    return fail(verb, st);
  }
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  std::vector<double> probs;
  std::vector<int> labels;
  if (!a.probs.empty()) {
    DoubleBuf pbuf;
    {
      double* raw = nullptr;
      size_t n = 0;
      const rc_status st = rc_prob_read(a.probs.c_str(), &raw, &n);
      if (st != RC_OK) {
        return fail("evaluate", st);
      }
      pbuf.reset(raw);
      probs.assign(raw, raw + n);
    }
  } else {
    DatasetPtr data;
    if (const int rc = load_model_probs(a.model, a.data, "evaluate", probs, data)) {
      return rc;
    }
    if (a.labels.empty()) {
      labels.resize(rc_dataset_rows(data.get()));
      const rc_status st = rc_dataset_labels(data.get(), labels.data());
      if (st != RC_OK) {
        return fail("evaluate", st);
      }
    }
  }
  if (!a.labels.empty()) {
    int* raw = nullptr;
    size_t n = 0;
    const rc_status st = rc_labels_read(a.labels.c_str(), &raw, &n);
    if (st != RC_OK) {
      return fail("evaluate", st);
    }
    IntBuf lbuf(raw);
    labels.assign(raw, raw + n);
  }

  size_t counts[4] = {0, 0, 0, 0};
  double auc = 0.0;
  size_t n_used = 0;
  size_t n_dropped = 0;
  char* notes_raw = nullptr;
  const rc_status st = rc_report_evaluate(probs.data(), labels.data(), probs.size(),
                                          a.threshold, a.n_points, a.report.c_str(),
                                          counts, &auc, &n_used, &n_dropped,
                                          &notes_raw);
  if (st != RC_OK) {
    return fail("evaluate", st);
  }
  NotesPtr notes(notes_raw);

  std::printf("rows: %zu scored, %zu dropped\n", n_used, n_dropped);
  std::printf("confusion at tau %.6g: hits %zu, false alarms %zu, misses %zu, correct rejections %zu\n",
              a.threshold, counts[0], counts[1], counts[2], counts[3]);
  double far_v = 0.0;
  double ts_v = 0.0;
  double se_v = 0.0;
  double sp_v = 0.0;
  rc_rates(counts, &far_v, &ts_v, &se_v, &sp_v);
  std::printf("far %s, ts %s, sensitivity %s, specificity %s\n",
              num_or_na(far_v).c_str(), num_or_na(ts_v).c_str(),
              num_or_na(se_v).c_str(), num_or_na(sp_v).c_str());
  std::printf("auc %s\n", num_or_na(auc).c_str());
  if (a.max_far >= 0.0) {
    double best_tau = 0.0;
    double best_far = 0.0;
    double best_ts = 0.0;
    const rc_status bst = rc_best_operating_point(probs.data(), labels.data(),
                                                  probs.size(), a.n_points, a.max_far,
                                                  &best_tau, &best_far, &best_ts);
    if (bst == RC_OK) {
      std::printf("best point with far <= %.6g: tau %.6g, far %s, ts %s\n",
                  a.max_far, best_tau, num_or_na(best_far).c_str(),
                  num_or_na(best_ts).c_str());
    } else if (bst == RC_ERR_DEGENERATE) {
      std::printf("best point with far <= %.6g: none\n", a.max_far);
    } else {
      return fail("evaluate", bst);
    }
  }
  print_notes(notes.get());
  return 0;
}

// ---- compare ----------------------------------------------------------------

struct CompareArgs {
  std::string probs_a;
  std::string probs_b;
  std::string labels;
  std::string labels_b;
  std::string report;
  double threshold = 0.5;
  size_t n_points = 500;
};

int run_compare(const CompareArgs& a) {
  double* raw_a = nullptr;
  size_t n_a = 0;
  rc_status st = rc_prob_read(a.probs_a.c_str(), &raw_a, &n_a);
  if (st != RC_OK) {
    return fail("compare", st);
  }
  DoubleBuf pa(raw_a);
  double* raw_b = nullptr;
  size_t n_b = 0;
  st = rc_prob_read(a.probs_b.c_str(), &raw_b, &n_b);
  if (st != RC_OK) {
    return fail("compare", st);
  }
  DoubleBuf pb(raw_b);

  int* raw_la = nullptr;
  size_t n_la = 0;
  st = rc_labels_read(a.labels.c_str(), &raw_la, &n_la);
  if (st != RC_OK) {
    return fail("compare", st);
  }
  IntBuf la(raw_la);
  IntBuf lb;
  size_t n_lb = n_la;
  if (!a.labels_b.empty()) {
    int* raw_lb = nullptr;
    st = rc_labels_read(a.labels_b.c_str(), &raw_lb, &n_lb);
    if (st != RC_OK) {
      return fail("compare", st);
    }
    lb.reset(raw_lb);
  }
  const int* labels_b = lb ? lb.get() : la.get();

  if (n_a != n_la) {
    std::fprintf(stderr,
                 "rareclass compare: mismatch error: model a has %zu probabilities but %zu labels\n",
                 n_a, n_la);
    return 1;
  }
  if (n_b != n_lb) {
    std::fprintf(stderr,
                 "rareclass compare: mismatch error: model b has %zu probabilities but %zu labels\n",
                 n_b, n_lb);
    return 1;
  }

  char* notes_raw = nullptr;
  st = rc_report_compare(pa.get(), la.get(), n_a, pb.get(), labels_b, n_b,
                         a.threshold, a.n_points, a.report.c_str(), &notes_raw);
  if (st != RC_OK) {
    return fail("compare", st);
  }
  NotesPtr notes(notes_raw);

  // Rank concordance between the two scorers, when the vectors pair up.
  if (a.labels_b.empty() && n_a == n_b) {
    bool complete = true;
    for (size_t i = 0; i < n_a && complete; ++i) {
      complete = !std::isnan(pa.get()[i]) && !std::isnan(pb.get()[i]);
    }
    if (complete) {
      double tau = 0.0;
      double p_value = 0.0;
      if (rc_kendall(pa.get(), pb.get(), n_a, &tau, &p_value) == RC_OK) {
        std::printf("kendall tau %.6g, p-value %.6g\n", tau, p_value);
      }
    }
  }
  print_notes(notes.get());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rare-event binary classification: downsampling, stepwise logistic "
      "regression, random forests, FAR/TS evaluation.\n\n"
      "To reproduce the no-sampling vs downsampling comparison: fit the same "
      "model once on the raw training file and once on a `rebalance --ratio "
      "0.2` output, score both on the test file, then `compare` the two "
      "probability CSVs."};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads,
                 "worker thread cap, 0 = hardware default (results never depend on it)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled CSV");
  synth_cmd->add_option("--n", synth.n, "rows")->required()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--p", synth.p, "feature count")->required()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--prevalence", synth.prevalence,
                        "target positive-class share, in (0,1)")
      ->capture_default_str();
  synth_cmd->add_option("--mislabel", synth.mislabel,
                        "independent label-flip rate, in [0,0.5)")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "generator seed")
      ->capture_default_str();
  synth_cmd->add_option("--output", synth.output, "destination CSV")->required();
  synth_cmd->add_option("--schema", synth.schema,
                        "column naming scheme (appendix41 = the 41 canonical names)")
      ->check(CLI::IsMember({"appendix41"}));
  synth_cmd->add_option("--coefficients", synth.coefficients,
                        "comma-separated true coefficients, length p "
                        "(default: every other feature informative)");

  RebalanceArgs rebalance;
  auto* rebalance_cmd =
      app.add_subcommand("rebalance", "downsample the majority class");
  rebalance_cmd->add_option("--input", rebalance.input, "source CSV")->required()
      ->check(CLI::ExistingFile);
  rebalance_cmd->add_option("--ratio", rebalance.ratio,
                            "target minority/majority ratio, in (0,1]")
      ->capture_default_str();
  rebalance_cmd->add_option("--seed", rebalance.seed, "sampling seed")
      ->capture_default_str();
  rebalance_cmd->add_option("--output", rebalance.output, "destination CSV")
      ->required();

  FitLogisticArgs fit_logistic;
  auto* fit_logistic_cmd =
      app.add_subcommand("fit-logistic", "maximum-likelihood logistic regression");
  fit_logistic_cmd->add_option("--train", fit_logistic.train, "training CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_logistic_cmd->add_option("--out", fit_logistic.out, "model JSON destination")
      ->required();
  fit_logistic_cmd->add_flag("--stepwise", fit_logistic.stepwise,
                             "bidirectional AIC selection from the full model");
  fit_logistic_cmd->add_option(
      "--score", fit_logistic.scores,
      "DATA.csv=PROBS.csv, score a dataset and write the probabilities (repeatable)");

  FitForestArgs fit_forest;
  auto* fit_forest_cmd = app.add_subcommand("fit-forest", "random forest");
  fit_forest_cmd->add_option("--train", fit_forest.train, "training CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_forest_cmd->add_option("--out", fit_forest.out, "model JSON destination")
      ->required();
  fit_forest_cmd->add_option("--trees", fit_forest.trees, "number of trees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_forest_cmd->add_option("--mtry", fit_forest.mtry,
                             "features drawn per node, 0 = floor(sqrt(p))")
      ->capture_default_str();
  fit_forest_cmd->add_option("--seed", fit_forest.seed, "master seed")
      ->capture_default_str();
  fit_forest_cmd->add_option("--report", fit_forest.report,
                             "directory for oob_curve.csv/.svg (default: next to --out)");
  fit_forest_cmd->add_option("--score", fit_forest.scores,
                             "DATA.csv=PROBS.csv, direct vote-share scores (repeatable)");
  fit_forest_cmd->add_option("--score-oob", fit_forest.score_oob,
                             "PROBS.csv, out-of-bag scores on the training data");

  EvaluateArgs evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "threshold metrics and report artifacts");
  auto* probs_opt =
      evaluate_cmd->add_option("--probs", evaluate.probs, "probability CSV")
          ->check(CLI::ExistingFile);
  auto* model_opt =
      evaluate_cmd->add_option("--model", evaluate.model, "model JSON to score with")
          ->check(CLI::ExistingFile);
  auto* data_opt =
      evaluate_cmd->add_option("--data", evaluate.data, "dataset CSV to score")
          ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--labels", evaluate.labels,
                           "CSV whose trailing cv column holds the labels "
                           "(default with --data: the dataset itself)")
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--threshold", evaluate.threshold,
                           "decision threshold tau")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--max-far", evaluate.max_far,
                           "also report the best grid point with FAR <= this")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("--n-points", evaluate.n_points,
                           "threshold grid size for sweep.csv")
      ->capture_default_str();
  evaluate_cmd->add_option("--report", evaluate.report, "report directory")
      ->required();
  probs_opt->excludes(model_opt);
  probs_opt->excludes(data_opt);
  model_opt->needs(data_opt);
  data_opt->needs(model_opt);

  CompareArgs compare;
  auto* compare_cmd =
      app.add_subcommand("compare", "overlay two models' TS-vs-FAR curves");
  compare_cmd->add_option("--probs-a", compare.probs_a, "first probability CSV")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--probs-b", compare.probs_b, "second probability CSV")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--labels", compare.labels,
                          "label CSV for model a (and b unless --labels-b)")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--labels-b", compare.labels_b,
                          "separate label CSV for model b")
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--threshold", compare.threshold,
                          "operating threshold to mark on both curves")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--n-points", compare.n_points, "threshold grid size")
      ->capture_default_str();
  compare_cmd->add_option("--report", compare.report, "report directory")
      ->required();

  // Lets the global --threads flag appear after the subcommand name too.
  for (auto* sub : {synth_cmd, rebalance_cmd, fit_logistic_cmd, fit_forest_cmd,
                    evaluate_cmd, compare_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  rc_set_max_threads(threads);

  if (*evaluate_cmd) {
    if (evaluate.probs.empty() && evaluate.model.empty()) {
      return usage_fail("evaluate needs --probs or --model with --data");
    }
    if (!evaluate.probs.empty() && evaluate.labels.empty()) {
      return usage_fail("evaluate --probs needs --labels");
    }
    if (evaluate.n_points < 2) {
      return usage_fail("--n-points must be at least 2");
    }
  }
  if (*compare_cmd && compare.n_points < 2) {
    return usage_fail("--n-points must be at least 2");
  }
  if (*synth_cmd) {
    if (!(synth.prevalence > 0.0 && synth.prevalence < 1.0)) {
      return usage_fail("--prevalence must lie in (0,1)");
    }
    if (!(synth.mislabel >= 0.0 && synth.mislabel < 0.5)) {
      return usage_fail("--mislabel must lie in [0,0.5)");
    }
  }
  if (*rebalance_cmd && !(rebalance.ratio > 0.0 && rebalance.ratio <= 1.0)) {
    return usage_fail("--ratio must lie in (0,1]");
  }

  if (*synth_cmd) {
    return run_synth(synth);
  }
  if (*rebalance_cmd) {
    return run_rebalance(rebalance);
  }
  if (*fit_logistic_cmd) {
    return run_fit_logistic(fit_logistic);
  }
  if (*fit_forest_cmd) {
    return run_fit_forest(fit_forest);
  }
  if (*evaluate_cmd) {
    return run_evaluate(evaluate);
  }
  if (*compare_cmd) {
    return run_compare(compare);
  }
  return usage_fail("no subcommand");
}
