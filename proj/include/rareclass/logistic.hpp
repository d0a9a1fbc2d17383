// Maximum-likelihood logistic regression (Newton/IRLS with step halving)
// and bidirectional stepwise selection by AIC.
#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rareclass/dataset.hpp"

namespace rareclass {

// Linear model on the logit scale: intercept plus one coefficient per
// selected feature, keyed by column name so fits do not depend on column
// position.
struct LogisticModel {
  double intercept = 0.0;
  std::map<std::string, double> coefficients;
};

struct FitReport {
  double log_likelihood = 0.0;
  double deviance = 0.0;  // -2 * log_likelihood
  double aic = 0.0;       // deviance + 2 * (1 + |coefficients|)
  int n_iterations = 0;
  bool converged = false;
  bool separation_detected = false;
};

// Numerically stable logistic function; saturates cleanly at extreme inputs.
inline double sigmoid(double s) {
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Linear score alpha + sum_j beta_j x_j; every model feature must be present.
double score(const LogisticModel& model, const std::map<std::string, double>& x);

std::vector<double> predict_proba(const LogisticModel& model, const Dataset& data);

// Bernoulli log likelihood with probabilities clamped to [1e-12, 1 - 1e-12].
double log_likelihood(const LogisticModel& model, const Dataset& data);

double aic_value(double log_likelihood, std::size_t n_parameters);

// Newton/IRLS fit on the named feature subset (empty = intercept only).
// Converges on |delta deviance| < 1e-8 or max parameter step < 1e-10, at
// most 50 iterations with up to 10 step halvings each.
std::pair<LogisticModel, FitReport> fit_irls(const Dataset& data,
                                             const std::vector<std::string>& features);

struct StepRecord {
  enum class Action { start, drop, add };
  Action action = Action::start;
  std::string feature;  // empty for the start record
  double aic = 0.0;
};

struct StepwiseResult {
  LogisticModel model;
  FitReport report;
  std::vector<StepRecord> trace;   // start state plus one record per move
  std::vector<std::string> failed_fits;  // candidates skipped because the fit errored
};

// Bidirectional stepwise search from the full model: each step evaluates
// every single-feature deletion and addition and moves to the strictly
// smallest AIC. Ties prefer deletion, then the lexicographically smallest
// feature name, so the outcome is deterministic (and identical whether the
// candidate fits run sequentially or in parallel).
StepwiseResult stepwise_select(const Dataset& data);

// JSON persistence:
// {"intercept": float, "coefficients": {name: float},
//  "fit": {"log_likelihood": float, "aic": float, "converged": bool}}
void save_logistic(const LogisticModel& model, const FitReport& report,
                   const std::filesystem::path& path);
std::pair<LogisticModel, FitReport> load_logistic(const std::filesystem::path& path);

}  // namespace rareclass
