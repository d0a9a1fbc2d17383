#include "rareclass/logistic.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rareclass/error.hpp"
#include "rareclass/parallel.hpp"
#include "text_io.hpp"

namespace rareclass {
namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kWeightFloor = 1e-10;
constexpr double kDevianceTol = 1e-8;
constexpr double kStepTol = 1e-10;
constexpr int kMaxIterations = 50;
constexpr int kMaxHalvings = 10;
constexpr double kSeparationCoef = 30.0;

// Design matrix with a leading intercept column, row major, n x (k+1).
struct Design {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> x;
  std::span<const int> y;
};

Design build_design(const Dataset& data, const std::vector<std::string>& features) {
  Design d;
  d.n = data.rows();
  d.k = features.size();
  std::vector<std::size_t> cols(features.size());
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto idx = data.column_index(features[j]);
    if (!idx) {
      throw Error(ErrorKind::mismatch, "dataset lacks feature \"" + features[j] + "\"");
    }
    cols[j] = *idx;
  }
  const std::size_t m = d.k + 1;
  d.x.resize(d.n * m);
  for (std::size_t i = 0; i < d.n; ++i) {
    double* out = d.x.data() + i * m;
    const auto row = data.row(i);
    out[0] = 1.0;
    for (std::size_t j = 0; j < d.k; ++j) {
      out[j + 1] = row[cols[j]];
    }
  }
  d.y = data.labels();
  return d;
}

double bernoulli_ll(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y ? std::log(q) : std::log1p(-q);
}

double deviance_of(const Design& d, const std::vector<double>& beta) {
  const std::size_t m = d.k + 1;
  double ll = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    const double* xi = d.x.data() + i * m;
    double eta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      eta += xi[j] * beta[j];
    }
    ll += bernoulli_ll(sigmoid(eta), d.y[i]);
  }
  return -2.0 * ll;
}

// Solves the symmetric positive definite system a x = b by Cholesky
// factorization. A collapsed pivot means collinear columns.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b,
                              std::size_t m) {
  double max_diag = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    max_diag = std::max(max_diag, std::abs(a[j * m + j]));
  }
  const double tol = 1e-12 * std::max(max_diag, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    double diag = a[j * m + j];
    for (std::size_t t = 0; t < j; ++t) {
      diag -= a[j * m + t] * a[j * m + t];
    }
    if (!(diag > tol)) {
      throw Error(ErrorKind::singular,
                  "weighted design matrix is singular (collinear features)");
    }
    const double root = std::sqrt(diag);
    a[j * m + j] = root;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = a[i * m + j];
      for (std::size_t t = 0; t < j; ++t) {
        v -= a[i * m + t] * a[j * m + t];
      }
      a[i * m + j] = v / root;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double v = b[i];
    for (std::size_t t = 0; t < i; ++t) {
      v -= a[i * m + t] * b[t];
    }
    b[i] = v / a[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    double v = b[i];
    for (std::size_t t = i + 1; t < m; ++t) {
      v -= a[t * m + i] * b[t];
    }
    b[i] = v / a[i * m + i];
  }
  return b;
}

std::pair<std::vector<double>, FitReport> irls_core(const Design& d) {
  const std::size_t m = d.k + 1;
  std::vector<double> beta(m, 0.0);
  double dev = deviance_of(d, beta);
  std::vector<double> grad(m), hess(m * m), cand(m);
  bool converged = false;
  bool separation = false;
  int iter = 0;
  while (iter < kMaxIterations) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      const double* xi = d.x.data() + i * m;
      double eta = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        eta += xi[j] * beta[j];
      }
      const double p = sigmoid(eta);
      const double r = static_cast<double>(d.y[i]) - p;
      const double w = std::max(p * (1.0 - p), kWeightFloor);
      for (std::size_t a = 0; a < m; ++a) {
        grad[a] += xi[a] * r;
        const double wxa = w * xi[a];
        double* hrow = hess.data() + a * m;
        for (std::size_t b = a; b < m; ++b) {
          hrow[b] += wxa * xi[b];
        }
      }
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        hess[a * m + b] = hess[b * m + a];
      }
    }
    const std::vector<double> delta = solve_spd(hess, grad, m);
    // Step halving: accept only a strict deviance decrease.
    double lambda = 1.0;
    double dev_new = dev;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      for (std::size_t j = 0; j < m; ++j) {
        cand[j] = beta[j] + lambda * delta[j];
      }
      dev_new = deviance_of(d, cand);
      if (dev_new < dev) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      // No direction of descent left; converged iff the score vanished.
      double gmax = 0.0;
      for (const double g : grad) {
        gmax = std::max(gmax, std::abs(g));
      }
      converged = gmax < 1e-6;
      break;
    }
    ++iter;
    const double drop = dev - dev_new;
    double step_inf = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      step_inf = std::max(step_inf, std::abs(lambda * delta[j]));
    }
    beta.swap(cand);
    dev = dev_new;
    double coef_max = 0.0;
    for (const double b : beta) {
      coef_max = std::max(coef_max, std::abs(b));
    }
    if (coef_max > kSeparationCoef) {
      // Coefficients diverging while the deviance still falls: separation.
      separation = true;
      converged = false;
      break;
    }
    if (drop < kDevianceTol || step_inf < kStepTol) {
      converged = true;
      break;
    }
  }
  FitReport report;
  report.n_iterations = iter;
  report.converged = converged;
  report.separation_detected = separation;
  report.deviance = dev;
  report.log_likelihood = -0.5 * dev;
  report.aic = dev + 2.0 * static_cast<double>(m);
  return {std::move(beta), report};
}

}  // namespace

double score(const LogisticModel& model, const std::map<std::string, double>& x) {
  double s = model.intercept;
  for (const auto& [name, beta] : model.coefficients) {
    const auto it = x.find(name);
    if (it == x.end()) {
      throw Error(ErrorKind::mismatch, "input row lacks feature \"" + name + "\"");
    }
    s += beta * it->second;
  }
  return s;
}

std::vector<double> predict_proba(const LogisticModel& model, const Dataset& data) {
  std::vector<std::pair<std::size_t, double>> terms;
  terms.reserve(model.coefficients.size());
  for (const auto& [name, beta] : model.coefficients) {
    const auto idx = data.column_index(name);
    if (!idx) {
      throw Error(ErrorKind::mismatch, "dataset lacks model feature \"" + name + "\"");
    }
    terms.emplace_back(*idx, beta);
  }
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto row = data.row(i);
    double eta = model.intercept;
    for (const auto& [col, beta] : terms) {
      eta += beta * row[col];
    }
    out[i] = sigmoid(eta);
  }
  return out;
}

double log_likelihood(const LogisticModel& model, const Dataset& data) {
  const std::vector<double> probs = predict_proba(model, data);
  const auto labels = data.labels();
  double ll = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ll += bernoulli_ll(probs[i], labels[i]);
  }
  return ll;
}

double aic_value(double log_likelihood, std::size_t n_parameters) {
  return -2.0 * log_likelihood + 2.0 * static_cast<double>(n_parameters);
}

std::pair<LogisticModel, FitReport> fit_irls(const Dataset& data,
                                             const std::vector<std::string>& features) {
  // Features are fitted in sorted name order so the result does not depend
  // on how the request happens to be ordered.
  std::vector<std::string> order = features;
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw Error(ErrorKind::invalid_argument, "duplicate feature in fit request");
  }
  const Design d = build_design(data, order);
  auto [beta, report] = irls_core(d);
  LogisticModel model;
  model.intercept = beta[0];
  for (std::size_t j = 0; j < order.size(); ++j) {
    model.coefficients[order[j]] = beta[j + 1];
  }
  return {std::move(model), report};
}

StepwiseResult stepwise_select(const Dataset& data) {
  std::vector<std::string> all = data.column_names();
  std::sort(all.begin(), all.end());
  std::vector<std::string> current = all;

  auto [model, report] = fit_irls(data, current);
  StepwiseResult result;
  result.trace.push_back({StepRecord::Action::start, "", report.aic});

  struct Candidate {
    StepRecord::Action action;
    std::string feature;
    std::vector<std::string> features;  // kept sorted
  };
  struct Outcome {
    bool ok = false;
    LogisticModel model;
    FitReport report;
    std::string error;
  };

  while (true) {
    // Deletions first, then additions, each in name order; with strict
    // improvement below, ties resolve to the earliest candidate.
    std::vector<Candidate> candidates;
    for (const auto& f : current) {
      Candidate c{StepRecord::Action::drop, f, {}};
      c.features.reserve(current.size() - 1);
      for (const auto& g : current) {
        if (g != f) {
          c.features.push_back(g);
        }
      }
      candidates.push_back(std::move(c));
    }
    for (const auto& f : all) {
      if (std::binary_search(current.begin(), current.end(), f)) {
        continue;
      }
      Candidate c{StepRecord::Action::add, f, current};
      c.features.insert(std::lower_bound(c.features.begin(), c.features.end(), f), f);
      candidates.push_back(std::move(c));
    }
    if (candidates.empty()) {
      break;
    }

    std::vector<Outcome> outcomes(candidates.size());
    parallel_for_index(candidates.size(), [&](std::size_t i) {
      try {
        auto [m, r] = fit_irls(data, candidates[i].features);
        outcomes[i] = Outcome{true, std::move(m), r, {}};
      } catch (const Error& e) {
        outcomes[i] = Outcome{false, {}, {}, e.what()};
      }
    });

    const std::size_t none = candidates.size();
    std::size_t best = none;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!outcomes[i].ok) {
        const char* verb =
            candidates[i].action == StepRecord::Action::drop ? "drop " : "add ";
        result.failed_fits.push_back(verb + candidates[i].feature + ": " +
                                     outcomes[i].error);
        continue;
      }
      if (best == none || outcomes[i].report.aic < outcomes[best].report.aic) {
        best = i;
      }
    }
    if (best == none || !(outcomes[best].report.aic < report.aic)) {
      break;
    }

    current = std::move(candidates[best].features);
    model = std::move(outcomes[best].model);
    report = outcomes[best].report;
    result.trace.push_back(
        {candidates[best].action, candidates[best].feature, report.aic});
  }

  result.model = std::move(model);
  result.report = report;
  return result;
}

void save_logistic(const LogisticModel& model, const FitReport& report,
                   const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["intercept"] = model.intercept;
  j["coefficients"] = nlohmann::ordered_json::object();
  for (const auto& [name, beta] : model.coefficients) {
    j["coefficients"][name] = beta;
  }
  j["fit"] = nlohmann::ordered_json{{"log_likelihood", report.log_likelihood},
                                    {"aic", report.aic},
                                    {"converged", report.converged}};
  detail::atomic_write(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

std::pair<LogisticModel, FitReport> load_logistic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open model file: " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse,
                "invalid model JSON in " + path.string() + ": " + e.what());
  }
  const auto schema_error = [&](const std::string& what) {
    return Error(ErrorKind::schema, "model file " + path.string() + ": " + what);
  };
  if (!j.is_object()) {
    throw schema_error("top level is not an object");
  }
  for (const char* key : {"intercept", "coefficients", "fit"}) {
    if (!j.contains(key)) {
      throw schema_error(std::string("missing \"") + key + "\"");
    }
  }
  if (!j["intercept"].is_number()) {
    throw schema_error("\"intercept\" is not a number");
  }
  if (!j["coefficients"].is_object()) {
    throw schema_error("\"coefficients\" is not an object");
  }
  const auto& fit = j["fit"];
  if (!fit.is_object() || !fit.contains("log_likelihood") || !fit.contains("aic") ||
      !fit.contains("converged") || !fit["log_likelihood"].is_number() ||
      !fit["aic"].is_number() || !fit["converged"].is_boolean()) {
    throw schema_error("\"fit\" lacks log_likelihood/aic/converged");
  }
  LogisticModel model;
  model.intercept = j["intercept"].get<double>();
  for (const auto& [name, value] : j["coefficients"].items()) {
    if (!value.is_number()) {
      throw schema_error("coefficient \"" + name + "\" is not a number");
    }
    model.coefficients[name] = value.get<double>();
  }
  FitReport report;
  report.log_likelihood = fit["log_likelihood"].get<double>();
  report.deviance = -2.0 * report.log_likelihood;
  report.aic = fit["aic"].get<double>();
  report.converged = fit["converged"].get<bool>();
  return {std::move(model), report};
}

}  // namespace rareclass
