#include "rareclass/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_set>

#include "rareclass/logistic.hpp"
#include "rareclass/random.hpp"
#include "text_io.hpp"

namespace rareclass {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::label: return "label";
    case ErrorKind::structure: return "structure";
    case ErrorKind::domain: return "domain";
    case ErrorKind::singular: return "singular";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::mismatch: return "mismatch";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::calibration: return "calibration";
  }
  return "unknown";
}

Dataset::Dataset(std::vector<double> features_row_major, std::vector<int> labels,
                 std::vector<std::string> column_names, std::string provenance)
    : n_(labels.size()),
      p_(column_names.size()),
      features_(std::move(features_row_major)),
      labels_(std::move(labels)),
      names_(std::move(column_names)),
      provenance_(std::move(provenance)) {
  if (n_ < 1) throw Error(ErrorKind::invalid_argument, "dataset needs at least one row");
  if (p_ < 1) throw Error(ErrorKind::invalid_argument, "dataset needs at least one feature column");
  if (features_.size() != n_ * p_) {
    throw Error(ErrorKind::invalid_argument, "feature buffer size does not match n*p");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw Error(ErrorKind::label,
                  "label at row " + std::to_string(i + 1) + " is not 0 or 1");
    }
  }
  for (double v : features_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::invalid_argument, "feature values must be finite");
    }
  }
  for (std::size_t j = 0; j < p_; ++j) {
    const std::string& name = names_[j];
    if (name.empty()) throw Error(ErrorKind::invalid_argument, "empty column name");
    if (name == "cv") {
      throw Error(ErrorKind::invalid_argument, "\"cv\" is reserved for the label column");
    }
    if (!name_index_.emplace(name, j).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate column name \"" + name + "\"");
    }
  }
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
  auto it = name_index_.find(std::string(name));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

bool Dataset::operator==(const Dataset& other) const {
  return n_ == other.n_ && p_ == other.p_ && names_ == other.names_ &&
         labels_ == other.labels_ && features_ == other.features_;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (in.bad()) throw Error(ErrorKind::io, "read failed: " + path.string());
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) {
    throw Error(ErrorKind::schema, path.string() + ": empty file, missing header");
  }

  const auto header = detail::split_csv(lines[0]);
  if (header.back() != "cv") {
    throw Error(ErrorKind::schema,
                path.string() + ": last header column must be \"cv\" (got \"" +
                    std::string(header.back()) + "\")");
  }
  if (header.size() < 2) {
    throw Error(ErrorKind::schema, path.string() + ": no feature columns before \"cv\"");
  }
  const std::size_t p = header.size() - 1;
  std::vector<std::string> names;
  names.reserve(p);
  {
    std::unordered_set<std::string_view> seen;
    for (std::size_t j = 0; j < p; ++j) {
      if (header[j].empty()) {
        throw Error(ErrorKind::schema, path.string() + ": empty column name in header");
      }
      if (header[j] == "cv") {
        throw Error(ErrorKind::schema, path.string() + ": duplicate \"cv\" column");
      }
      if (!seen.insert(header[j]).second) {
        throw Error(ErrorKind::schema, path.string() + ": duplicate column name \"" +
                                           std::string(header[j]) + "\"");
      }
      names.emplace_back(header[j]);
    }
  }

  std::vector<double> features;
  std::vector<int> labels;
  features.reserve((lines.size() - 1) * p);
  labels.reserve(lines.size() - 1);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::size_t line_no = k + 1;
    if (detail::trim(lines[k]).empty()) {
      throw Error(ErrorKind::structure,
                  path.string() + ": blank line " + std::to_string(line_no));
    }
    const auto fields = detail::split_csv(lines[k]);
    if (fields.size() != p + 1) {
      throw Error(ErrorKind::structure,
                  path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(p + 1));
    }
    for (std::size_t j = 0; j < p; ++j) {
      double v;
      if (!detail::parse_double(fields[j], v)) {
        throw Error(ErrorKind::parse,
                    path.string() + ": line " + std::to_string(line_no) +
                        ", column \"" + names[j] + "\": not a finite number: \"" +
                        std::string(fields[j]) + "\"");
      }
      features.push_back(v);
    }
    double cv;
    if (!detail::parse_double(fields[p], cv)) {
      throw Error(ErrorKind::parse,
                  path.string() + ": line " + std::to_string(line_no) +
                      ", column \"cv\": not a number: \"" + std::string(fields[p]) +
                      "\"");
    }
    if (cv != 0.0 && cv != 1.0) {
      throw Error(ErrorKind::label,
                  path.string() + ": line " + std::to_string(line_no) +
                      ": \"cv\" value \"" + std::string(fields[p]) +
                      "\" outside {0,1}");
    }
    labels.push_back(cv == 1.0 ? 1 : 0);
  }
  if (labels.empty()) {
    throw Error(ErrorKind::structure, path.string() + ": no data rows");
  }
  return Dataset(std::move(features), std::move(labels), std::move(names),
                 path.string());
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  detail::atomic_write(path, [&](std::ostream& out) {
    const auto& names = data.column_names();
    for (const auto& name : names) out << name << ',';
    out << "cv\n";
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const auto row = data.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        out << detail::format_double(row[j]) << ',';
      }
      out << data.labels()[i] << '\n';
    }
  });
}

ClassSummary class_counts(const Dataset& data) {
  ClassSummary s;
  for (int y : data.labels()) {
    if (y == 1) {
      ++s.n_pos;
    } else {
      ++s.n_neg;
    }
  }
  s.prevalence = static_cast<double>(s.n_pos) / static_cast<double>(data.rows());
  return s;
}

Dataset rebalance(const Dataset& data, const RebalanceSpec& spec) {
  if (!(spec.ratio > 0.0 && spec.ratio <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "rebalance ratio must be in (0,1]");
  }
  std::vector<std::size_t> minority, majority;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    (data.labels()[i] == 1 ? minority : majority).push_back(i);
  }
  if (minority.empty()) {
    throw Error(ErrorKind::degenerate, "rebalance requires at least one minority (positive) row");
  }

  const auto target = static_cast<std::size_t>(
      std::llround(static_cast<double>(minority.size()) / spec.ratio));
  const std::size_t n_keep = std::min(target, majority.size());

  Rng rng(spec.seed);
  const auto picks = sample_without_replacement(majority.size(), n_keep, rng);

  std::vector<std::size_t> order = minority;
  order.reserve(minority.size() + n_keep);
  for (std::size_t pos : picks) order.push_back(majority[pos]);

  const std::size_t p = data.cols();
  std::vector<double> features;
  features.reserve(order.size() * p);
  std::vector<int> labels;
  labels.reserve(order.size());
  for (std::size_t i : order) {
    const auto row = data.row(i);
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(data.labels()[i]);
  }
  return Dataset(std::move(features), std::move(labels), data.column_names(),
                 "rebalanced:" + data.provenance());
}

namespace {

void validate_synth(const SynthSpec& spec) {
  if (spec.n < 1 || spec.p < 1) {
    throw Error(ErrorKind::invalid_argument, "synth spec needs n >= 1 and p >= 1");
  }
  if (spec.true_coefficients.size() != spec.p) {
    throw Error(ErrorKind::invalid_argument,
                "true_coefficients must have exactly p entries");
  }
  for (double b : spec.true_coefficients) {
    if (!std::isfinite(b)) {
      throw Error(ErrorKind::invalid_argument, "true_coefficients must be finite");
    }
  }
  if (!(spec.target_prevalence > 0.0 && spec.target_prevalence < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "target_prevalence must be in (0,1)");
  }
  if (!(spec.mislabel_rate >= 0.0 && spec.mislabel_rate < 0.5)) {
    throw Error(ErrorKind::invalid_argument, "mislabel_rate must be in [0,0.5)");
  }
}

// Pilot-sample bisection for the intercept that hits the target prevalence.
double calibrate_intercept(const SynthSpec& spec) {
  const std::size_t pilot_n = std::max<std::size_t>(spec.n, 10000);
  Rng pilot = Rng::derive(spec.seed, 0);
  std::vector<double> scores(pilot_n, 0.0);
  for (std::size_t i = 0; i < pilot_n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < spec.p; ++j) {
      s += spec.true_coefficients[j] * pilot.normal();
    }
    scores[i] = s;
  }
  const auto mean_prob = [&](double alpha) {
    double acc = 0.0;
    for (double s : scores) acc += sigmoid(alpha + s);
    return acc / static_cast<double>(pilot_n);
  };
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = mean_prob(mid) - spec.target_prevalence;
    if (std::abs(f) <= 1e-3) return mid;
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorKind::calibration,
              "intercept bisection did not reach the target prevalence in 200 iterations");
}

}  // namespace

double synth_intercept(const SynthSpec& spec) {
  validate_synth(spec);
  return calibrate_intercept(spec);
}

Dataset synth_generate(const SynthSpec& spec,
                       const std::vector<std::string>* column_names) {
  validate_synth(spec);
  if (column_names && column_names->size() != spec.p) {
    throw Error(ErrorKind::invalid_argument,
                "column_names must have exactly p entries");
  }
  const double alpha = calibrate_intercept(spec);

  Rng feat_rng = Rng::derive(spec.seed, 1);
  std::vector<double> features(spec.n * spec.p);
  for (double& v : features) v = feat_rng.normal();

  Rng label_rng = Rng::derive(spec.seed, 2);
  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double s = alpha;
    const double* row = features.data() + i * spec.p;
    for (std::size_t j = 0; j < spec.p; ++j) s += spec.true_coefficients[j] * row[j];
    labels[i] = label_rng.bernoulli(sigmoid(s)) ? 1 : 0;
  }
  if (spec.mislabel_rate > 0.0) {
    Rng flip_rng = Rng::derive(spec.seed, 3);
    for (std::size_t i = 0; i < spec.n; ++i) {
      if (flip_rng.bernoulli(spec.mislabel_rate)) labels[i] = 1 - labels[i];
    }
  }

  std::vector<std::string> names;
  if (column_names) {
    names = *column_names;
  } else {
    names.reserve(spec.p);
    for (std::size_t j = 1; j <= spec.p; ++j) names.push_back("x" + std::to_string(j));
  }
  return Dataset(std::move(features), std::move(labels), std::move(names),
                 "synthetic");
}

std::span<const std::string> canonical_schema() {
  static const std::vector<std::string> names = {
      // temperature group
      "TsBT.0.0", "toTmoyBT.0.0", "Tmin.0.30", "toTmin.0.0", "toTmin.0.15",
      "toTmin.0.30", "stTmoyTminBT.0.0", "stTmoyTminBT.0.15", "stTmoyTminST.0.0",
      "stTmoyTminST.0.15", "stTmoyTminST.0.30", "stTsTmoyBT.0.0",
      "stTsTmoyBT.0.15", "stTsTmoyBT.0.30", "stTsTmoyST.0.0", "stTsTmoyST.0.15",
      "stTsTmoyST.0.30",
      // morphology group
      "Qgp95BT.0.0", "Qgp95BT.0.15", "Qgp95BT.0.30", "Qgp95BT.0.0.15",
      "Qgp95BT.0.15.30", "Gsp95ST.0.0.15", "Gsp95ST.0.15.30", "VtproT.0.0",
      "VtproT.0.0.15", "VtproT.0.15.30", "RdaBT.0.0", "RdaBT.0.15", "RdaBT.0.30",
      "RdaBT.0.0.15", "RdaBT.0.15.30", "SBT.0.0", "SBT.0.30", "SBT.0.0.15",
      "SBT.0.15.30", "SST.0.0", "SST.0.15", "SST.0.30", "SST.0.0.15",
      "SST.0.15.30"};
  return names;
}

}  // namespace rareclass
