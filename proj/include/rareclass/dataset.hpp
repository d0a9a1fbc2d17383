// Labeled numeric tables: CSV I/O, class summaries, downsampling and a
// seeded synthetic generator for oracle-checked testing.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rareclass/error.hpp"

namespace rareclass {

// Immutable n x p feature table with binary labels and named columns.
// All values are finite, labels are exactly 0 or 1 and no column is named
// "cv" (reserved for the label column of the CSV layout).
class Dataset {
 public:
  Dataset(std::vector<double> features_row_major, std::vector<int> labels,
          std::vector<std::string> column_names, std::string provenance);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }

  double value(std::size_t row, std::size_t col) const {
    return features_[row * p_ + col];
  }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * p_, p_};
  }
  std::span<const double> features() const { return features_; }
  std::span<const int> labels() const { return labels_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const std::string& provenance() const { return provenance_; }

  std::optional<std::size_t> column_index(std::string_view name) const;

  // Equality covers the data fields only; provenance is a free-text tag and
  // deliberately excluded so that write/load round trips compare equal.
  bool operator==(const Dataset& other) const;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<std::string> names_;
  std::string provenance_;
  std::unordered_map<std::string, std::size_t> name_index_;
};

struct ClassSummary {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double prevalence = 0.0;  // n_pos / n
};

struct RebalanceSpec {
  double ratio = 0.2;  // target (#minority / #sampled-majority), in (0, 1]
  std::uint64_t seed = 0;
};

struct SynthSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> true_coefficients;  // length p
  double target_prevalence = 0.5;         // in (0, 1)
  double mislabel_rate = 0.0;             // in [0, 0.5)
  std::uint64_t seed = 0;
};

// CSV layout: UTF-8, comma separated, header line, label column "cv" last.
Dataset load_csv(const std::filesystem::path& path);
void write_csv(const Dataset& data, const std::filesystem::path& path);

ClassSummary class_counts(const Dataset& data);

// Keeps every positive (minority) row, then appends
// min(round(n_minority / ratio), n_majority) negatives drawn uniformly
// without replacement. Majority rows keep their original relative order.
Dataset rebalance(const Dataset& data, const RebalanceSpec& spec);

// Standard-normal features; labels Bernoulli(sigmoid(alpha + beta.x)) with
// alpha calibrated by bisection so the mean probability over a pilot sample
// hits target_prevalence within 1e-3; optional independent label flips.
// Fully determined by spec.seed. Column names default to x1..xp.
Dataset synth_generate(const SynthSpec& spec,
                       const std::vector<std::string>* column_names = nullptr);

// The calibrated intercept the generator uses for a given spec; exposed so
// tests can compare fitted parameters against the generating ones.
double synth_intercept(const SynthSpec& spec);

// The 41 canonical column names of the reference schema (temperature and
// morphology groups), in header order.
std::span<const std::string> canonical_schema();

}  // namespace rareclass
