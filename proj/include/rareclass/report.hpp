// Report artifacts: the CSV tables and SVG charts of the evaluation and
// comparison pipelines, plus probability/label file I/O. Real values are
// written with 17 significant digits; undefined ratios and missing
// probabilities become empty cells, never sentinel numbers.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rareclass/analysis.hpp"
#include "rareclass/metrics.hpp"

namespace rareclass {

// Single-row table: threshold,hits,false_alarms,misses,correct_rejections,
// far,ts,sensitivity,specificity.
void write_confusion_csv(const ConfusionMatrix& cm, double threshold,
                         const std::filesystem::path& path);

// threshold,far,ts,sensitivity,specificity,hits,false_alarms,misses,
// correct_rejections.
void write_sweep_csv(const ThresholdSweep& sweep, const std::filesystem::path& path);

// one_minus_specificity,sensitivity.
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

// class,grid,value; positive class first. Estimates may be absent when a
// class was degenerate.
void write_densities_csv(const DensityEstimate* pos, const DensityEstimate* neg,
                         const std::filesystem::path& path);

// class,bin_low,bin_high,count.
void write_histograms_csv(const HistogramTriptych& hist,
                          const std::filesystem::path& path);

// threshold,far_a,ts_a,far_b,ts_b.
void write_compare_csv(const CompareResult& result, const std::filesystem::path& path);

// Single "prob" column; NaN entries become empty cells and read back as NaN.
void write_prob_csv(std::span<const double> probs, const std::filesystem::path& path);
std::vector<double> read_prob_csv(const std::filesystem::path& path);

// Labels come from the trailing "cv" column of any CSV (a full dataset or a
// lone-column file).
std::vector<int> read_labels_csv(const std::filesystem::path& path);

// trees,error with trees = 1..n; NaN errors become empty cells.
void write_oob_curve_csv(std::span<const double> curve,
                         const std::filesystem::path& path);
void write_oob_curve_svg(std::span<const double> curve,
                         const std::filesystem::path& path);

struct EvaluateReport {
  ConfusionMatrix confusion;  // at the supplied threshold
  std::optional<double> auc;  // absent when the ROC was degenerate
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;  // rows with missing probabilities
  std::vector<std::string> warnings;
  std::vector<std::string> files;  // artifacts written, in order
};

// The full evaluation artifact set: confusion.csv, sweep.csv, roc.csv,
// densities.csv, histograms.csv and the density/FAR-TS/TS-FAR/ROC charts.
// Rows with missing (NaN) probabilities are dropped up front and counted.
// Degenerate labels degrade the output (ROC omitted, the rest kept) instead
// of failing; every degradation is recorded as a warning.
EvaluateReport evaluate_report(std::span<const double> probs,
                               std::span<const int> labels, double threshold,
                               std::size_t n_points,
                               const std::filesystem::path& report_dir);

struct CompareReport {
  CompareResult result;
  std::size_t n_dropped_a = 0;
  std::size_t n_dropped_b = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

// compare.csv plus the overlay TS-vs-FAR chart with both operating points.
CompareReport compare_report(std::span<const double> probs_a,
                             std::span<const int> labels_a,
                             std::span<const double> probs_b,
                             std::span<const int> labels_b, double threshold,
                             std::size_t n_points,
                             const std::filesystem::path& report_dir);

}  // namespace rareclass
