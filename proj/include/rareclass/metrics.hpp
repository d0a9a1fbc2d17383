// Confusion statistics, FAR/TS, threshold sweeps, ROC/AUC, and operating
// point selection. The decision rule is strict everywhere: an instance is
// predicted positive iff its probability exceeds the threshold.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rareclass {

struct ConfusionMatrix {
  std::size_t hits = 0;
  std::size_t false_alarms = 0;
  std::size_t misses = 0;
  std::size_t correct_rejections = 0;
  bool operator==(const ConfusionMatrix&) const = default;
};

// Tally at p > threshold (strict). Lengths must match; probabilities must
// lie in [0,1] and labels in {0,1}.
ConfusionMatrix confusion(std::span<const double> probs, std::span<const int> labels,
                          double threshold);

// Ratio statistics; empty when the denominator is zero, never 0-or-1 filled.
std::optional<double> far(const ConfusionMatrix& cm);
std::optional<double> ts(const ConfusionMatrix& cm);
std::optional<double> sensitivity(const ConfusionMatrix& cm);
std::optional<double> specificity(const ConfusionMatrix& cm);

struct SweepPoint {
  double threshold = 0.0;
  std::optional<double> far;
  std::optional<double> ts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  ConfusionMatrix confusion;
};

struct ThresholdSweep {
  std::vector<SweepPoint> points;  // strictly increasing thresholds
};

// Evenly spaced thresholds k/(n_points-1), k = 0..n_points-1.
ThresholdSweep sweep(std::span<const double> probs, std::span<const int> labels,
                     std::size_t n_points = 500);

struct RocCurve {
  // (1 - specificity, sensitivity) per distinct score, threshold high to
  // low, starting at (0,0) and ending at (1,1).
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;  // trapezoidal
};

// Needs both classes present; ties produce diagonal segments whose
// trapezoids carry the half credit of the rank statistic.
RocCurve roc(std::span<const double> probs, std::span<const int> labels);

// Brute-force Mann-Whitney statistic over all (positive, negative) pairs:
// mean of 1/0.5/0 for win/tie/loss. The independent oracle for roc().auc.
double auc_pairwise(std::span<const double> probs, std::span<const int> labels);

// Among sweep points with defined FAR <= max_far, the one with maximal TS;
// ties prefer smaller FAR, then smaller threshold. Empty when none qualify.
std::optional<SweepPoint> best_operating_point(const ThresholdSweep& sweep,
                                               double max_far);

}  // namespace rareclass
