#include "rareclass/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rareclass/error.hpp"
#include "validate.hpp"

namespace rareclass {
namespace {

using detail::check_prob_label_vectors;

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::domain, "threshold must lie in [0,1]");
  }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) {
    return std::nullopt;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

SweepPoint make_point(double threshold, const ConfusionMatrix& cm) {
  SweepPoint pt;
  pt.threshold = threshold;
  pt.far = far(cm);
  pt.ts = ts(cm);
  pt.sensitivity = sensitivity(cm);
  pt.specificity = specificity(cm);
  pt.confusion = cm;
  return pt;
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> probs, std::span<const int> labels,
                          double threshold) {
  check_prob_label_vectors(probs, labels);
  check_threshold(threshold);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] > threshold;
    if (labels[i] == 1) {
      (predicted ? cm.hits : cm.misses) += 1;
    } else {
      (predicted ? cm.false_alarms : cm.correct_rejections) += 1;
    }
  }
  return cm;
}

std::optional<double> far(const ConfusionMatrix& cm) {
  return ratio(cm.false_alarms, cm.hits + cm.false_alarms);
}

std::optional<double> ts(const ConfusionMatrix& cm) {
  return ratio(cm.hits, cm.hits + cm.false_alarms + cm.misses);
}

std::optional<double> sensitivity(const ConfusionMatrix& cm) {
  return ratio(cm.hits, cm.hits + cm.misses);
}

std::optional<double> specificity(const ConfusionMatrix& cm) {
  return ratio(cm.correct_rejections, cm.false_alarms + cm.correct_rejections);
}

ThresholdSweep sweep(std::span<const double> probs, std::span<const int> labels,
                     std::size_t n_points) {
  check_prob_label_vectors(probs, labels);
  if (n_points < 2) {
    throw Error(ErrorKind::invalid_argument, "a sweep needs at least 2 points");
  }
  // Sorted per-class score arrays turn each tally into two binary searches.
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(probs[i]);
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  ThresholdSweep out;
  out.points.reserve(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double tau = static_cast<double>(k) / static_cast<double>(n_points - 1);
    ConfusionMatrix cm;
    const auto pos_le =
        static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), tau) - pos.begin());
    const auto neg_le =
        static_cast<std::size_t>(std::upper_bound(neg.begin(), neg.end(), tau) - neg.begin());
    cm.hits = pos.size() - pos_le;
    cm.misses = pos_le;
    cm.false_alarms = neg.size() - neg_le;
    cm.correct_rejections = neg_le;
    out.points.push_back(make_point(tau, cm));
  }
  return out;
}

RocCurve roc(std::span<const double> probs, std::span<const int> labels) {
  check_prob_label_vectors(probs, labels);
  std::size_t n_pos = 0;
  for (const int y : labels) {
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorKind::degenerate, "ROC needs both classes present");
  }

  std::vector<std::pair<double, int>> scored(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    scored[i] = {probs[i], labels[i]};
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double v = scored[i].first;
    while (i < scored.size() && scored[i].first == v) {
      (scored[i].second == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos));
  }
  double auc = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& [x0, y0] = curve.points[k - 1];
    const auto& [x1, y1] = curve.points[k];
    auc += (x1 - x0) * (y0 + y1) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

double auc_pairwise(std::span<const double> probs, std::span<const int> labels) {
  check_prob_label_vectors(probs, labels);
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(probs[i]);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::degenerate, "AUC needs both classes present");
  }
  double sum = 0.0;
  for (const double p : pos) {
    for (const double q : neg) {
      if (p > q) {
        sum += 1.0;
      } else if (p == q) {
        sum += 0.5;
      }
    }
  }
  return sum / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::optional<SweepPoint> best_operating_point(const ThresholdSweep& sweep,
                                               double max_far) {
  if (!(max_far >= 0.0 && max_far <= 1.0)) {
    throw Error(ErrorKind::domain, "max_far must lie in [0,1]");
  }
  std::optional<SweepPoint> best;
  for (const SweepPoint& pt : sweep.points) {
    if (!pt.far || *pt.far > max_far) {
      continue;
    }
    // FAR defined means hits+FA > 0, so TS is defined too.
    if (!best || *pt.ts > *best->ts ||
        (*pt.ts == *best->ts && *pt.far < *best->far)) {
      best = pt;
    }
  }
  return best;
}

}  // namespace rareclass
