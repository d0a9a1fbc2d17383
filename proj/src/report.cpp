#include "rareclass/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "rareclass/error.hpp"
#include "svg.hpp"
#include "text_io.hpp"

namespace rareclass {
namespace {

std::string cell(const std::optional<double>& v) {
  return v ? detail::format_double_17(*v) : std::string();
}

std::string cell(double v) {
  return std::isnan(v) ? std::string() : detail::format_double_17(v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::atomic_write(path, [&](std::ostream& out) { out << text; });
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return line;
}

}  // namespace

void write_confusion_csv(const ConfusionMatrix& cm, double threshold,
                         const std::filesystem::path& path) {
  std::string text =
      "threshold,hits,false_alarms,misses,correct_rejections,far,ts,"
      "sensitivity,specificity\n";
  text += detail::format_double_17(threshold) + ',' + std::to_string(cm.hits) + ',' +
          std::to_string(cm.false_alarms) + ',' + std::to_string(cm.misses) + ',' +
          std::to_string(cm.correct_rejections) + ',' + cell(far(cm)) + ',' +
          cell(ts(cm)) + ',' + cell(sensitivity(cm)) + ',' + cell(specificity(cm)) +
          '\n';
  write_text(path, text);
}

void write_sweep_csv(const ThresholdSweep& sweep, const std::filesystem::path& path) {
  std::string text =
      "threshold,far,ts,sensitivity,specificity,hits,false_alarms,misses,"
      "correct_rejections\n";
  for (const SweepPoint& pt : sweep.points) {
    text += detail::format_double_17(pt.threshold) + ',' + cell(pt.far) + ',' +
            cell(pt.ts) + ',' + cell(pt.sensitivity) + ',' + cell(pt.specificity) +
            ',' + std::to_string(pt.confusion.hits) + ',' +
            std::to_string(pt.confusion.false_alarms) + ',' +
            std::to_string(pt.confusion.misses) + ',' +
            std::to_string(pt.confusion.correct_rejections) + '\n';
  }
  write_text(path, text);
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::string text = "one_minus_specificity,sensitivity\n";
  for (const auto& [x, y] : curve.points) {
    text += detail::format_double_17(x) + ',' + detail::format_double_17(y) + '\n';
  }
  write_text(path, text);
}

void write_densities_csv(const DensityEstimate* pos, const DensityEstimate* neg,
                         const std::filesystem::path& path) {
  std::string text = "class,grid,value\n";
  const auto emit = [&text](int cls, const DensityEstimate& d) {
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      text += std::to_string(cls) + ',' + detail::format_double_17(d.grid[i]) + ',' +
              detail::format_double_17(d.values[i]) + '\n';
    }
  };
  if (pos != nullptr) {
    emit(1, *pos);
  }
  if (neg != nullptr) {
    emit(0, *neg);
  }
  write_text(path, text);
}

void write_histograms_csv(const HistogramTriptych& hist,
                          const std::filesystem::path& path) {
  std::string text = "class,bin_low,bin_high,count\n";
  const auto emit = [&text](int cls, const std::array<std::size_t, 3>& counts) {
    for (std::size_t b = 0; b < 3; ++b) {
      text += std::to_string(cls) + ',' + detail::format_double(kTriptychEdges[b]) +
              ',' + detail::format_double(kTriptychEdges[b + 1]) + ',' +
              std::to_string(counts[b]) + '\n';
    }
  };
  emit(1, hist.pos_counts);
  emit(0, hist.neg_counts);
  write_text(path, text);
}

void write_compare_csv(const CompareResult& result,
                       const std::filesystem::path& path) {
  std::string text = "threshold,far_a,ts_a,far_b,ts_b\n";
  for (const CompareRow& row : result.rows) {
    text += detail::format_double_17(row.threshold) + ',' + cell(row.far_a) + ',' +
            cell(row.ts_a) + ',' + cell(row.far_b) + ',' + cell(row.ts_b) + '\n';
  }
  write_text(path, text);
}

void write_prob_csv(std::span<const double> probs, const std::filesystem::path& path) {
  std::string text = "prob\n";
  for (const double p : probs) {
    if (!std::isnan(p)) {
      text += detail::format_double(p);
    }
    text += '\n';
  }
  write_text(path, text);
}

std::vector<double> read_prob_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open probability file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::schema, "empty probability file: " + path.string());
  }
  if (detail::trim(line) != "prob") {
    throw Error(ErrorKind::schema,
                "expected a single \"prob\" column in " + path.string());
  }
  std::vector<double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto token = detail::trim(line);
    if (token.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double value = 0.0;
    if (!detail::parse_double(token, value)) {
      throw Error(ErrorKind::parse, path.string() + ": line " +
                                        std::to_string(line_no) +
                                        ": not a finite number: \"" +
                                        std::string(token) + "\"");
    }
    out.push_back(value);
  }
  return out;
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open label file: " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(strip_cr(line));
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty()) {
    throw Error(ErrorKind::schema, "empty label file: " + path.string());
  }
  const auto header = detail::split_csv(lines[0]);
  if (header.empty() || detail::trim(header.back()) != "cv") {
    throw Error(ErrorKind::schema,
                "label file must end in a \"cv\" column: " + path.string());
  }
  std::vector<int> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = detail::split_csv(lines[i]);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::structure,
                  "line " + std::to_string(i + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()) + ": " + path.string());
    }
    const auto token = detail::trim(cells.back());
    if (token == "0") {
      out.push_back(0);
    } else if (token == "1") {
      out.push_back(1);
    } else {
      throw Error(ErrorKind::label, "line " + std::to_string(i + 1) +
                                        ": cv must be 0 or 1, got \"" +
                                        std::string(token) + "\"");
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::schema, "label file has no rows: " + path.string());
  }
  return out;
}

void write_oob_curve_csv(std::span<const double> curve,
                         const std::filesystem::path& path) {
  std::string text = "trees,error\n";
  for (std::size_t t = 0; t < curve.size(); ++t) {
    text += std::to_string(t + 1) + ',' + cell(curve[t]) + '\n';
  }
  write_text(path, text);
}

void write_oob_curve_svg(std::span<const double> curve,
                         const std::filesystem::path& path) {
  svg::Chart chart;
  chart.title = "Out-of-bag error by tree count";
  chart.x_label = "trees";
  chart.y_label = "error";
  svg::Series s;
  s.xs.reserve(curve.size());
  s.ys.assign(curve.begin(), curve.end());
  for (std::size_t t = 0; t < curve.size(); ++t) {
    s.xs.push_back(static_cast<double>(t + 1));
  }
  chart.series.push_back(std::move(s));
  write_text(path, svg::render(chart));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double opt_or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

std::size_t nearest_index(const ThresholdSweep& sweep, double tau) {
  std::size_t best = 0;
  double gap = std::abs(sweep.points[0].threshold - tau);
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    const double g = std::abs(sweep.points[i].threshold - tau);
    if (g < gap) {
      best = i;
      gap = g;
    }
  }
  return best;
}

svg::Series far_ts_series(const ThresholdSweep& sweep, bool want_far,
                          std::string label) {
  svg::Series s;
  s.label = std::move(label);
  s.xs.reserve(sweep.points.size());
  s.ys.reserve(sweep.points.size());
  for (const SweepPoint& pt : sweep.points) {
    s.xs.push_back(pt.threshold);
    s.ys.push_back(opt_or_nan(want_far ? pt.far : pt.ts));
  }
  return s;
}

svg::Series ts_vs_far_series(const ThresholdSweep& sweep, std::string label) {
  svg::Series s;
  s.label = std::move(label);
  for (const SweepPoint& pt : sweep.points) {
    s.xs.push_back(opt_or_nan(pt.far));
    s.ys.push_back(opt_or_nan(pt.ts));
  }
  return s;
}

std::string tau_text(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tau = %.6g", tau);
  return std::string(buf);
}

struct Filtered {
  std::vector<double> probs;
  std::vector<int> labels;
  std::size_t dropped = 0;
};

Filtered drop_missing(std::span<const double> probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) {
    throw Error(ErrorKind::mismatch, "probability and label vectors differ in length");
  }
  Filtered out;
  out.probs.reserve(probs.size());
  out.labels.reserve(labels.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (std::isnan(probs[i])) {
      ++out.dropped;
    } else {
      out.probs.push_back(probs[i]);
      out.labels.push_back(labels[i]);
    }
  }
  if (out.probs.empty()) {
    throw Error(ErrorKind::degenerate, "no scored rows left after dropping missing probabilities");
  }
  return out;
}

}  // namespace

EvaluateReport evaluate_report(std::span<const double> probs,
                               std::span<const int> labels, double threshold,
                               std::size_t n_points,
                               const std::filesystem::path& report_dir) {
  const Filtered f = drop_missing(probs, labels);
  EvaluateReport report;
  report.n_used = f.probs.size();
  report.n_dropped = f.dropped;
  if (f.dropped > 0) {
    report.warnings.push_back(std::to_string(f.dropped) +
                              " rows dropped (missing probabilities)");
  }

  std::filesystem::create_directories(report_dir);
  const auto emit = [&report](const std::filesystem::path& p) {
    report.files.push_back(p.string());
  };

  report.confusion = confusion(f.probs, f.labels, threshold);
  const auto confusion_path = report_dir / "confusion.csv";
  write_confusion_csv(report.confusion, threshold, confusion_path);
  emit(confusion_path);

  const ThresholdSweep sw = sweep(f.probs, f.labels, n_points);
  const auto sweep_path = report_dir / "sweep.csv";
  write_sweep_csv(sw, sweep_path);
  emit(sweep_path);

  std::optional<RocCurve> curve;
  try {
    curve = roc(f.probs, f.labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate) {
      throw;
    }
    report.warnings.push_back(std::string("roc omitted: ") + e.what());
  }
  if (curve) {
    report.auc = curve->auc;
    const auto roc_path = report_dir / "roc.csv";
    write_roc_csv(*curve, roc_path);
    emit(roc_path);
  }

  // Density panels degrade per class instead of failing the whole report.
  std::vector<double> pos_probs;
  std::vector<double> neg_probs;
  for (std::size_t i = 0; i < f.probs.size(); ++i) {
    (f.labels[i] == 1 ? pos_probs : neg_probs).push_back(f.probs[i]);
  }
  std::optional<DensityEstimate> dpos;
  std::optional<DensityEstimate> dneg;
  const auto try_kde = [&report](const std::vector<double>& values, const char* cls)
      -> std::optional<DensityEstimate> {
    try {
      return kde(values);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate) {
        throw;
      }
      report.warnings.push_back(std::string("density for class ") + cls +
                                " omitted: " + e.what());
      return std::nullopt;
    }
  };
  dpos = try_kde(pos_probs, "1");
  dneg = try_kde(neg_probs, "0");
  const auto densities_path = report_dir / "densities.csv";
  write_densities_csv(dpos ? &*dpos : nullptr, dneg ? &*dneg : nullptr,
                      densities_path);
  emit(densities_path);

  const HistogramTriptych hist = histogram_triptych(f.probs, f.labels);
  const auto hist_path = report_dir / "histograms.csv";
  write_histograms_csv(hist, hist_path);
  emit(hist_path);

  {
    svg::Chart chart;
    chart.title = "Predicted probability densities";
    chart.x_label = "probability";
    chart.y_label = "density";
    svg::Series s1;
    s1.label = dpos ? "class 1" : "";
    if (dpos) {
      s1.xs = dpos->grid;
      s1.ys = dpos->values;
    }
    svg::Series s0;
    s0.label = dneg ? "class 0" : "";
    if (dneg) {
      s0.xs = dneg->grid;
      s0.ys = dneg->values;
    }
    chart.series.push_back(std::move(s1));
    chart.series.push_back(std::move(s0));
    const auto path = report_dir / "densities.svg";
    write_text(path, svg::render(chart));
    emit(path);
  }
  {
    svg::Chart chart;
    chart.title = "FAR and TS against the decision threshold";
    chart.x_label = "threshold";
    chart.y_label = "rate";
    chart.series.push_back(far_ts_series(sw, true, "FAR"));
    chart.series.push_back(far_ts_series(sw, false, "TS"));
    const auto path = report_dir / "far_ts.svg";
    write_text(path, svg::render(chart));
    emit(path);
  }
  {
    svg::Chart chart;
    chart.title = "TS against FAR";
    chart.x_label = "FAR";
    chart.y_label = "TS";
    chart.series.push_back(ts_vs_far_series(sw, ""));
    const SweepPoint& mark = sw.points[nearest_index(sw, threshold)];
    chart.markers.push_back({opt_or_nan(mark.far), opt_or_nan(mark.ts), 0,
                             tau_text(mark.threshold)});
    const auto path = report_dir / "ts_far.svg";
    write_text(path, svg::render(chart));
    emit(path);
  }
  if (curve) {
    svg::Chart chart;
    char title[48];
    std::snprintf(title, sizeof(title), "ROC (AUC = %.5f)", curve->auc);
    chart.title = title;
    chart.x_label = "1 - specificity";
    chart.y_label = "sensitivity";
    svg::Series s;
    for (const auto& [x, y] : curve->points) {
      s.xs.push_back(x);
      s.ys.push_back(y);
    }
    chart.series.push_back(std::move(s));
    svg::Series diag;
    diag.label = "chance";
    diag.xs = {0.0, 1.0};
    diag.ys = {0.0, 1.0};
    chart.series.push_back(std::move(diag));
    const auto path = report_dir / "roc.svg";
    write_text(path, svg::render(chart));
    emit(path);
  }
  return report;
}

CompareReport compare_report(std::span<const double> probs_a,
                             std::span<const int> labels_a,
                             std::span<const double> probs_b,
                             std::span<const int> labels_b, double threshold,
                             std::size_t n_points,
                             const std::filesystem::path& report_dir) {
  const Filtered fa = drop_missing(probs_a, labels_a);
  const Filtered fb = drop_missing(probs_b, labels_b);
  CompareReport report;
  report.n_dropped_a = fa.dropped;
  report.n_dropped_b = fb.dropped;
  if (fa.dropped > 0) {
    report.warnings.push_back(std::to_string(fa.dropped) +
                              " rows dropped from model a (missing probabilities)");
  }
  if (fb.dropped > 0) {
    report.warnings.push_back(std::to_string(fb.dropped) +
                              " rows dropped from model b (missing probabilities)");
  }

  const ThresholdSweep sweep_a = sweep(fa.probs, fa.labels, n_points);
  const ThresholdSweep sweep_b = sweep(fb.probs, fb.labels, n_points);
  report.result = tsfar_compare(sweep_a, sweep_b, threshold);
  for (const auto& w : report.result.warnings) {
    report.warnings.push_back(w);
  }

  std::filesystem::create_directories(report_dir);
  const auto compare_path = report_dir / "compare.csv";
  write_compare_csv(report.result, compare_path);
  report.files.push_back(compare_path.string());

  svg::Chart chart;
  chart.title = "TS against FAR, model a vs model b";
  chart.x_label = "FAR";
  chart.y_label = "TS";
  chart.series.push_back(ts_vs_far_series(sweep_a, "model a"));
  chart.series.push_back(ts_vs_far_series(sweep_b, "model b"));
  chart.markers.push_back({opt_or_nan(report.result.mark_a.far),
                           opt_or_nan(report.result.mark_a.ts), 0,
                           "a: " + tau_text(report.result.mark_a.threshold)});
  chart.markers.push_back({opt_or_nan(report.result.mark_b.far),
                           opt_or_nan(report.result.mark_b.ts), 1,
                           "b: " + tau_text(report.result.mark_b.threshold)});
  const auto svg_path = report_dir / "compare.svg";
  write_text(svg_path, svg::render(chart));
  report.files.push_back(svg_path.string());
  return report;
}

}  // namespace rareclass
