#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>

namespace rareclass::svg {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 696.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 432.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#8c564b", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(const char* pattern, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return std::string(buf);
}

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const Chart& chart, bool vertical) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  auto take = [&](double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  for (const Series& s : chart.series) {
    const auto& vs = vertical ? s.ys : s.xs;
    for (const double v : vs) {
      take(v);
    }
  }
  for (const Marker& m : chart.markers) {
    take(vertical ? m.y : m.x);
  }
  if (!(lo <= hi)) {
    return {0.0, 1.0};
  }
  if (lo == hi) {
    return {lo - 0.5, hi + 0.5};
  }
  if (vertical) {
    const double pad = (hi - lo) * 0.04;
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step = 10.0;
  if (frac <= 1.0) {
    step = 1.0;
  } else if (frac <= 2.0) {
    step = 2.0;
  } else if (frac <= 2.5) {
    step = 2.5;
  } else if (frac <= 5.0) {
    step = 5.0;
  }
  return step * mag;
}

}  // namespace

std::string render(const Chart& chart) {
  const Range xr = data_range(chart, false);
  const Range yr = data_range(chart, true);
  const auto px = [&](double x) {
    return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft);
  };
  const auto py = [&](double y) {
    return kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop);
  };

  std::string out;
  out.reserve(1 << 14);
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "viewBox=\"0 0 720 480\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"720\" height=\"480\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"360\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" +
         escape(chart.title) + "</text>\n";

  // Gridlines and tick labels.
  const double xstep = nice_step(xr.hi - xr.lo);
  for (double t = std::ceil(xr.lo / xstep) * xstep; t <= xr.hi + 1e-9 * xstep;
       t += xstep) {
    const double x = px(t);
    out += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kTop) +
           "\" x2=\"" + fmt("%.2f", x) + "\" y2=\"" + fmt("%.2f", kBottom) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", kBottom + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmt("%.6g", t) +
           "</text>\n";
  }
  const double ystep = nice_step(yr.hi - yr.lo);
  for (double t = std::ceil(yr.lo / ystep) * ystep; t <= yr.hi + 1e-9 * ystep;
       t += ystep) {
    const double y = py(t);
    out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", y) +
           "\" x2=\"" + fmt("%.2f", kRight) + "\" y2=\"" + fmt("%.2f", y) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft - 8) + "\" y=\"" + fmt("%.2f", y + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt("%.6g", t) + "</text>\n";
  }

  // Axes.
  out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", kTop) +
         "\" x2=\"" + fmt("%.2f", kLeft) + "\" y2=\"" + fmt("%.2f", kBottom) +
         "\" stroke=\"#000000\"/>\n";
  out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", kBottom) +
         "\" x2=\"" + fmt("%.2f", kRight) + "\" y2=\"" + fmt("%.2f", kBottom) +
         "\" stroke=\"#000000\"/>\n";
  out += "<text x=\"" + fmt("%.2f", (kLeft + kRight) / 2.0) + "\" y=\"470\" "
         "font-size=\"13\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt("%.2f", (kTop + kBottom) / 2.0) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt("%.2f", (kTop + kBottom) / 2.0) + ")\">" + escape(chart.y_label) +
         "</text>\n";

  // Series paths, clipped only by the data itself (NaN splits the path).
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const Series& series = chart.series[s];
    const char* color = kPalette[s % kPaletteSize];
    std::string d;
    bool pen_down = false;
    const std::size_t count = std::min(series.xs.size(), series.ys.size());
    for (std::size_t i = 0; i < count; ++i) {
      const double x = series.xs[i];
      const double y = series.ys[i];
      if (!std::isfinite(x) || !std::isfinite(y)) {
        pen_down = false;
        continue;
      }
      d += pen_down ? "L" : "M";
      d += fmt("%.2f", px(x)) + " " + fmt("%.2f", py(y)) + " ";
      pen_down = true;
    }
    if (!d.empty()) {
      out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\"/>\n";
    }
  }

  for (const Marker& m : chart.markers) {
    if (!std::isfinite(m.x) || !std::isfinite(m.y)) {
      continue;
    }
    const char* color = kPalette[m.series % kPaletteSize];
    out += "<circle cx=\"" + fmt("%.2f", px(m.x)) + "\" cy=\"" +
           fmt("%.2f", py(m.y)) + "\" r=\"4.5\" fill=\"" + color + "\"/>\n";
    if (!m.label.empty()) {
      out += "<text x=\"" + fmt("%.2f", px(m.x) + 7) + "\" y=\"" +
             fmt("%.2f", py(m.y) - 7) + "\" font-size=\"11\">" + escape(m.label) +
             "</text>\n";
    }
  }

  // Legend, top right inside the plot area.
  double ly = kTop + 14.0;
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    if (chart.series[s].label.empty()) {
      continue;
    }
    const char* color = kPalette[s % kPaletteSize];
    out += "<line x1=\"" + fmt("%.2f", kRight - 140) + "\" y1=\"" +
           fmt("%.2f", ly - 4) + "\" x2=\"" + fmt("%.2f", kRight - 116) +
           "\" y2=\"" + fmt("%.2f", ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kRight - 110) + "\" y=\"" + fmt("%.2f", ly) +
           "\" font-size=\"12\">" + escape(chart.series[s].label) + "</text>\n";
    ly += 18.0;
  }

  out += "</svg>\n";
  return out;
}

}  // namespace rareclass::svg
