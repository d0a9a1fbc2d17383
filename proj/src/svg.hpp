// Minimal deterministic SVG line charts: polyline series with axes, ticks,
// optional point markers and a legend. Output depends only on the inputs
// (fixed canvas, fixed palette, fixed number formatting), so rerunning a
// report produces byte-identical files.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rareclass::svg {

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;  // NaN breaks the line
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::size_t series = 0;  // colored like this series
  std::string label;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;
};

std::string render(const Chart& chart);

}  // namespace rareclass::svg
