#pragma once

#include <string>
#include <vector>

namespace fpu {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

// Polylines with axes, ticks and a legend. Non-finite points (and non-positive ones on a
// log axis) are skipped.
std::string render_svg(const PlotSpec& spec);
void write_svg(const std::string& path, const PlotSpec& spec);

}  // namespace fpu
