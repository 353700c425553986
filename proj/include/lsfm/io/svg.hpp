#pragma once

#include <string>
#include <vector>

namespace lsfm::io {

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;
  double width = 640;
  double height = 420;
};

/// Polyline chart with axes, ticks and a legend.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace lsfm::io
