#pragma once

#include <string>
#include <vector>

namespace reachlab {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;
};

/// Minimal standalone SVG line chart. Non-finite points (and non-positive
/// ones on a log axis) are skipped.
struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;

  std::string render(int width = 720, int height = 480) const;
};

}  // namespace reachlab
