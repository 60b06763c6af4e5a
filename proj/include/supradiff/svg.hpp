#pragma once

#include "supradiff/csv.hpp"

#include <string>
#include <vector>

namespace supradiff {

struct LineSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<LineSeries> series;
};

/// Static SVG with axes, polylines and a legend. Non-finite points are skipped.
std::string render_svg(const LineChart& chart);

/// One series per y column, all against `x_column`. Charts are always built
/// from parsed CSV so a re-plot of a saved table is byte-identical.
LineChart chart_from_csv(const CsvTable& table, const std::string& x_column,
                         const std::vector<std::string>& y_columns, std::string title,
                         std::string y_label);

}  // namespace supradiff
