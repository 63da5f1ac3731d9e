#pragma once

#include <string>
#include <vector>

#include "fedsim/csv.hpp"

namespace fedsim {

struct PlotSeries {
  std::string label;
  std::vector<AggregateRow> rows;
};

enum class PlotMetric { gap, dist_sq };

// log-y axis over whole decades; maps a value to a pixel y on the canvas
struct LogAxis {
  double lo_decade;  // floor(log10(smallest positive value))
  double hi_decade;
  double top, bottom;  // pixel range
  double y(double v) const;
  double decade_height() const;
};

LogAxis make_log_axis(double min_positive, double max_value);

// Standalone log-y line chart: one median polyline plus a min-max band
// polygon per series, decade gridlines, fixed 840x520 canvas. Pure text
// output, byte-deterministic for equal input.
std::string plot_svg(const std::vector<PlotSeries>& series,
                     PlotMetric metric = PlotMetric::gap,
                     const std::string& title = "");

void write_plot_svg(const std::string& path,
                    const std::vector<PlotSeries>& series,
                    PlotMetric metric = PlotMetric::gap,
                    const std::string& title = "");

}  // namespace fedsim
