#pragma once

#include <optional>
#include <string>
#include <vector>

#include "survcusum/charts.hpp"

namespace survcusum::io {

// Static line chart: the series as a polyline, axis ticks, and an optional
// dashed horizontal rule at the control limit.
void write_series_svg(const std::string& path, const ChartSeries& series,
                      std::optional<double> control_limit, const std::string& title);

}  // namespace survcusum::io
