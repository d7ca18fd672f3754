#pragma once

#include <string>

namespace fovctl {

struct Table;

/// Render a time-series table (first column = time) as a static SVG line
/// plot with axes and a legend entry per series.
void write_series_plot(const std::string& path, const std::string& title, const Table& table);

}  // namespace fovctl
