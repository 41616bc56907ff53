#pragma once

#include <string>
#include <vector>

namespace adaptcl {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    double y_min = 0.0;
    double y_max = 1.0;
    std::vector<double> x_markers;  // vertical dashed lines (dataset boundaries)
    int width = 720;
    int height = 440;
};

/// Self-contained SVG line chart: axes, ticks, one polyline per series,
/// legend, optional vertical markers. No external assets.
std::string render_line_chart(const SvgChartSpec& spec,
                              const std::vector<SvgSeries>& series);

struct SvgBarGroup {
    std::string label;               // group name (e.g. layer)
    std::vector<double> values;      // one bar per dataset
};

/// Grouped vertical bars in [0, 1] (per-layer used fraction per dataset).
std::string render_grouped_bars(const std::string& title,
                                const std::vector<std::string>& series_labels,
                                const std::vector<SvgBarGroup>& groups);

}  // namespace adaptcl
