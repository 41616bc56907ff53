#include "adaptcl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace adaptcl {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Frame {
    double left, top, right, bottom;  // pixel bounds of the plot area
    double x_min, x_max, y_min, y_max;

    double px(double x) const {
        if (x_max == x_min) return left;
        return left + (x - x_min) / (x_max - x_min) * (right - left);
    }
    double py(double y) const {
        if (y_max == y_min) return bottom;
        return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
    }
};

void draw_axes(std::ostringstream& os, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    os << "<rect x=\"" << fmt(f.left) << "\" y=\"" << fmt(f.top) << "\" width=\""
       << fmt(f.right - f.left) << "\" height=\"" << fmt(f.bottom - f.top)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double fx = f.x_min + (f.x_max - f.x_min) * i / ticks;
        const double fy = f.y_min + (f.y_max - f.y_min) * i / ticks;
        os << "<line x1=\"" << fmt(f.px(fx)) << "\" y1=\"" << fmt(f.bottom) << "\" x2=\""
           << fmt(f.px(fx)) << "\" y2=\"" << fmt(f.bottom + 4) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << fmt(f.px(fx)) << "\" y=\"" << fmt(f.bottom + 16)
           << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
        os << "<line x1=\"" << fmt(f.left - 4) << "\" y1=\"" << fmt(f.py(fy)) << "\" x2=\""
           << fmt(f.left) << "\" y2=\"" << fmt(f.py(fy)) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << fmt(f.left - 6) << "\" y=\"" << fmt(f.py(fy) + 3)
           << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
    }
    os << "<text x=\"" << fmt((f.left + f.right) / 2) << "\" y=\"" << fmt(f.bottom + 32)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << x_label << "</text>\n";
    os << "<text x=\"14\" y=\"" << fmt((f.top + f.bottom) / 2)
       << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << fmt((f.top + f.bottom) / 2) << ")\">" << y_label << "</text>\n";
}

}  // namespace

std::string render_line_chart(const SvgChartSpec& spec,
                              const std::vector<SvgSeries>& series) {
    double x_min = 0.0, x_max = 1.0;
    bool have_x = false;
    for (const auto& s : series) {
        for (const double x : s.x) {
            if (!have_x) {
                x_min = x_max = x;
                have_x = true;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
            }
        }
    }
    if (x_min == x_max) x_max = x_min + 1.0;

    Frame f{56.0, 36.0, spec.width - 140.0, spec.height - 48.0,
            x_min, x_max, spec.y_min, spec.y_max};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
       << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << " "
       << spec.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt((f.left + f.right) / 2)
       << "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">" << spec.title
       << "</text>\n";
    draw_axes(os, f, spec.x_label, spec.y_label);

    for (const double xm : spec.x_markers) {
        if (xm < f.x_min || xm > f.x_max) continue;
        os << "<line x1=\"" << fmt(f.px(xm)) << "\" y1=\"" << fmt(f.top) << "\" x2=\""
           << fmt(f.px(xm)) << "\" y2=\"" << fmt(f.bottom)
           << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const SvgSeries& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = std::clamp(s.y[i], f.y_min, f.y_max);
            os << fmt(f.px(s.x[i])) << "," << fmt(f.py(y)) << " ";
        }
        os << "\"/>\n";
        const double ly = f.top + 14.0 * static_cast<double>(si);
        os << "<line x1=\"" << fmt(f.right + 8) << "\" y1=\"" << fmt(ly) << "\" x2=\""
           << fmt(f.right + 26) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(f.right + 30) << "\" y=\"" << fmt(ly + 3)
           << "\" font-size=\"10\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_grouped_bars(const std::string& title,
                                const std::vector<std::string>& series_labels,
                                const std::vector<SvgBarGroup>& groups) {
    const int width = 720, height = 440;
    Frame f{56.0, 36.0, width - 140.0, height - 48.0, 0.0, 1.0, 0.0, 1.0};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt((f.left + f.right) / 2)
       << "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">" << title << "</text>\n";
    os << "<rect x=\"" << fmt(f.left) << "\" y=\"" << fmt(f.top) << "\" width=\""
       << fmt(f.right - f.left) << "\" height=\"" << fmt(f.bottom - f.top)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        os << "<text x=\"" << fmt(f.left - 6) << "\" y=\"" << fmt(f.py(v) + 3)
           << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }

    const std::size_t n_groups = groups.size();
    const std::size_t n_series = series_labels.size();
    if (n_groups > 0 && n_series > 0) {
        const double group_w = (f.right - f.left) / static_cast<double>(n_groups);
        const double bar_w = group_w * 0.8 / static_cast<double>(n_series);
        for (std::size_t gi = 0; gi < n_groups; ++gi) {
            const double gx = f.left + group_w * static_cast<double>(gi) + group_w * 0.1;
            for (std::size_t si = 0; si < n_series && si < groups[gi].values.size(); ++si) {
                const double v = std::clamp(groups[gi].values[si], 0.0, 1.0);
                const double x = gx + bar_w * static_cast<double>(si);
                os << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(f.py(v)) << "\" width=\""
                   << fmt(bar_w * 0.92) << "\" height=\"" << fmt(f.bottom - f.py(v))
                   << "\" fill=\"" << kPalette[si % kPaletteSize] << "\"/>\n";
            }
            os << "<text x=\"" << fmt(gx + group_w * 0.4) << "\" y=\"" << fmt(f.bottom + 16)
               << "\" font-size=\"10\" text-anchor=\"middle\">" << groups[gi].label
               << "</text>\n";
        }
        for (std::size_t si = 0; si < n_series; ++si) {
            const double ly = f.top + 14.0 * static_cast<double>(si);
            os << "<rect x=\"" << fmt(f.right + 8) << "\" y=\"" << fmt(ly - 7)
               << "\" width=\"12\" height=\"10\" fill=\"" << kPalette[si % kPaletteSize]
               << "\"/>\n";
            os << "<text x=\"" << fmt(f.right + 24) << "\" y=\"" << fmt(ly + 2)
               << "\" font-size=\"10\">" << series_labels[si] << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace adaptcl
