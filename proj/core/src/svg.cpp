#include "survcusum/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace survcusum::io {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 25.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

}  // namespace

void write_series_svg(const std::string& path, const ChartSeries& series,
                      std::optional<double> control_limit, const std::string& title) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);

    double t_min = 0.0, t_max = 1.0, v_min = 0.0, v_max = 1.0;
    if (!series.points.empty()) {
        t_max = std::max(1e-9, series.points.back().time);
        for (const auto& pt : series.points) v_max = std::max(v_max, pt.value);
    }
    if (control_limit) v_max = std::max(v_max, *control_limit * 1.05);
    v_max *= 1.05;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto sx = [&](double t) { return kMarginLeft + (t - t_min) / (t_max - t_min) * plot_w; };
    const auto sy = [&](double v) {
        return kHeight - kMarginBottom - (v - v_min) / (v_max - v_min) * plot_h;
    };

    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-family='sans-serif'"
        << " font-size='16'>" << title << "</text>\n";

    // axes
    out << "<line x1='" << kMarginLeft << "' y1='" << sy(v_min) << "' x2='" << sx(t_max)
        << "' y2='" << sy(v_min) << "' stroke='black'/>\n"
        << "<line x1='" << kMarginLeft << "' y1='" << sy(v_min) << "' x2='" << kMarginLeft
        << "' y2='" << kMarginTop << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = t_min + (t_max - t_min) * i / 5.0;
        const double v = v_min + (v_max - v_min) * i / 5.0;
        out << "<line x1='" << sx(t) << "' y1='" << sy(v_min) << "' x2='" << sx(t) << "' y2='"
            << sy(v_min) + 5 << "' stroke='black'/>\n"
            << "<text x='" << sx(t) << "' y='" << sy(v_min) + 20
            << "' text-anchor='middle' font-family='sans-serif' font-size='11'>" << num(t)
            << "</text>\n"
            << "<line x1='" << kMarginLeft - 5 << "' y1='" << sy(v) << "' x2='" << kMarginLeft
            << "' y2='" << sy(v) << "' stroke='black'/>\n"
            << "<text x='" << kMarginLeft - 8 << "' y='" << sy(v) + 4
            << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << num(v)
            << "</text>\n";
    }
    out << "<text x='" << kMarginLeft + plot_w / 2 << "' y='" << kHeight - 12
        << "' text-anchor='middle' font-family='sans-serif' font-size='13'>days</text>\n";

    if (control_limit) {
        out << "<line x1='" << kMarginLeft << "' y1='" << sy(*control_limit) << "' x2='"
            << sx(t_max) << "' y2='" << sy(*control_limit)
            << "' stroke='firebrick' stroke-dasharray='6,4'/>\n";
    }

    if (!series.points.empty()) {
        out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
        for (const auto& pt : series.points) out << num(sx(pt.time)) << ',' << num(sy(pt.value)) << ' ';
        out << "'/>\n";
    }
    out << "</svg>\n";
}

}  // namespace survcusum::io
