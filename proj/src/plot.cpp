#include "fovctl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fovctl/errors.hpp"
#include "fovctl/runlog.hpp"

namespace fovctl {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                          "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void write_series_plot(const std::string& path, const std::string& title, const Table& table) {
    if (table.columns.size() < 2 || table.rows.empty())
        throw validation_error("plot: table needs a time column and at least one series");

    const int width = 960, height = 540;
    const int ml = 70, mr = 230, mt = 40, mb = 50;  // margins; right side holds the legend
    const int pw = width - ml - mr, ph = height - mt - mb;

    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const auto& row : table.rows) {
        tmin = std::min(tmin, row[0]);
        tmax = std::max(tmax, row[0]);
        for (size_t c = 1; c < row.size(); ++c) {
            if (!std::isfinite(row[c])) continue;
            vmin = std::min(vmin, row[c]);
            vmax = std::max(vmax, row[c]);
        }
    }
    if (!(tmax > tmin)) tmax = tmin + 1.0;
    if (!(vmax > vmin)) {
        vmax = vmin + 1.0;
        vmin -= 1.0;
    }
    const double vpad = 0.05 * (vmax - vmin);
    vmin -= vpad;
    vmax += vpad;

    auto sx = [&](double t) { return ml + pw * (t - tmin) / (tmax - tmin); };
    auto sy = [&](double v) { return mt + ph * (1.0 - (v - vmin) / (vmax - vmin)); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("plot: cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // frame + ticks
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double t = tmin + (tmax - tmin) * k / 5.0;
        const double v = vmin + (vmax - vmin) * k / 5.0;
        out << "<line x1=\"" << sx(t) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(t) << "\" y2=\""
            << mt + ph + 5 << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << sx(t) << "\" y=\"" << mt + ph + 20
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(t)
            << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(v) << "\" x2=\"" << ml << "\" y2=\""
            << sy(v) << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(v)
            << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">t [s]</text>\n";

    const int series = static_cast<int>(table.columns.size()) - 1;
    for (int s = 0; s < series; ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"";
        for (const auto& row : table.rows)
            if (std::isfinite(row[s + 1])) out << fmt(sx(row[0])) << "," << fmt(sy(row[s + 1])) << " ";
        out << "\"/>\n";
        const int ly = mt + 16 * s;
        out << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 30
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + pw + 35 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << table.columns[s + 1]
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace fovctl
