#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dpfl/experiment.hpp"

namespace dpfl {

namespace {

constexpr double kFloor = 1e-16;
constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

void write_svg_plot(std::ostream& out, const std::vector<PlotSeries>& series, const std::string& x_label,
                    const std::string& y_label) {
    const double width = 720, height = 480, left = 80, right = 190, top = 30, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;

    double xmax = 1.0;
    double ylo = 0.0, yhi = -16.0;
    bool any = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmax = std::max(xmax, s.x[i]);
            const double ly = std::log10(std::max(s.y[i], kFloor));
            ylo = any ? std::min(ylo, ly) : ly;
            yhi = any ? std::max(yhi, ly) : ly;
            any = true;
        }
    }
    ylo = std::floor(ylo);
    yhi = std::ceil(yhi);
    if (yhi <= ylo) yhi = ylo + 1;
    auto px = [&](double x) { return left + pw * x / xmax; };
    auto py = [&](double y) { return top + ph * (yhi - std::log10(std::max(y, kFloor))) / (yhi - ylo); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    const int step = std::max(1, static_cast<int>((yhi - ylo) / 8));
    for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); e += step) {
        const double y = top + ph * (yhi - e) / (yhi - ylo);
        out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fixed(y) << "\" y2=\"" << fixed(y)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmax * t / 4.0;
        out << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << static_cast<long long>(std::llround(xv)) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    out << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << y_label
        << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % kColors.size()];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            out << (i ? " " : "") << fixed(px(series[s].x[i])) << ',' << fixed(py(series[s].y[i]));
        }
        out << "\"/>\n";
        const double ly = top + 20 + 20.0 * static_cast<double>(s);
        out << "<line x1=\"" << left + pw + 15 << "\" x2=\"" << left + pw + 40 << "\" y1=\"" << ly << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace dpfl
