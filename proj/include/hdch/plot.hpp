#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hdch/grid.hpp"

namespace hdch {

namespace detail {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

inline std::string svg_line_chart(const std::vector<Series>& series, const std::string& title) {
    const int width = 800, height = 500, margin = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) {
        ymax = ymin + 1.0;
        ymin -= 1.0;
    }
    auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin); };

    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream os;
    char buf[256];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";
    // axes
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", margin,
                  height - margin, width - margin, height - margin);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", margin, margin,
                  margin, height - margin);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\">%.6g</text>\n", margin, height - margin + 20, xmin);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"end\" font-size=\"12\">%.6g</text>\n",
                  width - margin, height - margin + 20, xmax);
    os << buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\" font-size=\"12\">%.6g</text>\n", 4,
                  height - margin, ymin);
    os << buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\" font-size=\"12\">%.6g</text>\n", 4, margin,
                  ymax);
    os << buf;

    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        os << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.6g,%.6g ", px(s.x[i]), py(s.y[i]));
            os << buf;
        }
        os << "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%zu\" fill=\"%s\" font-size=\"13\">%s</text>\n",
                      width - margin - 80, margin + 18 * (k + 1), colors[k % 4], s.name.c_str());
        os << buf;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace detail

/// Energy/H curves of a diag.csv as a deterministic SVG file.
inline void plot_diag_csv(const std::string& csv_path, const std::string& svg_path) {
    std::ifstream is(csv_path);
    if (!is) throw IoError("plot: cannot open " + csv_path);
    std::string header;
    std::getline(is, header);
    detail::Series e{"E", {}, {}}, h{"H", {}, {}};
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::strtod(cell.c_str(), nullptr));
        if (cols.size() < 10) throw IoError("plot: malformed diag.csv row");
        e.x.push_back(cols[0]);
        e.y.push_back(cols[2]);
        h.x.push_back(cols[0]);
        h.y.push_back(cols[6]);
    }
    if (e.x.empty()) throw IoError("plot: diag.csv has no rows");
    std::ofstream os(svg_path);
    os << detail::svg_line_chart({e, h}, "energy E and higher-order energy H");
    if (!os) throw IoError("plot: cannot write " + svg_path);
}

/// Field snapshot as a PPM heatmap, fixed blue-white-red map on [-1, 1].
inline void plot_snapshot_ppm(const std::string& hdch_path, const std::string& ppm_path) {
    Field f = load_field(hdch_path);
    const Grid& g = f.grid();
    std::ofstream os(ppm_path, std::ios::binary);
    if (!os) throw IoError("plot: cannot write " + ppm_path);
    os << "P6\n" << g.nx << " " << g.ny << "\n255\n";
    auto channel = [](double v) {
        return static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
    };
    // row 0 of the image is the top of the domain (largest y)
    for (int j = g.ny - 1; j >= 0; --j)
        for (int i = 0; i < g.nx; ++i) {
            const double v = std::clamp(f(i, j), -1.0, 1.0);
            unsigned char rgb[3];
            if (v >= 0.0) { // white -> red
                rgb[0] = 255;
                rgb[1] = channel(255.0 * (1.0 - v));
                rgb[2] = channel(255.0 * (1.0 - v));
            } else { // white -> blue
                rgb[0] = channel(255.0 * (1.0 + v));
                rgb[1] = channel(255.0 * (1.0 + v));
                rgb[2] = 255;
            }
            os.write(reinterpret_cast<const char*>(rgb), 3);
        }
    if (!os) throw IoError("plot: write failure on " + ppm_path);
}

} // namespace hdch
