#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gapflight/sim.hpp"

namespace gapflight {

/// Minimal deterministic SVG chart writer: fixed canvas, polyline series,
/// box axes with min/max tick labels. Enough to render trace plots without a
/// plotting dependency.
namespace svg {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;
};

struct Panel {
    std::string title;
    std::string x_label, y_label;
    std::vector<Series> series;
    // Optional straight segments (e.g., the gap opening).
    struct Segment {
        double x0, y0, x1, y1;
        std::string color;
        double width;
    };
    std::vector<Segment> segments;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

/// Renders panels stacked vertically into one SVG file.
inline void write(const std::vector<Panel>& panels, const std::string& path, int width = 640,
                  int panel_height = 320, const std::string& comment = "") {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    const int height = panel_height * static_cast<int>(panels.size());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (!comment.empty()) os << "<!-- " << comment << " -->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double ml = 60, mr = 20, mt = 36, mb = 42;
    for (size_t pi = 0; pi < panels.size(); ++pi) {
        const Panel& p = panels[pi];
        const double oy = static_cast<double>(pi) * panel_height;
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& s : p.series) {
            for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
            for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
        }
        for (const auto& seg : p.segments) {
            xmin = std::min({xmin, seg.x0, seg.x1});
            xmax = std::max({xmax, seg.x0, seg.x1});
            ymin = std::min({ymin, seg.y0, seg.y1});
            ymax = std::max({ymax, seg.y0, seg.y1});
        }
        if (xmin > xmax) xmin = 0, xmax = 1;
        if (ymin > ymax) ymin = 0, ymax = 1;
        if (xmax - xmin < 1e-12) xmax = xmin + 1;
        if (ymax - ymin < 1e-12) ymax = ymin + 1;
        const double pad_x = 0.04 * (xmax - xmin), pad_y = 0.08 * (ymax - ymin);
        xmin -= pad_x, xmax += pad_x, ymin -= pad_y, ymax += pad_y;

        const double pw = width - ml - mr, ph = panel_height - mt - mb;
        auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
        auto sy = [&](double v) { return oy + mt + ph - (v - ymin) / (ymax - ymin) * ph; };

        os << "<rect x=\"" << ml << "\" y=\"" << oy + mt << "\" width=\"" << pw << "\" height=\""
           << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml << "\" y=\"" << oy + mt - 12
           << "\" font-family=\"sans-serif\" font-size=\"14\">" << p.title << "</text>\n";
        os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << oy + mt + ph + 32
           << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << p.x_label
           << "</text>\n";
        os << "<text x=\"16\" y=\"" << oy + mt + ph / 2
           << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
           << oy + mt + ph / 2 << ")\">" << p.y_label << "</text>\n";
        // Corner tick labels.
        os << "<text x=\"" << ml << "\" y=\"" << oy + mt + ph + 16
           << "\" font-family=\"sans-serif\" font-size=\"10\">" << detail::num(xmin) << "</text>\n";
        os << "<text x=\"" << ml + pw << "\" y=\"" << oy + mt + ph + 16
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
           << detail::num(xmax) << "</text>\n";
        os << "<text x=\"" << ml - 4 << "\" y=\"" << oy + mt + ph
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
           << detail::num(ymin) << "</text>\n";
        os << "<text x=\"" << ml - 4 << "\" y=\"" << oy + mt + 10
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
           << detail::num(ymax) << "</text>\n";

        for (const auto& seg : p.segments) {
            os << "<line x1=\"" << detail::num(sx(seg.x0)) << "\" y1=\"" << detail::num(sy(seg.y0))
               << "\" x2=\"" << detail::num(sx(seg.x1)) << "\" y2=\"" << detail::num(sy(seg.y1))
               << "\" stroke=\"" << seg.color << "\" stroke-width=\"" << seg.width << "\"/>\n";
        }
        double legend_y = oy + mt + 16;
        for (const auto& s : p.series) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i)
                os << detail::num(sx(s.x[i])) << "," << detail::num(sy(s.y[i]))
                   << (i + 1 < s.x.size() ? " " : "");
            os << "\"/>\n";
            if (!s.label.empty()) {
                os << "<line x1=\"" << ml + pw - 110 << "\" y1=\"" << legend_y - 4 << "\" x2=\""
                   << ml + pw - 90 << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color
                   << "\" stroke-width=\"2\"/>\n";
                os << "<text x=\"" << ml + pw - 84 << "\" y=\"" << legend_y
                   << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
                legend_y += 14;
            }
        }
    }
    os << "</svg>\n";
}

}  // namespace svg

/// Flight plot: path projections (X-Z and X-Y) with the gap opening marked,
/// plus attitude versus time.
inline void write_mission_plot(const Trace& trace, const Scenario& scenario,
                               const std::string& path, const std::string& provenance = "") {
    svg::Panel xz, xy, att;
    xz.title = "Path, X-Z projection";
    xz.x_label = "x [m]";
    xz.y_label = "z [m]";
    xy.title = "Path, X-Y projection";
    xy.x_label = "x [m]";
    xy.y_label = "y [m]";
    att.title = "Attitude vs time";
    att.x_label = "t [s]";
    att.y_label = "angle [deg]";

    svg::Series pz{"flight", "#1f77b4", {}, {}}, py{"flight", "#1f77b4", {}, {}};
    svg::Series roll{"roll", "#d62728", {}, {}}, pitch{"pitch", "#2ca02c", {}, {}};
    svg::Series cmd_roll{"cmd roll", "#ff9896", {}, {}};
    for (size_t i = 0; i < trace.states.size(); ++i) {
        const FullState& s = trace.states[i];
        pz.x.push_back(s.p.x());
        pz.y.push_back(s.p.z());
        py.x.push_back(s.p.x());
        py.y.push_back(s.p.y());
        roll.x.push_back(s.t);
        roll.y.push_back(s.att.x() * 180.0 / M_PI);
        pitch.x.push_back(s.t);
        pitch.y.push_back(s.att.y() * 180.0 / M_PI);
        cmd_roll.x.push_back(s.t);
        cmd_roll.y.push_back(trace.commands[i].roll * 180.0 / M_PI);
    }
    xz.series.push_back(pz);
    xy.series.push_back(py);
    att.series = {roll, pitch, cmd_roll};

    const Vec3 c = scenario.gap.center;
    const Vec3 u = scenario.gap.long_axis() * scenario.gap.width / 2.0;
    xz.segments.push_back({c.x(), c.z() - u.z() - 0.02, c.x(), c.z() + u.z() + 0.02, "#555", 3.0});
    xy.segments.push_back({c.x(), c.y() - u.y() - 0.02, c.x(), c.y() + u.y() + 0.02, "#555", 3.0});

    svg::write({xz, xy, att}, path, 640, 320, provenance);
}

}  // namespace gapflight
