#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "riskmap/errors.hpp"
#include "riskmap/format.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/surface.hpp"

namespace riskmap {

/// 16-bit grayscale PGM (P5, maxval 65535, big-endian samples). Row 0 is the
/// top of the image and corresponds to y_max.
inline std::string write_pgm(const RiskSurface& s) {
    const std::size_t cells = s.geometry.cells;
    std::string out = "P5\n" + std::to_string(cells) + " " + std::to_string(cells) + "\n65535\n";
    out.reserve(out.size() + cells * cells * 2);
    for (std::size_t r = cells; r-- > 0;) {
        for (std::size_t c = 0; c < cells; ++c) {
            const long v = std::lround(s.grid[r * cells + c] * 65535.0);
            out += static_cast<char>((v >> 8) & 0xFF);
            out += static_cast<char>(v & 0xFF);
        }
    }
    return out;
}

namespace detail {

/// Five-stop dark-violet-to-yellow color ramp over [0,1].
inline std::string ramp_color(double v) {
    static constexpr int stops[5][3] = {
        {0x44, 0x01, 0x54}, {0x3b, 0x52, 0x8b}, {0x21, 0x91, 0x8c},
        {0x5e, 0xc9, 0x62}, {0xfd, 0xe7, 0x25}};
    v = std::min(std::max(v, 0.0), 1.0);
    const double t = v * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                  static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
    return buf;
}

inline const char* marker_color(std::size_t k) {
    static constexpr const char* palette[] = {"#e41a1c", "#377eb8", "#ff7f00",
                                              "#984ea3", "#a65628"};
    return palette[k % 5];
}

} // namespace detail

struct MarkerPoint {
    double x = 0.0;
    double y = 0.0;
    std::size_t id = 0;
};

/// Colorized heatmap of the surface with optional contract markers. Pixels
/// outside the valid mask are light gray.
inline std::string surface_svg(const RiskSurface& s,
                               const std::vector<MarkerPoint>& markers = {}) {
    const std::size_t cells = s.geometry.cells;
    const double px = 500.0 / static_cast<double>(cells);
    std::string out =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" "
        "viewBox=\"0 0 500 500\">\n";
    out += "<rect width=\"500\" height=\"500\" fill=\"#ffffff\"/>\n";
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t k = r * cells + c;
            const std::string color =
                s.valid[k] ? detail::ramp_color(s.grid[k]) : std::string("#f0f0f0");
            out += "<rect x=\"" + format_fixed(static_cast<double>(c) * px, 2) + "\" y=\"" +
                   format_fixed(static_cast<double>(cells - 1 - r) * px, 2) + "\" width=\"" +
                   format_fixed(px, 2) + "\" height=\"" + format_fixed(px, 2) + "\" fill=\"" +
                   color + "\"/>\n";
        }
    }
    const double sx = 500.0 / (s.geometry.x_max - s.geometry.x_min);
    const double sy = 500.0 / (s.geometry.y_max - s.geometry.y_min);
    for (std::size_t k = 0; k < markers.size(); ++k) {
        const MarkerPoint& m = markers[k];
        const double cx = (m.x - s.geometry.x_min) * sx;
        const double cy = 500.0 - (m.y - s.geometry.y_min) * sy;
        out += std::string("<circle cx=\"") + format_fixed(cx, 2) + "\" cy=\"" +
               format_fixed(cy, 2) + "\" r=\"6\" fill=\"" + detail::marker_color(k) +
               "\" stroke=\"#000000\" stroke-width=\"1.5\"><title>contract " +
               std::to_string(m.id) + "</title></circle>\n";
    }
    out += "</svg>\n";
    return out;
}

/// Scatter of embedding points: non-claims green (#2ca02c) under claims blue
/// (#1f77b4).
inline std::string embedding_svg(const Matrix& y, const std::vector<int>& claims) {
    if (y.rows != claims.size()) throw ConfigError("embedding_svg: row count mismatch");
    if (y.rows == 0) throw ConfigError("embedding_svg: empty embedding");
    double x_min = y(0, 0), x_max = y(0, 0), y_min = y(0, 1), y_max = y(0, 1);
    for (std::size_t i = 1; i < y.rows; ++i) {
        x_min = std::min(x_min, y(i, 0));
        x_max = std::max(x_max, y(i, 0));
        y_min = std::min(y_min, y(i, 1));
        y_max = std::max(y_max, y(i, 1));
    }
    const double pad_x = (x_max - x_min) == 0.0 ? 1.0 : (x_max - x_min) * 0.05;
    const double pad_y = (y_max - y_min) == 0.0 ? 1.0 : (y_max - y_min) * 0.05;
    x_min -= pad_x;
    x_max += pad_x;
    y_min -= pad_y;
    y_max += pad_y;
    const double sx = 600.0 / (x_max - x_min);
    const double sy = 600.0 / (y_max - y_min);

    std::string out =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
        "viewBox=\"0 0 600 600\">\n";
    out += "<rect width=\"600\" height=\"600\" fill=\"#ffffff\"/>\n";
    for (const int claim_pass : {0, 1}) {
        for (std::size_t i = 0; i < y.rows; ++i) {
            if (claims[i] != claim_pass) continue;
            const double cx = (y(i, 0) - x_min) * sx;
            const double cy = 600.0 - (y(i, 1) - y_min) * sy;
            out += std::string("<circle cx=\"") + format_fixed(cx, 2) + "\" cy=\"" +
                   format_fixed(cy, 2) + "\" r=\"2\" fill=\"" +
                   (claim_pass ? "#1f77b4" : "#2ca02c") + "\" fill-opacity=\"0.7\"/>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

} // namespace riskmap
