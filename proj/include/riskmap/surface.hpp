#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "riskmap/dataset.hpp"
#include "riskmap/errors.hpp"
#include "riskmap/matrix.hpp"
#include "riskmap/neuralnet.hpp"
#include "riskmap/tsne.hpp"

namespace riskmap {

constexpr std::size_t kGridCells = 100;

/// Pixel grid over the embedding plane: training bounding box expanded by a
/// margin per side, square cells, half-open with a closed top edge so points
/// exactly on x_max/y_max land in the last cell. Rows index y from y_min.
struct GridGeometry {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    std::size_t cells = kGridCells;

    std::optional<std::pair<std::size_t, std::size_t>> locate(double x, double y) const {
        if (!(x >= x_min && x <= x_max && y >= y_min && y <= y_max)) return std::nullopt;
        const double fx = (x - x_min) / (x_max - x_min) * static_cast<double>(cells);
        const double fy = (y - y_min) / (y_max - y_min) * static_cast<double>(cells);
        const std::size_t col = std::min(cells - 1, static_cast<std::size_t>(fx));
        const std::size_t row = std::min(cells - 1, static_cast<std::size_t>(fy));
        return std::make_pair(row, col);
    }

    std::pair<double, double> center(std::size_t row, std::size_t col) const {
        const double cx =
            x_min + (static_cast<double>(col) + 0.5) * (x_max - x_min) / static_cast<double>(cells);
        const double cy =
            y_min + (static_cast<double>(row) + 0.5) * (y_max - y_min) / static_cast<double>(cells);
        return {cx, cy};
    }
};

inline GridGeometry grid_geometry(const Embedding& embedding, double margin_fraction = 0.02) {
    const Matrix& y = embedding.y;
    if (y.rows < 2) throw ConfigError("grid_geometry: need at least 2 points");
    if (!(margin_fraction >= 0.0)) throw ConfigError("grid_geometry: margin must be >= 0");
    GridGeometry g;
    g.x_min = g.x_max = y(0, 0);
    g.y_min = g.y_max = y(0, 1);
    for (std::size_t i = 1; i < y.rows; ++i) {
        g.x_min = std::min(g.x_min, y(i, 0));
        g.x_max = std::max(g.x_max, y(i, 0));
        g.y_min = std::min(g.y_min, y(i, 1));
        g.y_max = std::max(g.y_max, y(i, 1));
    }
    if (g.x_min == g.x_max || g.y_min == g.y_max) {
        throw NumericError("grid_geometry: degenerate bounding box");
    }
    const double mx = (g.x_max - g.x_min) * margin_fraction;
    const double my = (g.y_max - g.y_min) * margin_fraction;
    g.x_min -= mx;
    g.x_max += mx;
    g.y_min -= my;
    g.y_max += my;
    return g;
}

/// Smoothed risk values over the embedding plane. grid holds [0,1] values,
/// zero outside valid; valid is the 3x3 dilation of occupancy; raw_min/max
/// is the unnormalized prediction range over training points.
struct RiskSurface {
    GridGeometry geometry;
    std::vector<double> grid;          // cells x cells, row-major, row = y index
    std::vector<std::uint8_t> occupancy;
    std::vector<std::uint8_t> valid;
    double raw_min = 0.0;
    double raw_max = 0.0;

    double at(std::size_t row, std::size_t col) const {
        return grid[row * geometry.cells + col];
    }
};

struct RiskScore {
    bool out_of_surface = false;
    double value = 0.0; // meaningful only when !out_of_surface
};

namespace detail {

inline std::vector<double> mean_smooth_3x3(const std::vector<double>& g, std::size_t cells) {
    std::vector<double> out(g.size(), 0.0);
    const double w = 1.0 / 9.0;
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            double sum = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r) + dr;
                    const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(cells) ||
                        cc >= static_cast<std::ptrdiff_t>(cells)) {
                        continue; // zero padding
                    }
                    sum += g[static_cast<std::size_t>(rr) * cells + static_cast<std::size_t>(cc)];
                }
            }
            out[r * cells + c] = sum * w;
        }
    }
    return out;
}

inline std::vector<std::uint8_t> dilate_3x3(const std::vector<std::uint8_t>& m,
                                            std::size_t cells) {
    std::vector<std::uint8_t> out(m.size(), 0);
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            if (!m[r * cells + c]) continue;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r) + dr;
                    const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(cells) ||
                        cc >= static_cast<std::ptrdiff_t>(cells)) {
                        continue;
                    }
                    out[static_cast<std::size_t>(rr) * cells + static_cast<std::size_t>(cc)] = 1;
                }
            }
        }
    }
    return out;
}

} // namespace detail

/// Surface construction: normalize raw predictions over the training range,
/// evaluate pixel centers, zero unoccupied pixels, smooth with the uniform
/// 3x3 kernel (zero padding), then restrict to the dilated occupancy mask.
inline RiskSurface build_surface(const Mlp& nn_risk, const Embedding& embedding,
                                 const GridGeometry& geometry) {
    const std::size_t cells = geometry.cells;
    RiskSurface s;
    s.geometry = geometry;

    const Matrix train_pred = forward(nn_risk, embedding.y);
    s.raw_min = train_pred(0, 0);
    s.raw_max = train_pred(0, 0);
    for (std::size_t i = 1; i < train_pred.rows; ++i) {
        s.raw_min = std::min(s.raw_min, train_pred(i, 0));
        s.raw_max = std::max(s.raw_max, train_pred(i, 0));
    }
    if (s.raw_max == s.raw_min) throw NumericError("build_surface: degenerate risk range");
    const double inv_range = 1.0 / (s.raw_max - s.raw_min);

    Matrix centers(cells * cells, 2);
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            const auto [cx, cy] = geometry.center(r, c);
            centers(r * cells + c, 0) = cx;
            centers(r * cells + c, 1) = cy;
        }
    }
    const Matrix pixel_pred = forward(nn_risk, centers);
    s.grid.resize(cells * cells);
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        s.grid[k] = std::clamp((pixel_pred(k, 0) - s.raw_min) * inv_range, 0.0, 1.0);
    }

    s.occupancy.assign(cells * cells, 0);
    for (std::size_t i = 0; i < embedding.y.rows; ++i) {
        const auto loc = geometry.locate(embedding.y(i, 0), embedding.y(i, 1));
        if (!loc) throw NumericError("build_surface: training point outside geometry");
        s.occupancy[loc->first * cells + loc->second] = 1;
    }
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        if (!s.occupancy[k]) s.grid[k] = 0.0;
    }

    s.grid = detail::mean_smooth_3x3(s.grid, cells);
    s.valid = detail::dilate_3x3(s.occupancy, cells);
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        if (!s.valid[k]) s.grid[k] = 0.0;
    }
    return s;
}

inline RiskScore score(const RiskSurface& surface, double x, double y) {
    const auto loc = surface.geometry.locate(x, y);
    if (!loc) return {true, 0.0};
    const std::size_t k = loc->first * surface.geometry.cells + loc->second;
    if (!surface.valid[k]) return {true, 0.0};
    return {false, surface.grid[k]};
}

/// Full inference chain over raw records: encode, normalize, embed through
/// NN_tsne, look up the surface. Out-of-surface records are flagged and
/// excluded from the retained list.
struct BatchScores {
    std::vector<RiskScore> scores;
    Matrix coords; // N x 2 embedding coordinates
    std::vector<std::size_t> retained;
    std::size_t out_of_surface_count = 0;
};

inline BatchScores score_batch(const RiskSurface& surface, const Mlp& nn_tsne,
                               const Normalizer& normalizer,
                               const std::vector<ContractRecord>& records) {
    BatchScores out;
    if (records.empty()) {
        out.coords = Matrix(0, 2);
        return out;
    }
    const Matrix features = apply_normalizer(normalizer, encode_features(records));
    out.coords = forward(nn_tsne, features);
    out.scores.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RiskScore rs = score(surface, out.coords(i, 0), out.coords(i, 1));
        out.scores.push_back(rs);
        if (rs.out_of_surface) {
            ++out.out_of_surface_count;
        } else {
            out.retained.push_back(i);
        }
    }
    return out;
}

/// Builds a surface for any per-point [0,1] value (e.g. the insurer risk) by
/// the same mechanism as the claim surface: fit a value net of NN_risk's
/// shape, then normalize, zero, smooth and mask identically.
inline RiskSurface build_value_surface(const std::vector<double>& values,
                                       const Embedding& embedding,
                                       const GridGeometry& geometry, const TrainConfig& cfg,
                                       std::size_t hidden_width = 5) {
    if (values.size() != embedding.y.rows) {
        throw ConfigError("build_value_surface: row count mismatch");
    }
    for (const double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError("build_value_surface: values must lie in [0,1]");
        }
    }
    const Mlp net = fit_value_net(embedding.y, values, cfg, hidden_width);
    return build_surface(net, embedding, geometry);
}

} // namespace riskmap
