#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "riskmap/surface.hpp"
#include "test_support.hpp"

using namespace riskmap;

TEST_CASE("grid geometry expands the bounding box by the margin", "[surface]") {
    Embedding emb;
    emb.y = Matrix(2, 2);
    emb.y(0, 0) = 0.0;
    emb.y(0, 1) = 0.0;
    emb.y(1, 0) = 10.0;
    emb.y(1, 1) = 20.0;
    const GridGeometry g = grid_geometry(emb, 0.02);
    CHECK(g.x_min == Catch::Approx(-0.2).epsilon(1e-12));
    CHECK(g.x_max == Catch::Approx(10.2).epsilon(1e-12));
    CHECK(g.y_min == Catch::Approx(-0.4).epsilon(1e-12));
    CHECK(g.y_max == Catch::Approx(20.4).epsilon(1e-12));
    CHECK(g.cells == kGridCells);
}

TEST_CASE("grid geometry rejects degenerate boxes", "[surface]") {
    Embedding flat;
    flat.y = Matrix(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        flat.y(i, 0) = 1.0;
        flat.y(i, 1) = static_cast<double>(i);
    }
    CHECK_THROWS_AS(grid_geometry(flat), NumericError);
}

TEST_CASE("cell lookup is half-open with a closed top edge", "[surface]") {
    GridGeometry g;
    g.x_min = 0.0;
    g.x_max = 100.0;
    g.y_min = 0.0;
    g.y_max = 100.0;
    g.cells = 100;

    auto cell = g.locate(1.0, 0.0);
    REQUIRE(cell.has_value());
    CHECK(cell->second == 1); // boundary value belongs to the upper cell
    CHECK(cell->first == 0);

    cell = g.locate(0.999, 99.999);
    REQUIRE(cell.has_value());
    CHECK(cell->second == 0);
    CHECK(cell->first == 99);

    cell = g.locate(100.0, 100.0); // closed top edge
    REQUIRE(cell.has_value());
    CHECK(cell->second == 99);
    CHECK(cell->first == 99);

    CHECK_FALSE(g.locate(-0.001, 50.0).has_value());
    CHECK_FALSE(g.locate(50.0, 100.001).has_value());
}

TEST_CASE("cell centers sit mid-cell", "[surface]") {
    GridGeometry g;
    g.x_min = 0.0;
    g.x_max = 10.0;
    g.y_min = 0.0;
    g.y_max = 10.0;
    g.cells = 10;
    const auto [cx, cy] = g.center(0, 3);
    CHECK(cx == Catch::Approx(3.5).epsilon(1e-12));
    CHECK(cy == Catch::Approx(0.5).epsilon(1e-12));
    const auto back = g.locate(cx, cy);
    REQUIRE(back.has_value());
    CHECK(back->first == 0);
    CHECK(back->second == 3);
}

TEST_CASE("mean smoothing turns an isolated unit peak into exactly 1/9", "[surface]") {
    const std::size_t cells = 20;
    std::vector<double> g(cells * cells, 0.0);
    g[10 * cells + 10] = 1.0;
    const std::vector<double> s = detail::mean_smooth_3x3(g, cells);
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            const bool near = r >= 9 && r <= 11 && c >= 9 && c <= 11;
            if (near) {
                CHECK(s[r * cells + c] == 1.0 / 9.0);
            } else {
                CHECK(s[r * cells + c] == 0.0);
            }
        }
    }
}

TEST_CASE("mean smoothing zero-pads the border", "[surface]") {
    const std::size_t cells = 5;
    std::vector<double> g(cells * cells, 0.0);
    g[0] = 1.0; // corner peak: same 1/9 weight, missing neighbours read as 0
    const std::vector<double> s = detail::mean_smooth_3x3(g, cells);
    CHECK(s[0] == 1.0 / 9.0);
    CHECK(s[1] == 1.0 / 9.0);
    CHECK(s[cells] == 1.0 / 9.0);
    CHECK(s[cells + 1] == 1.0 / 9.0);
    CHECK(s[2] == 0.0);
    double total = 0.0;
    for (const double v : s) total += v;
    CHECK(total == Catch::Approx(4.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("dilation grows the mask by one ring", "[surface]") {
    const std::size_t cells = 7;
    std::vector<std::uint8_t> m(cells * cells, 0);
    m[3 * cells + 3] = 1;
    const std::vector<std::uint8_t> d = detail::dilate_3x3(m, cells);
    std::size_t set = 0;
    for (const std::uint8_t v : d) set += v;
    CHECK(set == 9);
    CHECK(d[2 * cells + 2] == 1);
    CHECK(d[4 * cells + 4] == 1);
    CHECK(d[1 * cells + 3] == 0);

    std::vector<std::uint8_t> corner(cells * cells, 0);
    corner[0] = 1;
    const std::vector<std::uint8_t> dc = detail::dilate_3x3(corner, cells);
    set = 0;
    for (const std::uint8_t v : dc) set += v;
    CHECK(set == 4);
}

TEST_CASE("trained surface satisfies its invariants", "[surface]") {
    const auto& fixture = test_support::small_fixture();
    const RiskSurface& s = fixture.outcome.artifact.surface;
    const std::size_t cells = s.geometry.cells;
    REQUIRE(s.grid.size() == cells * cells);
    REQUIRE(s.valid.size() == cells * cells);

    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        CHECK(s.grid[k] >= 0.0);
        CHECK(s.grid[k] <= 1.0);
        if (!s.valid[k]) CHECK(s.grid[k] == 0.0);
        if (s.occupancy[k]) CHECK(s.valid[k] == 1);
    }
    CHECK(s.raw_max > s.raw_min);

    const Matrix& y = fixture.outcome.artifact.embedding.y;
    for (std::size_t i = 0; i < y.rows; ++i) {
        const RiskScore rs = score(s, y(i, 0), y(i, 1));
        CHECK_FALSE(rs.out_of_surface);
        CHECK(rs.value >= 0.0);
        CHECK(rs.value <= 1.0);
    }
}

TEST_CASE("score flags points outside geometry or mask", "[surface]") {
    const auto& fixture = test_support::small_fixture();
    const RiskSurface& s = fixture.outcome.artifact.surface;
    const RiskScore far_away = score(s, s.geometry.x_max + 100.0, 0.0);
    CHECK(far_away.out_of_surface);

    bool found_invalid_cell = false;
    for (std::size_t r = 0; r < s.geometry.cells && !found_invalid_cell; ++r) {
        for (std::size_t c = 0; c < s.geometry.cells && !found_invalid_cell; ++c) {
            if (!s.valid[r * s.geometry.cells + c]) {
                const auto [cx, cy] = s.geometry.center(r, c);
                CHECK(score(s, cx, cy).out_of_surface);
                found_invalid_cell = true;
            }
        }
    }
    CHECK(found_invalid_cell);
}

TEST_CASE("batch scoring matches the single-point path", "[surface]") {
    const auto& fixture = test_support::small_fixture();
    const PipelineArtifact& art = fixture.outcome.artifact;
    const BatchScores batch =
        score_batch(art.surface, art.nn_tsne, art.normalizer, fixture.records);
    REQUIRE(batch.scores.size() == fixture.records.size());
    CHECK(batch.retained.size() + batch.out_of_surface_count == fixture.records.size());
    for (std::size_t i = 0; i < batch.scores.size(); ++i) {
        const RiskScore direct = score(art.surface, batch.coords(i, 0), batch.coords(i, 1));
        CHECK(direct.out_of_surface == batch.scores[i].out_of_surface);
        CHECK(direct.value == batch.scores[i].value);
    }

    const BatchScores empty = score_batch(art.surface, art.nn_tsne, art.normalizer, {});
    CHECK(empty.scores.empty());
    CHECK(empty.out_of_surface_count == 0);
}

TEST_CASE("value surface equals the claim surface built from the same labels",
          "[surface]") {
    const auto& fixture = test_support::small_fixture();
    const PipelineArtifact& art = fixture.outcome.artifact;
    std::vector<double> values(art.train_claims.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<double>(art.train_claims[i]);
    }
    TrainConfig cfg = fixture.config.nn_risk_train;
    cfg.seed = derive_seed(fixture.config.seed, 13);
    const RiskSurface direct = build_value_surface(values, art.embedding,
                                                   art.surface.geometry, cfg,
                                                   fixture.config.risk_hidden_width);
    CHECK(direct.grid == art.surface.grid);
    CHECK(direct.raw_min == art.surface.raw_min);
    CHECK(direct.raw_max == art.surface.raw_max);
    CHECK(direct.valid == art.surface.valid);
}

TEST_CASE("value surface validates its inputs", "[surface]") {
    const auto& fixture = test_support::small_fixture();
    const PipelineArtifact& art = fixture.outcome.artifact;
    std::vector<double> bad(art.embedding.y.rows, 0.5);
    bad[0] = 1.5;
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(
        build_value_surface(bad, art.embedding, art.surface.geometry, cfg),
        DataError);
    CHECK_THROWS_AS(build_value_surface(std::vector<double>(3, 0.5), art.embedding,
                                        art.surface.geometry, cfg),
                    ConfigError);
}
