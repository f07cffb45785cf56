#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <string>
#include <vector>

#include "riskmap/render.hpp"
#include "riskmap/surface.hpp"

using namespace riskmap;
using Catch::Matchers::ContainsSubstring;

namespace {

RiskSurface tiny_surface() {
    RiskSurface s;
    s.geometry.cells = 2;
    s.geometry.x_min = 0.0;
    s.geometry.x_max = 2.0;
    s.geometry.y_min = 0.0;
    s.geometry.y_max = 2.0;
    s.grid = {0.0, 0.5, 0.25, 1.0};
    s.occupancy = {1, 1, 1, 0};
    s.valid = {1, 1, 1, 0};
    s.raw_min = 0.0;
    s.raw_max = 1.0;
    return s;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

} // namespace

TEST_CASE("PGM output is big-endian 16-bit with the top row last in memory", "[render]") {
    const std::string pgm = write_pgm(tiny_surface());
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(pgm.size() == header.size() + 8);
    CHECK(pgm.substr(0, header.size()) == header);
    // Image rows run from y_max down: grid row 1 first, then grid row 0.
    const unsigned char expected[8] = {0x40, 0x00, 0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00};
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(static_cast<unsigned char>(pgm[header.size() + i]) == expected[i]);
    }
}

TEST_CASE("color ramp interpolates the five documented stops", "[render]") {
    CHECK(detail::ramp_color(0.0) == "#440154");
    CHECK(detail::ramp_color(0.25) == "#3b528b");
    CHECK(detail::ramp_color(0.5) == "#21918c");
    CHECK(detail::ramp_color(0.75) == "#5ec962");
    CHECK(detail::ramp_color(1.0) == "#fde725");
    CHECK(detail::ramp_color(0.125) == "#402a70");
    CHECK(detail::ramp_color(-0.5) == "#440154");
    CHECK(detail::ramp_color(2.0) == "#fde725");
}

TEST_CASE("surface SVG grays out invalid cells and labels markers", "[render]") {
    const std::vector<MarkerPoint> markers = {{1.0, 1.0, 7}, {0.5, 0.5, 12}};
    const std::string svg = surface_svg(tiny_surface(), markers);
    CHECK_THAT(svg, ContainsSubstring("width=\"500\" height=\"500\""));
    CHECK(count_of(svg, "fill=\"#f0f0f0\"") == 1);
    CHECK_THAT(svg, ContainsSubstring("#440154"));
    CHECK_THAT(svg, ContainsSubstring("#3b528b"));
    CHECK_THAT(svg, ContainsSubstring("#21918c"));
    CHECK_THAT(svg, ContainsSubstring(
                        "<circle cx=\"250.00\" cy=\"250.00\" r=\"6\" fill=\"#e41a1c\""));
    CHECK_THAT(svg, ContainsSubstring("<title>contract 7</title>"));
    CHECK_THAT(svg, ContainsSubstring("fill=\"#377eb8\""));
    CHECK_THAT(svg, ContainsSubstring("<title>contract 12</title>"));
    // The invalid cell is grid row 1, column 1, which renders at the top right.
    CHECK_THAT(svg, ContainsSubstring(
                        "<rect x=\"250.00\" y=\"0.00\" width=\"250.00\" height=\"250.00\" "
                        "fill=\"#f0f0f0\"/>"));
}

TEST_CASE("embedding scatter draws non-claims under claims", "[render]") {
    Matrix y(3, 2);
    y(0, 0) = 0.0;
    y(0, 1) = 0.0;
    y(1, 0) = 10.0;
    y(1, 1) = 10.0;
    y(2, 0) = 5.0;
    y(2, 1) = 5.0;
    const std::vector<int> claims = {0, 1, 0};
    const std::string svg = embedding_svg(y, claims);
    CHECK_THAT(svg, ContainsSubstring("width=\"600\" height=\"600\""));
    CHECK(count_of(svg, "<circle") == 3);
    CHECK(count_of(svg, "fill=\"#2ca02c\"") == 2);
    CHECK(count_of(svg, "fill=\"#1f77b4\"") == 1);
    CHECK(svg.find("#2ca02c") < svg.find("#1f77b4"));
    CHECK_THAT(svg, ContainsSubstring("cx=\"300.00\" cy=\"300.00\""));
    CHECK_THAT(svg, ContainsSubstring("cx=\"27.27\" cy=\"572.73\""));
    CHECK_THAT(svg, ContainsSubstring("cx=\"572.73\" cy=\"27.27\""));
    CHECK_THAT(svg, ContainsSubstring("fill-opacity=\"0.7\""));

    CHECK_THROWS_AS(embedding_svg(y, std::vector<int>{0, 1}), ConfigError);
    CHECK_THROWS_AS(embedding_svg(Matrix(0, 2), std::vector<int>{}), ConfigError);

    Matrix single(1, 2);
    const std::string degenerate = embedding_svg(single, std::vector<int>{0});
    CHECK_THAT(degenerate, ContainsSubstring("cx=\"300.00\" cy=\"300.00\""));
}
