#include <cmath>
#include <random>

#include "doctest.h"

#include "glyphformer/error.hpp"
#include "glyphformer/font.hpp"
#include "glyphformer/outline.hpp"

using namespace glyphformer;

namespace {

const std::string kData = GF_TEST_DATA;

GlyphOutline make(std::vector<Contour> contours) {
    GlyphOutline g;
    g.contours = std::move(contours);
    return g;
}

double max_gap(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max({m, std::abs(a[i].x - b[i].x), std::abs(a[i].y - b[i].y)});
    return m;
}

}  // namespace

TEST_CASE("decompose inserts midpoints between consecutive off-curve points") {
    const auto g = make({{{0, 0, true}, {100, 200, false}, {300, 400, false}, {500, 0, true}}});
    const auto d = decompose(g);
    REQUIRE(d.contours[0].size() == 5);
    CHECK(d.contours[0][2] == OutlinePoint{200, 300, true});
    CHECK(d.contours[0][3] == OutlinePoint{300, 400, false});
}

TEST_CASE("decompose handles the wraparound pair") {
    const auto g = make({{{500, 100, false}, {900, 500, false}, {500, 900, false}, {100, 500, false}}});
    const auto d = decompose(g);
    REQUIRE(d.contours[0].size() == 8);
    CHECK(d.contours[0][1] == OutlinePoint{700, 300, true});
    CHECK(d.contours[0][7] == OutlinePoint{300, 300, true});
    // Already decomposed outlines are unchanged.
    CHECK(decompose(d) == d);
}

TEST_CASE("normalize_start rotates to the first on-curve point") {
    const Contour c = {{300, 700, false}, {500, 700, true}, {500, 100, true}};
    const Contour n = normalize_start(c);
    CHECK(n[0] == OutlinePoint{500, 700, true});
    CHECK(n[2] == OutlinePoint{300, 700, false});
    const Contour all_off = {{0, 0, false}, {100, 0, false}};
    const Contour m = normalize_start(all_off);
    CHECK(m.size() == 3);
    CHECK(m[0] == OutlinePoint{50, 0, true});
}

TEST_CASE("triangle segments into four commands with an implicit close") {
    const FontFile f = FontFile::load(kData + "/basic.ttf");
    const CommandPath p = segment(decompose(f.glyph_outline(1)));
    REQUIRE(p.commands.size() == 4);
    CHECK(p.commands[0] == Command::move_to(100, 0));
    CHECK(p.commands[1] == Command::line_to(500, 0));
    CHECK(p.commands[2] == Command::line_to(300, 600));
    CHECK(p.commands[3].kind == CommandKind::ClosePath);
    CHECK(to_svg_path(p, 1000) == "M 100 1000 L 500 1000 L 300 400 Z");
}

TEST_CASE("curved closing edge is drawn explicitly") {
    const auto g = make({{{0, 0, true}, {500, 0, true}, {250, -300, false}}});
    const CommandPath p = segment(g);
    REQUIRE(p.commands.size() == 4);
    CHECK(p.commands[2] == Command::qcurve_to(250, -300, 0, 0));
    CHECK(p.commands[3].kind == CommandKind::ClosePath);
}

TEST_CASE("segment rejects adjacent off-curve points") {
    const auto g = make({{{0, 0, true}, {100, 200, false}, {300, 400, false}}});
    CHECK_THROWS_AS(segment(g), Error);
}

TEST_CASE("elevate follows the two-thirds rule") {
    CommandPath q;
    q.commands = {Command::move_to(0, 0), Command::qcurve_to(3, 3, 6, 0), Command::close_path()};
    const CommandPath c = elevate(q);
    CHECK(c.curve_order == CurveOrder::Cubic);
    REQUIRE(c.commands.size() == 3);
    CHECK(c.commands[1] == Command::curve_to(2, 2, 4, 2, 6, 0));
    CHECK_THROWS_AS(elevate(c), Error);
}

TEST_CASE("format gates by representation") {
    const FontFile f = FontFile::load(kData + "/rich.ttf");
    for (std::uint32_t id = 1; id < f.num_glyphs(); ++id) {
        const auto g = f.glyph_outline(id);
        if (g.empty()) continue;
        for (const auto& cmd : to_command_form(g, Representation::SegmentedTT).commands)
            CHECK(cmd.kind != CommandKind::CurveTo);
        for (const auto& cmd : to_command_form(g, Representation::PostScript).commands)
            CHECK(cmd.kind != CommandKind::QCurveTo);
        for (const auto& c : to_point_form(g, Representation::DecomposedTT).contours)
            for (std::size_t i = 0; i < c.size(); ++i)
                CHECK((c[i].on_curve || c[(i + 1) % c.size()].on_curve));
    }
}

TEST_CASE("all four representations trace the same curve") {
    for (const char* name : {"rich", "toy_blobs", "toy_boxes"}) {
        const FontFile f = FontFile::load(kData + "/" + name + ".ttf");
        for (std::uint32_t id = 1; id < f.num_glyphs(); ++id) {
            CAPTURE(name);
            CAPTURE(id);
            const auto g = f.glyph_outline(id);
            if (g.empty()) continue;
            const auto ref = sample_points(g, 16);
            CHECK(max_gap(ref, sample_points(to_point_form(g, Representation::DecomposedTT), 16)) < 1e-9);
            CHECK(max_gap(ref, sample_points(to_command_form(g, Representation::SegmentedTT), 16)) < 1e-9);
            CHECK(max_gap(ref, sample_points(to_command_form(g, Representation::PostScript), 16)) < 1e-9);
        }
    }
}

TEST_CASE("random quadratics elevate exactly") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1000, 1000);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p0{u(rng), u(rng)}, q{u(rng), u(rng)}, p2{u(rng), u(rng)};
        CommandPath path;
        path.commands = {Command::move_to(p0.x, p0.y), Command::qcurve_to(q.x, q.y, p2.x, p2.y)};
        const auto& c = elevate(path).commands[1];
        const auto a = sample_quadratic(p0, q, p2, 101);
        const auto b = sample_cubic(p0, {c.args[0], c.args[1]}, {c.args[2], c.args[3]}, p2, 101);
        CHECK(max_gap(a, b) < 1e-9);
    }
}

TEST_CASE("validate enforces the command grammar") {
    CommandPath p;
    p.commands = {Command::line_to(0, 0)};
    CHECK_THROWS_AS(validate(p), Error);
    p.commands = {Command::move_to(0, 0), Command::curve_to(1, 1, 2, 2, 3, 3), Command::close_path()};
    p.curve_order = CurveOrder::Quadratic;
    CHECK_THROWS_AS(validate(p), Error);
    p.curve_order = CurveOrder::Cubic;
    CHECK_NOTHROW(validate(p));
    p.commands[1].args[0] = std::nan("");
    CHECK_THROWS_AS(validate(p), Error);
}

TEST_CASE("sampling endpoints and argument checks") {
    const auto s = sample_line({0, 0}, {10, 0}, 3);
    REQUIRE(s.size() == 3);
    CHECK(s[1].x == 5.0);
    const auto g = make({{{0, 0, true}, {10, 0, true}, {0, 10, true}}});
    CHECK_THROWS_AS(sample_points(g, 1), Error);
    CHECK(sample_points(g, 2).size() == 6);
}

TEST_CASE("number formatting for SVG") {
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(2.0 / 3.0) == "0.666667");
    CHECK(format_number(-12.25) == "-12.25");
    CHECK(format_number(-1e-9) == "0");
}
