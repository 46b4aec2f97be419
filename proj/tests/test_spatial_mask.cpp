// Convex hull, rasterization, dilation and attribute-mask construction,
// checked against definitional oracles (all-triples hull membership, pairwise
// distance dilation, edge-sign point containment).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "facegen/spatial_mask.hpp"
#include "oracle_helpers.hpp"

namespace {

// Degeneracy the pedestrian way: fewer than 3 distinct points, or every
// point collinear with the first two distinct ones.
bool oracle_degenerate(const std::vector<facegen::Point2>& points) {
    std::vector<facegen::Point2> distinct;
    for (const facegen::Point2& p : points) {
        bool seen = false;
        for (const facegen::Point2& q : distinct)
            if (p.x == q.x && p.y == q.y) seen = true;
        if (!seen) distinct.push_back(p);
    }
    if (distinct.size() < 3) return true;
    for (std::size_t i = 2; i < distinct.size(); ++i)
        if (oracle::cross3(distinct[0], distinct[1], distinct[i]) != 0.0) return false;
    return true;
}

// Convex containment by edge signs, boundary inclusive with the same
// relative tolerance the rasterizer's on-segment test uses.
bool inside_convex(const facegen::Point2& p, const std::vector<facegen::Point2>& hull) {
    double tol = 1e-9 * (1.0 + std::abs(p.x) + std::abs(p.y));
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (oracle::cross3(hull[i], hull[(i + 1) % hull.size()], p) < -tol) return false;
    return true;
}

std::vector<facegen::Point2> random_points(facegen::SeededRng& rng, int count, double lo_x,
                                           double hi_x, double lo_y, double hi_y) {
    std::vector<facegen::Point2> points;
    for (int i = 0; i < count; ++i)
        points.push_back({rng.next_uniform(lo_x, hi_x), rng.next_uniform(lo_y, hi_y)});
    return points;
}

// Small half-integer grid coordinates: exact cross products, plenty of
// duplicates and collinear runs.
std::vector<facegen::Point2> grid_points(facegen::SeededRng& rng, int count) {
    std::vector<facegen::Point2> points;
    for (int i = 0; i < count; ++i)
        points.push_back({0.5 * static_cast<double>(rng.next_below(13)),
                          0.5 * static_cast<double>(rng.next_below(13))});
    return points;
}

// All 68 points on a loose in-bounds ellipse; tests override the groups
// they care about.
facegen::LandmarkSet base_landmarks(int height, int width) {
    facegen::LandmarkSet set{};
    for (int i = 0; i < facegen::kLandmarkCount; ++i) {
        double a = 2.0 * 3.14159265358979 * i / facegen::kLandmarkCount;
        set.points[i].x = width / 2.0 + 0.3 * width * std::cos(a);
        set.points[i].y = height / 2.0 + 0.3 * height * std::sin(a);
    }
    return set;
}

const std::filesystem::path kTmp = "/tmp/facegen_mask_test";

}  // namespace

TEST_CASE("convex hull matches the all-triples oracle") {
    facegen::SeededRng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 3 + static_cast<int>(rng.next_below(23));
        std::vector<facegen::Point2> points =
            trial % 2 == 0 ? random_points(rng, n, 0.0, 20.0, 0.0, 20.0) : grid_points(rng, n);

        if (oracle_degenerate(points)) {
            CHECK_THROWS_AS(facegen::convex_hull(points), facegen::DegenerateHullError);
            continue;
        }
        std::vector<facegen::Point2> hull = facegen::convex_hull(points);
        std::vector<facegen::Point2> want = oracle::hull_all_triples(points);
        INFO("trial " << trial << ": hull " << hull.size() << " vs oracle " << want.size());
        CHECK(oracle::same_cyclic_polygon(hull, want));

        // Strictly convex and counter-clockwise.
        REQUIRE(hull.size() >= 3);
        for (std::size_t i = 0; i < hull.size(); ++i)
            CHECK(oracle::cross3(hull[i], hull[(i + 1) % hull.size()],
                                 hull[(i + 2) % hull.size()]) > 0.0);
    }
}

TEST_CASE("degenerate hull inputs throw") {
    CHECK_THROWS_AS(facegen::convex_hull({}), facegen::DegenerateHullError);
    CHECK_THROWS_AS(facegen::convex_hull({{1, 1}, {2, 2}}), facegen::DegenerateHullError);
    // Duplicates collapsing below three distinct points.
    CHECK_THROWS_AS(facegen::convex_hull({{1, 1}, {1, 1}, {2, 2}, {2, 2}}),
                    facegen::DegenerateHullError);
    // Collinear: horizontal, vertical, diagonal.
    CHECK_THROWS_AS(facegen::convex_hull({{0, 3}, {2, 3}, {5, 3}, {9, 3}}),
                    facegen::DegenerateHullError);
    CHECK_THROWS_AS(facegen::convex_hull({{4, 0}, {4, 1}, {4, 7}}), facegen::DegenerateHullError);
    CHECK_THROWS_AS(facegen::convex_hull({{0, 0}, {1, 2}, {2, 4}, {3, 6}}),
                    facegen::DegenerateHullError);
    // A fourth point off the line fixes it.
    CHECK_NOTHROW(facegen::convex_hull({{0, 0}, {1, 2}, {2, 4}, {3, 0}}));
}

TEST_CASE("rasterization marks exactly the pixels inside the hull") {
    const int height = 24, width = 20;
    facegen::SeededRng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<facegen::Point2> hull =
            facegen::convex_hull(random_points(rng, 8, 1.0, 19.0, 1.0, 23.0));
        facegen::Mask mask = facegen::expand_and_rasterize(hull, 0.0, height, width);

        REQUIRE(mask.channels() == 3);
        REQUIRE(mask.height() == height);
        REQUIRE(mask.width() == width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                bool want =
                    inside_convex({static_cast<double>(x), static_cast<double>(y)}, hull);
                INFO("trial " << trial << " pixel (" << y << "," << x << ")");
                CHECK(mask.at(0, y, x) == (want ? 1.0 : 0.0));
                CHECK(mask.at(1, y, x) == mask.at(0, y, x));
                CHECK(mask.at(2, y, x) == mask.at(0, y, x));
            }
        CHECK(facegen::mask_area(mask) > 0);
    }

    CHECK_THROWS(facegen::expand_and_rasterize({{0, 0}, {5, 0}, {2, 4}}, -1.0, height, width));
    CHECK_THROWS(facegen::expand_and_rasterize({{0, 0}, {5, 0}}, 1.0, height, width));

    // A hull entirely off-image rasterizes to an empty mask.
    facegen::Mask off = facegen::expand_and_rasterize({{100, 100}, {110, 100}, {105, 108}}, 1.0,
                                                      height, width);
    CHECK(facegen::mask_area(off) == 0);
}

TEST_CASE("dilation equals the every-pair distance oracle") {
    const int height = 18, width = 16;
    facegen::SeededRng rng(91);
    for (double radius : {1.0, 1.5, 2.0, 3.3}) {
        std::vector<facegen::Point2> hull =
            facegen::convex_hull(random_points(rng, 6, 2.0, 13.0, 2.0, 15.0));
        facegen::Mask base = facegen::expand_and_rasterize(hull, 0.0, height, width);
        facegen::Mask dilated = facegen::expand_and_rasterize(hull, radius, height, width);
        facegen::Image want = oracle::dilate_by_distance(base, radius);
        INFO("radius " << radius);
        CHECK(dilated == want);
        CHECK(facegen::mask_area(dilated) >= facegen::mask_area(base));
    }
}

TEST_CASE("disk rasterization") {
    const int height = 15, width = 17;
    // Integral center: a disk is the dilation of its center pixel.
    facegen::Mask disk = facegen::rasterize_disk({9.0, 6.0}, 3.2, height, width);
    facegen::Image seed(3, height, width, 0.0);
    for (int c = 0; c < 3; ++c) seed.at(c, 6, 9) = 1.0;
    CHECK(disk == oracle::dilate_by_distance(seed, 3.2));

    // Boundary membership is <= radius on squared distance.
    facegen::Mask tight = facegen::rasterize_disk({8.0, 7.0}, 2.0, height, width);
    CHECK(tight.at(0, 7, 10) == 1.0);  // distance exactly 2
    CHECK(tight.at(0, 9, 9) == 0.0);   // distance sqrt(5)
    CHECK(facegen::mask_area(tight) == 13);

    // Clipping at the border keeps the in-bounds part.
    facegen::Mask corner = facegen::rasterize_disk({0.0, 0.0}, 1.0, height, width);
    CHECK(corner.at(0, 0, 0) == 1.0);
    CHECK(corner.at(0, 0, 1) == 1.0);
    CHECK(corner.at(0, 1, 0) == 1.0);
    CHECK(facegen::mask_area(corner) == 3);
}

TEST_CASE("mask utilities") {
    facegen::Mask a(3, 4, 4, 0.0);
    facegen::Mask b(3, 4, 4, 0.0);
    for (int c = 0; c < 3; ++c) {
        a.at(c, 0, 0) = 1.0;
        a.at(c, 1, 1) = 1.0;
        b.at(c, 1, 1) = 1.0;
        b.at(c, 2, 3) = 1.0;
    }
    facegen::Mask u = facegen::mask_union(a, b);
    CHECK(facegen::mask_area(a) == 2);
    CHECK(facegen::mask_area(b) == 2);
    CHECK(facegen::mask_area(u) == 3);
    CHECK(u.at(0, 0, 0) == 1.0);
    CHECK(u.at(0, 1, 1) == 1.0);
    CHECK(u.at(0, 2, 3) == 1.0);
    CHECK_THROWS(facegen::mask_union(a, facegen::Mask(3, 5, 4, 0.0)));
}

TEST_CASE("attribute landmark groups") {
    facegen::AttributeLandmarkMap map = facegen::default_attribute_landmarks();

    std::vector<int> glasses = map.group("eyeglasses");
    REQUIRE(glasses.size() == 22);
    CHECK(glasses.front() == 18);
    CHECK(std::find(glasses.begin(), glasses.end(), 27) != glasses.end());
    CHECK(std::find(glasses.begin(), glasses.end(), 37) != glasses.end());
    CHECK(glasses.back() == 48);
    CHECK(std::find(glasses.begin(), glasses.end(), 30) == glasses.end());

    for (const char* mouth : {"mouth-open", "mouth-closed", "smiling"}) {
        std::vector<int> group = map.group(mouth);
        REQUIRE(group.size() == 20);
        CHECK(group.front() == 49);
        CHECK(group.back() == 68);
    }
    for (const char* nose : {"pointy-nose", "big-nose"}) {
        std::vector<int> group = map.group(nose);
        REQUIRE(group.size() == 9);
        CHECK(group.front() == 28);
        CHECK(group.back() == 36);
    }

    CHECK_THROWS_WITH(map.group("moustache"), Catch::Matchers::ContainsSubstring("moustache"));

    // The shipped CSV mirrors the built-in groups exactly.
    facegen::AttributeLandmarkMap shipped =
        facegen::load_attribute_landmarks(FACEGEN_DATA_DIR "/attribute_landmarks.csv");
    REQUIRE(shipped.groups.size() == map.groups.size());
    for (const auto& [name, indices] : map.groups) CHECK(shipped.group(name) == indices);
}

TEST_CASE("attribute landmark map loader errors") {
    std::filesystem::create_directories(kTmp);

    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p);
        out << text;
    };

    CHECK_THROWS(facegen::load_attribute_landmarks((kTmp / "absent.csv").string()));

    write(kTmp / "no_comma.csv", "eyeglasses 1;2;3\n");
    CHECK_THROWS(facegen::load_attribute_landmarks((kTmp / "no_comma.csv").string()));

    write(kTmp / "range.csv", "eyeglasses,1;69\n");
    CHECK_THROWS_WITH(facegen::load_attribute_landmarks((kTmp / "range.csv").string()),
                      Catch::Matchers::ContainsSubstring("69"));

    write(kTmp / "empty_group.csv", "eyeglasses,\n");
    CHECK_THROWS(facegen::load_attribute_landmarks((kTmp / "empty_group.csv").string()));

    write(kTmp / "ok.csv", "# comment\n\nbrows,18;19;20\nchin,8;9;10\n");
    facegen::AttributeLandmarkMap ok = facegen::load_attribute_landmarks((kTmp / "ok.csv").string());
    CHECK(ok.group("brows") == std::vector<int>{18, 19, 20});
    CHECK(ok.group("chin") == std::vector<int>{8, 9, 10});
}

TEST_CASE("default margin scales from 12 pixels at 224") {
    CHECK(facegen::default_mask_margin(224, 224) == Catch::Approx(12.0).margin(1e-12));
    CHECK(facegen::default_mask_margin(112, 224) == Catch::Approx(6.0).margin(1e-12));
    CHECK(facegen::default_mask_margin(224, 112) == Catch::Approx(6.0).margin(1e-12));
    CHECK(facegen::default_mask_margin(32, 32) == Catch::Approx(12.0 * 32.0 / 224.0).margin(1e-12));
}

TEST_CASE("mask construction unions per-attribute regions") {
    const int height = 32, width = 32;
    facegen::LandmarkSet lm = base_landmarks(height, width);
    // Mouth blob lower right, nose blob upper left, well separated.
    facegen::SeededRng rng(13);
    for (int i = 48; i < 68; ++i)
        lm.points[i] = {22.0 + rng.next_uniform(-3.0, 3.0), 22.0 + rng.next_uniform(-3.0, 3.0)};
    for (int i = 27; i < 36; ++i)
        lm.points[i] = {8.0 + rng.next_uniform(-2.5, 2.5), 8.0 + rng.next_uniform(-2.5, 2.5)};

    facegen::AttributeLandmarkMap map = facegen::default_attribute_landmarks();
    double margin = 1.5;

    facegen::Mask mouth = facegen::build_mask({"smiling"}, lm, map, margin, height, width);
    facegen::Mask nose = facegen::build_mask({"big-nose"}, lm, map, margin, height, width);
    facegen::Mask both = facegen::build_mask({"smiling", "big-nose"}, lm, map, margin, height,
                                             width);
    CHECK(both == facegen::mask_union(mouth, nose));
    CHECK(facegen::mask_area(mouth) > 0);
    CHECK(facegen::mask_area(nose) > 0);
    // Disjoint blobs: the union area is the sum.
    CHECK(facegen::mask_area(both) == facegen::mask_area(mouth) + facegen::mask_area(nose));

    // Binary, three identical channels.
    for (std::size_t i = 0; i < both.size(); ++i)
        CHECK((both[i] == 0.0 || both[i] == 1.0));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            CHECK(both.at(1, y, x) == both.at(0, y, x));
            CHECK(both.at(2, y, x) == both.at(0, y, x));
        }

    CHECK_THROWS(facegen::build_mask({}, lm, map, margin, height, width));
    CHECK_THROWS_WITH(facegen::build_mask({"moustache"}, lm, map, margin, height, width),
                      Catch::Matchers::ContainsSubstring("moustache"));
}

TEST_CASE("degenerate landmark groups fall back to a centroid disk") {
    const int height = 20, width = 20;
    facegen::LandmarkSet lm = base_landmarks(height, width);
    // Three collinear points, centroid (7, 5).
    lm.points[0] = {5.0, 5.0};
    lm.points[1] = {7.0, 5.0};
    lm.points[2] = {9.0, 5.0};

    facegen::AttributeLandmarkMap map;
    map.groups["flat"] = {1, 2, 3};

    double margin = 2.5;
    facegen::Mask mask = facegen::build_mask({"flat"}, lm, map, margin, height, width);
    CHECK(mask == facegen::rasterize_disk({7.0, 5.0}, margin, height, width));
    CHECK(facegen::mask_area(mask) > 0);
}
