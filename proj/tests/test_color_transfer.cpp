// YCbCr conversion, pixel sampling and the linear color transform: exact
// round trips, a planted-matrix recovery and an optimality spot check
// against random perturbations.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "facegen/color_transfer.hpp"
#include "facegen/tensor.hpp"

namespace {

double max_abs_diff(const facegen::Image& a, const facegen::Image& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("YCbCr conversion round-trips in-gamut images") {
    for (std::uint64_t seed : {1, 2, 3}) {
        facegen::Image img = facegen::random_image(14, 11, seed);
        long clamped = -1;
        facegen::Image back = facegen::ycbcr_to_rgb(facegen::rgb_to_ycbcr(img), &clamped);
        CHECK(max_abs_diff(img, back) < 1e-6);
        CHECK(clamped == 0);
    }
}

TEST_CASE("YCbCr spot values") {
    facegen::Vec3 white = facegen::rgb_to_ycbcr_pixel(1.0, 1.0, 1.0);
    CHECK(white[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(white[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK(white[2] == Catch::Approx(0.5).margin(1e-12));

    facegen::Vec3 black = facegen::rgb_to_ycbcr_pixel(0.0, 0.0, 0.0);
    CHECK(black[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(black[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK(black[2] == Catch::Approx(0.5).margin(1e-12));

    facegen::Vec3 gray = facegen::rgb_to_ycbcr_pixel(0.5, 0.5, 0.5);
    CHECK(gray[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(gray[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK(gray[2] == Catch::Approx(0.5).margin(1e-12));

    // Pure red against the published luma weights.
    facegen::Vec3 red = facegen::rgb_to_ycbcr_pixel(1.0, 0.0, 0.0);
    CHECK(red[0] == Catch::Approx(0.299).margin(1e-12));
    CHECK(red[1] == Catch::Approx(0.5 + (0.0 - 0.299) * 0.564).margin(1e-12));
    CHECK(red[2] == Catch::Approx(0.5 + (1.0 - 0.299) * 0.713).margin(1e-12));

    facegen::Vec3 rgb = facegen::ycbcr_to_rgb_pixel(red[0], red[1], red[2]);
    CHECK(rgb[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(rgb[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(rgb[2] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("out-of-gamut conversion clamps and counts") {
    facegen::Image ycc(3, 1, 2, 0.0);
    // Pixel 0: gray mid-tone, no clamping.
    ycc.at(0, 0, 0) = 0.5;
    ycc.at(1, 0, 0) = 0.5;
    ycc.at(2, 0, 0) = 0.5;
    // Pixel 1: overdriven luma pushes all three channels past 1.
    ycc.at(0, 0, 1) = 2.0;
    ycc.at(1, 0, 1) = 0.5;
    ycc.at(2, 0, 1) = 0.5;

    long clamped = 0;
    facegen::Image rgb = facegen::ycbcr_to_rgb(ycc, &clamped);
    CHECK(clamped == 3);
    for (int c = 0; c < 3; ++c) {
        CHECK(rgb.at(c, 0, 0) == Catch::Approx(0.5).margin(1e-12));
        CHECK(rgb.at(c, 0, 1) == 1.0);
    }
}

TEST_CASE("window size helper") {
    CHECK(facegen::sample_window_pixels(16, 16) == 64);
    CHECK(facegen::sample_window_pixels(32, 32) == 256);
    CHECK(facegen::sample_window_pixels(20, 10, 1.0) == 200);
    CHECK(facegen::sample_window_pixels(1, 1) == 1);  // floors at one pixel
}

TEST_CASE("pixel sampling is deterministic, distinct and window-bound") {
    const int size = 16;
    // Unique red value per pixel makes sampled positions observable.
    facegen::Image target(3, size, size, 0.0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            target.at(0, y, x) = (y * size + x) / 256.0;
            target.at(1, y, x) = 0.3;
            target.at(2, y, x) = 0.7;
        }
    facegen::Image reference = facegen::random_image(size, size, 5);

    facegen::PixelSample a = facegen::sample_pixel_pairs(target, reference, 20, 0.5, 42);
    facegen::PixelSample b = facegen::sample_pixel_pairs(target, reference, 20, 0.5, 42);
    REQUIRE(a.count() == 20);
    REQUIRE(b.count() == 20);
    for (std::size_t i = 0; i < a.count(); ++i)
        for (int c = 0; c < 3; ++c) {
            CHECK(a.xs[i][c] == b.xs[i][c]);
            CHECK(a.ys[i][c] == b.ys[i][c]);
        }

    // Luma is strictly increasing in red, so distinct positions mean
    // pairwise distinct sampled luma.
    for (std::size_t i = 0; i < a.count(); ++i)
        for (std::size_t j = i + 1; j < a.count(); ++j) CHECK(a.xs[i][0] != a.xs[j][0]);

    // Region 0.5 on 16x16 is the centered 8x8 block: rows and cols 4..11.
    // Samples are YCbCr, so recover red from luma before decoding.
    for (std::size_t i = 0; i < a.count(); ++i) {
        double red = (a.xs[i][0] - 0.587 * 0.3 - 0.114 * 0.7) / 0.299;
        int pos = static_cast<int>(std::lround(red * 256.0));
        int py = pos / size, px = pos % size;
        CHECK(py >= 4);
        CHECK(py <= 11);
        CHECK(px >= 4);
        CHECK(px <= 11);
    }

    // Exhausting the window is legal; exceeding it is not.
    CHECK(facegen::sample_pixel_pairs(target, reference, 64, 0.5, 1).count() == 64);
    CHECK_THROWS_WITH(facegen::sample_pixel_pairs(target, reference, 65, 0.5, 1),
                      Catch::Matchers::ContainsSubstring("exceed"));
    CHECK_THROWS_WITH(facegen::sample_pixel_pairs(target, reference, 8, 0.5, 1),
                      Catch::Matchers::ContainsSubstring("9"));
    CHECK_THROWS(facegen::sample_pixel_pairs(target, reference, 20, 0.0, 1));
    CHECK_THROWS(facegen::sample_pixel_pairs(target, reference, 20, 1.2, 1));
    CHECK_THROWS(
        facegen::sample_pixel_pairs(target, facegen::random_image(8, 8, 1), 20, 0.5, 1));
}

TEST_CASE("planted transform is recovered to machine precision") {
    facegen::Image target = facegen::random_image(20, 20, 9);
    facegen::Image reference = facegen::random_image(20, 20, 10);
    facegen::PixelSample sample = facegen::sample_pixel_pairs(target, reference, 120, 1.0, 3);

    facegen::Mat3 planted{{{1.05, 0.02, -0.03}, {0.01, 0.95, 0.04}, {-0.02, 0.03, 1.1}}};
    for (std::size_t i = 0; i < sample.count(); ++i)
        sample.ys[i] = facegen::mat3_apply(planted, sample.xs[i]);

    facegen::ColorTransform fit = facegen::fit_color_transform(sample);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(fit.matrix[r][c] - planted[r][c]) < 1e-6);
    CHECK(fit.residual < 1e-12);
}

TEST_CASE("fitted transform beats random perturbations") {
    facegen::Image target = facegen::random_image(20, 20, 11);
    facegen::Image reference = facegen::random_image(20, 20, 12);
    facegen::PixelSample sample = facegen::sample_pixel_pairs(target, reference, 100, 1.0, 6);

    facegen::ColorTransform fit = facegen::fit_color_transform(sample);
    double best = facegen::color_fit_objective(fit.matrix, sample);
    CHECK(best == Catch::Approx(fit.residual).margin(1e-12));

    facegen::SeededRng rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        facegen::Mat3 perturbed = fit.matrix;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) perturbed[r][c] += rng.next_uniform(-0.05, 0.05);
        CHECK(facegen::color_fit_objective(perturbed, sample) >= best - 1e-9);
    }
}

TEST_CASE("rank-deficient samples are rejected with advice") {
    facegen::Image flat_a(3, 12, 12, 0.4);
    facegen::Image flat_b(3, 12, 12, 0.6);
    facegen::PixelSample sample = facegen::sample_pixel_pairs(flat_a, flat_b, 16, 0.5, 1);
    CHECK_THROWS_WITH(facegen::fit_color_transform(sample),
                      Catch::Matchers::ContainsSubstring("region"));

    facegen::PixelSample tiny;
    tiny.xs.resize(4);
    tiny.ys.resize(4);
    CHECK_THROWS(facegen::fit_color_transform(tiny));
}

TEST_CASE("identity transform leaves pixels in place") {
    facegen::Image img = facegen::random_image(10, 13, 14);
    facegen::ColorTransform identity;
    facegen::Image out = facegen::apply_color_transform(img, identity);
    CHECK(max_abs_diff(img, out) < 1e-9);

    // A luma boost brightens; output stays in gamut by clamping.
    facegen::ColorTransform brighten;
    brighten.matrix[0][0] = 1.3;
    facegen::Image bright = facegen::apply_color_transform(img, brighten);
    double in_mean = 0.0, out_mean = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        in_mean += img[i];
        out_mean += bright[i];
        CHECK(bright[i] >= 0.0);
        CHECK(bright[i] <= 1.0);
    }
    CHECK(out_mean > in_mean);
}
