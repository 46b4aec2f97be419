#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "facegen/tensor.hpp"

namespace facegen {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

inline Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

inline Mat3 mat3_identity() {
    return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

// ---------------------------------------------------------------------------
// YCbCr conversion (full-range BT.601)
// ---------------------------------------------------------------------------

//   Y  = 0.299 R + 0.587 G + 0.114 B
//   Cb = 0.5 + (B - Y) * 0.564
//   Cr = 0.5 + (R - Y) * 0.713

inline Vec3 rgb_to_ycbcr_pixel(double r, double g, double b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return {y, 0.5 + (b - y) * 0.564, 0.5 + (r - y) * 0.713};
}

inline Vec3 ycbcr_to_rgb_pixel(double y, double cb, double cr) {
    double r = y + (cr - 0.5) / 0.713;
    double b = y + (cb - 0.5) / 0.564;
    double g = (y - 0.299 * r - 0.114 * b) / 0.587;
    return {r, g, b};
}

inline Image rgb_to_ycbcr(const Image& image) {
    Image out(3, image.height(), image.width());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            Vec3 p = rgb_to_ycbcr_pixel(image.at(0, y, x), image.at(1, y, x), image.at(2, y, x));
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = p[c];
        }
    return out;
}

/// Exact algebraic inverse; out-of-gamut results are clamped to [0,1] and
/// the number of clamped values is reported through `clamped` when given.
inline Image ycbcr_to_rgb(const Image& image, long* clamped = nullptr) {
    Image out(3, image.height(), image.width());
    long count = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            Vec3 p = ycbcr_to_rgb_pixel(image.at(0, y, x), image.at(1, y, x), image.at(2, y, x));
            for (int c = 0; c < 3; ++c) {
                double v = p[c];
                if (v < 0.0 || v > 1.0) {
                    ++count;
                    v = std::min(1.0, std::max(0.0, v));
                }
                out.at(c, y, x) = v;
            }
        }
    if (clamped) *clamped = count;
    return out;
}

// ---------------------------------------------------------------------------
// Pixel sampling
// ---------------------------------------------------------------------------

/// Matched YCbCr pixel columns: X from the generated face, Y from the same
/// positions of the reference.
struct PixelSample {
    std::vector<Vec3> xs;
    std::vector<Vec3> ys;

    std::size_t count() const { return xs.size(); }
};

/// Pixel count of the centered window sample_pixel_pairs draws from; callers
/// sizing a sample against small images share this formula.
inline long sample_window_pixels(int height, int width, double region = 0.5) {
    int win_h = std::max(1, static_cast<int>(std::lround(height * region)));
    int win_w = std::max(1, static_cast<int>(std::lround(width * region)));
    return static_cast<long>(win_h) * win_w;
}

/// Draws `n` distinct positions from the centered window covering `region`
/// of each dimension, deterministically in `seed`, and returns the YCbCr
/// values of both images at those positions.
inline PixelSample sample_pixel_pairs(const Image& target, const Image& reference, int n,
                                      double region = 0.5, std::uint64_t seed = 0) {
    if (!target.same_shape(reference))
        throw std::invalid_argument("sample_pixel_pairs: image shapes differ");
    if (!(region > 0.0 && region <= 1.0))
        throw std::invalid_argument("sample_pixel_pairs: region must be in (0,1]");
    if (n < 9)
        throw std::invalid_argument("sample_pixel_pairs: need at least 9 samples for a "
                                    "well-posed fit");

    int h = target.height(), w = target.width();
    int win_h = std::max(1, static_cast<int>(std::lround(h * region)));
    int win_w = std::max(1, static_cast<int>(std::lround(w * region)));
    int y0 = (h - win_h) / 2;
    int x0 = (w - win_w) / 2;
    long window_pixels = static_cast<long>(win_h) * win_w;
    if (n > window_pixels)
        throw std::invalid_argument("sample_pixel_pairs: " + std::to_string(n) +
                                    " samples exceed the " + std::to_string(window_pixels) +
                                    "-pixel window");

    // Partial Fisher-Yates over the window's flat indices.
    std::vector<long> positions(window_pixels);
    for (long i = 0; i < window_pixels; ++i) positions[i] = i;
    SeededRng rng(seed);
    Image target_ycc = rgb_to_ycbcr(target);
    Image reference_ycc = rgb_to_ycbcr(reference);

    PixelSample sample;
    sample.xs.reserve(n);
    sample.ys.reserve(n);
    for (int i = 0; i < n; ++i) {
        long j = i + static_cast<long>(rng.next_below(static_cast<std::uint64_t>(window_pixels - i)));
        std::swap(positions[i], positions[j]);
        int py = y0 + static_cast<int>(positions[i] / win_w);
        int px = x0 + static_cast<int>(positions[i] % win_w);
        sample.xs.push_back({target_ycc.at(0, py, px), target_ycc.at(1, py, px),
                             target_ycc.at(2, py, px)});
        sample.ys.push_back({reference_ycc.at(0, py, px), reference_ycc.at(1, py, px),
                             reference_ycc.at(2, py, px)});
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Fitting and applying the 3x3 transform
// ---------------------------------------------------------------------------

/// Linear YCbCr color map fitted to matched pixel samples.
struct ColorTransform {
    Mat3 matrix = mat3_identity();
    double residual = 0.0;  // ||Y - A X||_F^2 over the fitted sample
};

namespace detail {

/// Solves m * x = b by Gaussian elimination with partial pivoting.
inline Vec3 solve3(Mat3 m, Vec3 b) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
        if (std::abs(m[pivot][col]) < 1e-12)
            throw std::runtime_error("color transform fit is ill-posed (rank-deficient sample "
                                     "covariance); sample more varied pixels or a larger region");
        std::swap(m[col], m[pivot]);
        std::swap(b[col], b[pivot]);
        for (int row = col + 1; row < 3; ++row) {
            double f = m[row][col] / m[col][col];
            for (int k = col; k < 3; ++k) m[row][k] -= f * m[col][k];
            b[row] -= f * b[col];
        }
    }
    Vec3 x{};
    for (int row = 2; row >= 0; --row) {
        double acc = b[row];
        for (int k = row + 1; k < 3; ++k) acc -= m[row][k] * x[k];
        x[row] = acc / m[row][row];
    }
    return x;
}

}  // namespace detail

/// Least-squares fit of A = argmin ||Y - A X||_F^2 in closed form,
/// A = Y X^T (X X^T)^-1, via a pivoted 3x3 solve per row.
inline ColorTransform fit_color_transform(const PixelSample& sample) {
    if (sample.count() < 9)
        throw std::invalid_argument("fit_color_transform: need at least 9 sample pairs");
    Mat3 xxt{};  // X X^T
    Mat3 yxt{};  // Y X^T
    for (std::size_t i = 0; i < sample.count(); ++i) {
        const Vec3& x = sample.xs[i];
        const Vec3& y = sample.ys[i];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                xxt[r][c] += x[r] * x[c];
                yxt[r][c] += y[r] * x[c];
            }
    }

    ColorTransform out;
    // Row r of A solves (X X^T)^T a_r = (Y X^T)_r; X X^T is symmetric.
    for (int r = 0; r < 3; ++r) {
        Vec3 rhs{yxt[r][0], yxt[r][1], yxt[r][2]};
        Vec3 a = detail::solve3(xxt, rhs);
        out.matrix[r] = {a[0], a[1], a[2]};
    }

    double residual = 0.0;
    for (std::size_t i = 0; i < sample.count(); ++i) {
        Vec3 predicted = mat3_apply(out.matrix, sample.xs[i]);
        for (int c = 0; c < 3; ++c) {
            double d = sample.ys[i][c] - predicted[c];
            residual += d * d;
        }
    }
    out.residual = residual;
    return out;
}

/// ||Y - A X||_F^2 of an arbitrary matrix on a sample; used to compare fits.
inline double color_fit_objective(const Mat3& matrix, const PixelSample& sample) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sample.count(); ++i) {
        Vec3 predicted = mat3_apply(matrix, sample.xs[i]);
        for (int c = 0; c < 3; ++c) {
            double d = sample.ys[i][c] - predicted[c];
            acc += d * d;
        }
    }
    return acc;
}

/// Per pixel: RGB -> YCbCr, multiply by A, back to RGB, clamp to [0,1].
inline Image apply_color_transform(const Image& image, const ColorTransform& transform) {
    Image ycc = rgb_to_ycbcr(image);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            Vec3 p = mat3_apply(transform.matrix,
                                {ycc.at(0, y, x), ycc.at(1, y, x), ycc.at(2, y, x)});
            for (int c = 0; c < 3; ++c) ycc.at(c, y, x) = p[c];
        }
    Image out = ycbcr_to_rgb(ycc);
    return out;
}

}  // namespace facegen
