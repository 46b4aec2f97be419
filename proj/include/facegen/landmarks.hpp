#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace facegen {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr int kLandmarkCount = 68;

/// The 68 canonical facial keypoints, in pixel coordinates.
struct LandmarkSet {
    std::array<Point2, kLandmarkCount> points;

    Point2& operator[](int i) { return points[i]; }
    const Point2& operator[](int i) const { return points[i]; }

    void validate_finite() const {
        for (const Point2& p : points)
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw std::invalid_argument("LandmarkSet: non-finite coordinate");
    }

    /// Coordinates must lie within the image bounds extended by `margin`.
    void validate_bounds(int height, int width, double margin) const {
        validate_finite();
        for (const Point2& p : points)
            if (p.x < -margin || p.x > width - 1 + margin || p.y < -margin ||
                p.y > height - 1 + margin)
                throw std::invalid_argument("LandmarkSet: point (" + std::to_string(p.x) + "," +
                                            std::to_string(p.y) + ") outside " +
                                            std::to_string(width) + "x" + std::to_string(height) +
                                            " bounds (margin " + std::to_string(margin) + ")");
    }

    /// Mirror about the vertical axis of a width-`width` image.
    LandmarkSet flipped_horizontal(int width) const {
        LandmarkSet out = *this;
        for (Point2& p : out.points) p.x = (width - 1) - p.x;
        return out;
    }
};

/// Summed squared coordinate differences over the 68 landmark pairs.
inline double pose_distance(const LandmarkSet& a, const LandmarkSet& b) {
    double acc = 0.0;
    for (int i = 0; i < kLandmarkCount; ++i) {
        double dx = a[i].x - b[i].x;
        double dy = a[i].y - b[i].y;
        acc += dx * dx + dy * dy;
    }
    return acc;
}

}  // namespace facegen
