#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "facegen/landmarks.hpp"
#include "facegen/tensor.hpp"

namespace facegen {

/// Binary H x W x 3 mask; the three channels carry identical values.
using Mask = Image;

struct DegenerateHullError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convex hull
// ---------------------------------------------------------------------------

/// Monotone-chain convex hull; vertices come back counter-clockwise with no
/// duplicates and no collinear interior points. Fewer than 3 distinct points
/// or a fully collinear input raises DegenerateHullError.
inline std::vector<Point2> convex_hull(std::vector<Point2> points) {
    std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const Point2& a, const Point2& b) {
                                 return a.x == b.x && a.y == b.y;
                             }),
                 points.end());
    if (points.size() < 3)
        throw DegenerateHullError("convex_hull: fewer than 3 distinct points");

    std::size_t n = points.size();
    std::vector<Point2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
        hull[k++] = points[i];
    }
    for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {  // upper chain
        while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    if (hull.size() < 3) throw DegenerateHullError("convex_hull: all points collinear");
    return hull;
}

// ---------------------------------------------------------------------------
// Rasterization and dilation
// ---------------------------------------------------------------------------

namespace detail {

inline bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
    constexpr double kEps = 1e-9;
    if (std::abs(cross(a, b, p)) > kEps * (1.0 + std::abs(p.x) + std::abs(p.y)))
        return false;
    return p.x >= std::min(a.x, b.x) - kEps && p.x <= std::max(a.x, b.x) + kEps &&
           p.y >= std::min(a.y, b.y) - kEps && p.y <= std::max(a.y, b.y) + kEps;
}

/// Even-odd test with the polygon boundary counting as inside.
inline bool point_in_polygon(const Point2& p, const std::vector<Point2>& poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point2& a = poly[j];
        const Point2& b = poly[i];
        if (on_segment(p, a, b)) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

inline Mask blank_mask(int height, int width) { return Mask(3, height, width, 0.0); }

inline void set_mask_pixel(Mask& mask, int y, int x) {
    for (int c = 0; c < 3; ++c) mask.at(c, y, x) = 1.0;
}

/// Morphological dilation with a disk structuring element of the given
/// radius: a pixel ends up on iff some on pixel lies within Euclidean
/// distance `radius`.
inline Mask dilate_disk(const Mask& mask, double radius) {
    int r = static_cast<int>(std::floor(radius));
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dy * dy + dx * dx <= radius * radius) offsets.emplace_back(dy, dx);

    Mask out = blank_mask(mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(0, y, x) <= 0.0) continue;
            for (auto [dy, dx] : offsets) {
                int ny = y + dy, nx = x + dx;
                if (ny >= 0 && ny < mask.height() && nx >= 0 && nx < mask.width())
                    set_mask_pixel(out, ny, nx);
            }
        }
    return out;
}

}  // namespace detail

/// Scanline-rasterizes the hull (boundary inclusive), then dilates with a
/// disk of radius `margin`, clipped to the image bounds. An empty result
/// is legal; callers inspect mask_area.
inline Mask expand_and_rasterize(const std::vector<Point2>& hull, double margin, int height,
                                 int width) {
    if (margin < 0.0) throw std::invalid_argument("expand_and_rasterize: negative margin");
    if (hull.size() < 3) throw std::invalid_argument("expand_and_rasterize: degenerate hull");
    Mask mask = detail::blank_mask(height, width);

    double min_x = hull[0].x, max_x = hull[0].x, min_y = hull[0].y, max_y = hull[0].y;
    for (const Point2& p : hull) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
    int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x)));
    int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (detail::point_in_polygon({static_cast<double>(x), static_cast<double>(y)}, hull))
                detail::set_mask_pixel(mask, y, x);

    if (margin > 0.0) mask = detail::dilate_disk(mask, margin);
    return mask;
}

/// Disk fallback for degenerate landmark groups.
inline Mask rasterize_disk(const Point2& center, double radius, int height, int width) {
    Mask mask = detail::blank_mask(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double dy = y - center.y, dx = x - center.x;
            if (dy * dy + dx * dx <= radius * radius) detail::set_mask_pixel(mask, y, x);
        }
    return mask;
}

/// Number of on pixels (counted once, not per channel).
inline long mask_area(const Mask& mask) {
    long area = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(0, y, x) > 0.0) ++area;
    return area;
}

/// Element-wise union (maximum) of two masks.
inline Mask mask_union(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mask_union: shape mismatch");
    Mask out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], b[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Attribute -> landmark groups
// ---------------------------------------------------------------------------

/// Maps attribute names to 1-based landmark indices (subset of 1..68).
struct AttributeLandmarkMap {
    std::map<std::string, std::vector<int>> groups;

    const std::vector<int>& group(const std::string& attribute) const {
        auto it = groups.find(attribute);
        if (it == groups.end())
            throw std::invalid_argument("no landmark group for attribute '" + attribute + "'");
        return it->second;
    }
};

namespace detail {

inline std::vector<int> index_range(int first, int last) {
    std::vector<int> out;
    for (int i = first; i <= last; ++i) out.push_back(i);
    return out;
}

}  // namespace detail

/// Built-in groups for the six demonstrated attributes, following the
/// usual 68-point convention (brows 18-27, nose 28-36, eyes 37-48,
/// mouth 49-68). Users override via a CSV file.
inline AttributeLandmarkMap default_attribute_landmarks() {
    AttributeLandmarkMap map;
    std::vector<int> eye_region = detail::index_range(18, 27);
    for (int i : detail::index_range(37, 48)) eye_region.push_back(i);
    map.groups["eyeglasses"] = eye_region;
    map.groups["mouth-open"] = detail::index_range(49, 68);
    map.groups["mouth-closed"] = detail::index_range(49, 68);
    map.groups["smiling"] = detail::index_range(49, 68);
    map.groups["pointy-nose"] = detail::index_range(28, 36);
    map.groups["big-nose"] = detail::index_range(28, 36);
    return map;
}

/// CSV rows of the form `attribute,i1;i2;...;in` with 1-based indices.
inline AttributeLandmarkMap load_attribute_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open attribute-landmark map: " + path);
    AttributeLandmarkMap map;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("bad attribute-landmark row '" + line + "' in " + path);
        std::string name = line.substr(0, comma);
        std::vector<int> indices;
        std::stringstream rest(line.substr(comma + 1));
        std::string tok;
        while (std::getline(rest, tok, ';')) {
            if (tok.empty()) continue;
            int idx = std::stoi(tok);
            if (idx < 1 || idx > kLandmarkCount)
                throw std::runtime_error("landmark index " + std::to_string(idx) +
                                         " out of 1.." + std::to_string(kLandmarkCount) +
                                         " in " + path);
            indices.push_back(idx);
        }
        if (indices.empty())
            throw std::runtime_error("empty landmark group for '" + name + "' in " + path);
        map.groups[name] = indices;
    }
    return map;
}

// ---------------------------------------------------------------------------
// Mask construction
// ---------------------------------------------------------------------------

/// Default expansion margin: 12 pixels at 224x224, scaled with the smaller
/// image dimension.
inline double default_mask_margin(int height, int width) {
    return 12.0 * std::min(height, width) / 224.0;
}

/// Per-attribute expanded hull masks combined by element-wise maximum.
/// Degenerate hulls (collinear landmark groups) fall back to a disk of
/// radius `margin` around the group centroid.
inline Mask build_mask(const std::vector<std::string>& attributes, const LandmarkSet& landmarks,
                       const AttributeLandmarkMap& map, double margin, int height, int width) {
    if (attributes.empty()) throw std::invalid_argument("build_mask: no attributes");
    Mask combined = detail::blank_mask(height, width);
    for (const std::string& attr : attributes) {
        const std::vector<int>& indices = map.group(attr);
        std::vector<Point2> points;
        for (int idx : indices) points.push_back(landmarks[idx - 1]);
        Mask part;
        try {
            part = expand_and_rasterize(convex_hull(points), margin, height, width);
        } catch (const DegenerateHullError&) {
            Point2 centroid{0.0, 0.0};
            for (const Point2& p : points) {
                centroid.x += p.x;
                centroid.y += p.y;
            }
            centroid.x /= static_cast<double>(points.size());
            centroid.y /= static_cast<double>(points.size());
            part = rasterize_disk(centroid, margin, height, width);
        }
        combined = mask_union(combined, part);
    }
    return combined;
}

}  // namespace facegen
