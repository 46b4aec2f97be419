// Independent reference implementations the tests compare the library
// against. Everything here favors the most literal possible formulation
// over speed; none of it shares code with the headers under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "facegen/guided_select.hpp"
#include "facegen/landmarks.hpp"
#include "facegen/network.hpp"
#include "facegen/tensor.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

template <typename F>
facegen::Tensor3 fd_gradient(const facegen::Image& at, F&& value_of, double eps) {
    facegen::Image probe = at;
    facegen::Tensor3 grad(at.channels(), at.height(), at.width());
    for (std::size_t i = 0; i < at.size(); ++i) {
        probe[i] = at[i] + eps;
        double above = value_of(probe);
        probe[i] = at[i] - eps;
        double below = value_of(probe);
        probe[i] = at[i];
        grad[i] = (above - below) / (2.0 * eps);
    }
    return grad;
}

struct GradientComparison {
    double worst_rel = 0.0;
    double fraction_tight = 1.0;  // share of coordinates with rel error < tight_tol
    std::size_t coords = 0;
};

inline GradientComparison compare_gradients(const facegen::Tensor3& analytic,
                                            const facegen::Tensor3& numeric, double tight_tol,
                                            double floor_scale = 1e-6) {
    GradientComparison out;
    out.coords = analytic.size();
    std::size_t tight = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double a = analytic[i], b = numeric[i];
        double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_scale});
        out.worst_rel = std::max(out.worst_rel, rel);
        if (rel < tight_tol) ++tight;
    }
    out.fraction_tight = analytic.size() ? static_cast<double>(tight) / analytic.size() : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Direct convolution / pooling (quadruple loops, no reuse of library code)
// ---------------------------------------------------------------------------

inline facegen::Tensor3 conv_direct(const facegen::ConvLayer& layer,
                                    const facegen::Tensor3& in) {
    int oh = (in.height() + 2 * layer.pad - layer.kernel_h) / layer.stride + 1;
    int ow = (in.width() + 2 * layer.pad - layer.kernel_w) / layer.stride + 1;
    facegen::Tensor3 out(layer.out_channels, oh, ow);
    for (int oc = 0; oc < layer.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = layer.bias[oc];
                for (int ic = 0; ic < layer.in_channels; ++ic)
                    for (int ky = 0; ky < layer.kernel_h; ++ky)
                        for (int kx = 0; kx < layer.kernel_w; ++kx) {
                            int iy = oy * layer.stride + ky - layer.pad;
                            int ix = ox * layer.stride + kx - layer.pad;
                            if (iy < 0 || iy >= in.height() || ix < 0 || ix >= in.width())
                                continue;  // zero padding
                            acc += layer.weight(oc, ic, ky, kx) * in.at(ic, iy, ix);
                        }
                out.at(oc, oy, ox) = acc;
            }
    return out;
}

inline facegen::Tensor3 maxpool_direct(const facegen::MaxPoolLayer& layer,
                                       const facegen::Tensor3& in) {
    int oh = (in.height() - layer.kernel) / layer.stride + 1;
    int ow = (in.width() - layer.kernel) / layer.stride + 1;
    facegen::Tensor3 out(in.channels(), oh, ow);
    for (int c = 0; c < in.channels(); ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double best = -1e300;
                for (int ky = 0; ky < layer.kernel; ++ky)
                    for (int kx = 0; kx < layer.kernel; ++kx)
                        best = std::max(best,
                                        in.at(c, oy * layer.stride + ky, ox * layer.stride + kx));
                out.at(c, oy, ox) = best;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Convex hull via the all-triples definition: a point belongs to the strict
// hull iff no triangle (or segment) of the other points contains it.
// ---------------------------------------------------------------------------

inline double cross3(const facegen::Point2& o, const facegen::Point2& a,
                     const facegen::Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment_inclusive(const facegen::Point2& a, const facegen::Point2& b,
                                 const facegen::Point2& p) {
    if (std::abs(cross3(a, b, p)) > 1e-9) return false;
    return p.x >= std::min(a.x, b.x) - 1e-12 && p.x <= std::max(a.x, b.x) + 1e-12 &&
           p.y >= std::min(a.y, b.y) - 1e-12 && p.y <= std::max(a.y, b.y) + 1e-12;
}

inline bool in_triangle_inclusive(const facegen::Point2& a, const facegen::Point2& b,
                                  const facegen::Point2& c, const facegen::Point2& p) {
    // A degenerate triangle would report every collinear point as inside,
    // even outside its span; the pairwise segment checks own that case.
    if (cross3(a, b, c) == 0.0) return false;
    double d1 = cross3(a, b, p), d2 = cross3(b, c, p), d3 = cross3(c, a, p);
    bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(has_neg && has_pos);
}

inline std::vector<facegen::Point2> hull_all_triples(std::vector<facegen::Point2> points) {
    // Dedupe exactly like any sane hull must.
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const auto& a, const auto& b) {
                                 return a.x == b.x && a.y == b.y;
                             }),
                 points.end());

    std::vector<facegen::Point2> vertices;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<facegen::Point2> rest;
        for (std::size_t j = 0; j < points.size(); ++j)
            if (j != i) rest.push_back(points[j]);
        bool contained = false;
        for (std::size_t a = 0; a < rest.size() && !contained; ++a)
            for (std::size_t b = a + 1; b < rest.size() && !contained; ++b) {
                if (on_segment_inclusive(rest[a], rest[b], points[i])) contained = true;
                for (std::size_t c = b + 1; c < rest.size() && !contained; ++c)
                    if (in_triangle_inclusive(rest[a], rest[b], rest[c], points[i]))
                        contained = true;
            }
        if (!contained) vertices.push_back(points[i]);
    }

    // Order counter-clockwise around the centroid for comparison.
    double cx = 0, cy = 0;
    for (const auto& p : vertices) {
        cx += p.x;
        cy += p.y;
    }
    cx /= vertices.size();
    cy /= vertices.size();
    std::sort(vertices.begin(), vertices.end(), [&](const auto& a, const auto& b) {
        return std::atan2(a.y - cy, a.x - cx) < std::atan2(b.y - cy, b.x - cx);
    });
    return vertices;
}

/// True when the two vertex lists are equal as cyclic sequences.
inline bool same_cyclic_polygon(const std::vector<facegen::Point2>& a,
                                const std::vector<facegen::Point2>& b) {
    if (a.size() != b.size()) return false;
    std::size_t n = a.size();
    for (std::size_t shift = 0; shift < n; ++shift) {
        bool all = true;
        for (std::size_t i = 0; i < n && all; ++i)
            all = a[i].x == b[(i + shift) % n].x && a[i].y == b[(i + shift) % n].y;
        if (all) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Disk dilation by scanning every (source, destination) pixel pair
// ---------------------------------------------------------------------------

inline facegen::Image dilate_by_distance(const facegen::Image& mask, double radius) {
    facegen::Image out(mask.channels(), mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            bool hit = false;
            for (int sy = 0; sy < mask.height() && !hit; ++sy)
                for (int sx = 0; sx < mask.width() && !hit; ++sx)
                    if (mask.at(0, sy, sx) > 0.0 &&
                        (sy - y) * (sy - y) + (sx - x) * (sx - x) <= radius * radius)
                        hit = true;
            for (int c = 0; c < mask.channels(); ++c) out.at(c, y, x) = hit ? 1.0 : 0.0;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Guided-set selection by full sort-and-slice
// ---------------------------------------------------------------------------

struct ScoredCandidate {
    std::string id;
    double combined = 0.0;
};

/// Recomputes combined distances the pedestrian way: both normalizing sums
/// first, then one pass of (1-alpha)/alpha mixing, then a full sort.
inline std::vector<ScoredCandidate> rank_by_sorting(
    const std::vector<facegen::CorpusEntry>& candidates, const facegen::CorpusEntry& ref,
    double alpha, const std::function<double(const facegen::Image&)>& content_vs_ref) {
    std::vector<double> pose(candidates.size()), content(candidates.size());
    double pose_sum = 0.0, content_sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        pose[i] = facegen::pose_distance(candidates[i].landmarks, ref.landmarks);
        pose_sum += pose[i];
        if (alpha != 0.0) {
            content[i] = content_vs_ref(candidates[i].image);
            content_sum += content[i];
        }
    }
    std::vector<ScoredCandidate> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out[i].id = candidates[i].id;
        double d = 0.0;
        if (pose_sum > 0.0) d += (1.0 - alpha) * pose[i] / pose_sum;
        if (alpha != 0.0 && content_sum > 0.0) d += alpha * content[i] / content_sum;
        out[i].combined = d;
    }
    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.combined != b.combined) return a.combined < b.combined;
        return a.id < b.id;
    });
    return out;
}

}  // namespace oracle
