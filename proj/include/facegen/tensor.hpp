#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace facegen {

/// Dense rank-3 tensor in channel-major (C,H,W) layout. Images are
/// Tensor3 with 3 channels and values in [0,1]; feature maps use
/// whatever channel count the producing layer defines.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(int channels, int height, int width, double fill = 0.0)
        : channels_(channels), height_(height), width_(width),
          data_(checked_extent(channels, height, width), fill) {}

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int c, int y, int x) {
        return data_[index(c, y, x)];
    }
    double at(int c, int y, int x) const {
        return data_[index(c, y, x)];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor3& o) const {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

    std::string shape_string() const {
        return std::to_string(channels_) + "x" + std::to_string(height_) +
               "x" + std::to_string(width_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    void clamp(double lo, double hi) {
        for (double& v : data_) v = std::min(hi, std::max(lo, v));
    }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.channels_ == b.channels_ && a.height_ == b.height_ &&
               a.width_ == b.width_ && a.data_ == b.data_;
    }

private:
    static std::size_t checked_extent(int channels, int height, int width) {
        if (channels <= 0 || height <= 0 || width <= 0)
            throw std::invalid_argument("Tensor3: dimensions must be positive");
        return static_cast<std::size_t>(channels) * height * width;
    }

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// An RGB raster with per-channel values in [0,1].
using Image = Tensor3;

// ---------------------------------------------------------------------------
// Deterministic random numbers
// ---------------------------------------------------------------------------

/// Seeded generator with a fixed cross-platform sequence (splitmix64 core).
/// std::normal_distribution and friends are implementation-defined, so every
/// reproducible draw in the library goes through this.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo,hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Standard normal via Box-Muller.
    double next_normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Uniform integer in [0,n).
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

private:
    std::uint64_t state_;
};

/// Image with independent uniform [0,1) values, deterministic in the seed.
inline Image random_image(int height, int width, std::uint64_t seed) {
    Image img(3, height, width);
    SeededRng rng(seed);
    for (double& v : img.data()) v = rng.next_unit();
    return img;
}

/// Sum of squared differences over all pixel/channel positions.
inline double pixel_squared_error(const Tensor3& a, const Tensor3& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("pixel_squared_error: shape mismatch " +
                                    a.shape_string() + " vs " + b.shape_string());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

/// Horizontal mirror (x -> W-1-x), all channels.
inline Image flip_horizontal(const Image& img) {
    Image out(img.channels(), img.height(), img.width());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                out.at(c, y, x) = img.at(c, y, img.width() - 1 - x);
    return out;
}

}  // namespace facegen
