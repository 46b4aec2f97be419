#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "facegen/tensor.hpp"

namespace facegen {

/// One guided face: an attribute exemplar the generated image is pulled
/// towards, with its mixing weight and (for corpus-selected sets) the
/// similarity distance it was ranked by.
struct GuidedEntry {
    std::string id;
    Image image;
    double weight = 0.0;
    double distance = 0.0;
};

/// k exemplar faces with weights summing to 1, sorted by ascending
/// similarity distance when produced by corpus selection.
struct GuidedSet {
    std::vector<GuidedEntry> entries;
    // Set when a ranking distance term had a zero denominator and was
    // dropped for all candidates.
    bool pose_term_degenerate = false;
    bool content_term_degenerate = false;

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("GuidedSet: empty");
        double sum = 0.0;
        for (const GuidedEntry& e : entries) {
            if (e.weight < 0.0) throw std::invalid_argument("GuidedSet: negative weight");
            sum += e.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("GuidedSet: weights sum to " + std::to_string(sum) +
                                        ", expected 1");
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].distance < entries[i - 1].distance)
                throw std::invalid_argument("GuidedSet: entries not sorted by distance");
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (!entries[i].image.same_shape(entries[0].image))
                throw std::invalid_argument("GuidedSet: exemplar image shapes differ");
    }
};

/// Builds a guided set from explicit images and weights (guided-image mode).
/// Weights must be finite and nonnegative with a positive sum; they are
/// normalized to sum to one.
inline GuidedSet make_guided_set(const std::vector<Image>& images,
                                 const std::vector<double>& weights) {
    if (images.empty()) throw std::invalid_argument("make_guided_set: no images");
    if (images.size() != weights.size())
        throw std::invalid_argument("make_guided_set: image/weight count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("make_guided_set: weights must be finite and >= 0");
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("make_guided_set: weights sum to zero");
    GuidedSet set;
    for (std::size_t i = 0; i < images.size(); ++i)
        set.entries.push_back({"guided-" + std::to_string(i), images[i], weights[i] / sum, 0.0});
    set.validate();
    return set;
}

/// Equal-weight variant.
inline GuidedSet make_guided_set(const std::vector<Image>& images) {
    std::vector<double> weights(images.size(), 1.0 / static_cast<double>(images.size()));
    return make_guided_set(images, weights);
}

}  // namespace facegen
