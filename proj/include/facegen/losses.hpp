#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "facegen/guided_set.hpp"
#include "facegen/network.hpp"
#include "facegen/tensor.hpp"

namespace facegen {

/// A scalar loss together with its gradient in image space.
struct LossValue {
    double value = 0.0;
    Tensor3 gradient;
};

/// Weights and layer choice for the combined objective
/// attr_weight * attr + lambda * id + gamma * tv.
struct ObjectiveConfig {
    std::string layer;
    double lambda = 1.0;       // identity tradeoff
    double gamma = 0.0;        // TV tradeoff
    double tv_beta = 2.0;      // TV exponent
    double attr_weight = 1.0;  // 0 turns the run into a pure-identity descent
    bool mask_guided = false;  // also pre-mask the guided images

    void validate() const {
        if (layer.empty()) throw std::invalid_argument("ObjectiveConfig: no layer named");
        if (!std::isfinite(lambda) || lambda < 0.0)
            throw std::invalid_argument("ObjectiveConfig: bad lambda");
        if (!std::isfinite(gamma) || gamma < 0.0)
            throw std::invalid_argument("ObjectiveConfig: bad gamma");
        if (!std::isfinite(tv_beta) || tv_beta < 1.0)
            throw std::invalid_argument("ObjectiveConfig: tv_beta must be >= 1");
        if (!std::isfinite(attr_weight) || attr_weight < 0.0)
            throw std::invalid_argument("ObjectiveConfig: bad attr_weight");
    }
};

// ---------------------------------------------------------------------------
// Perceptual (content) loss
// ---------------------------------------------------------------------------

/// Squared feature-map difference at the named layer,
///   value = ||phi_l(target) - phi_l(ref)||_F^2 / (2 C H W),
/// with the layer gradient (phi_l(target) - phi_l(ref)) / (C H W) zeroed at
/// positions where phi_l(target) < 0 before back-propagating to the image.
/// The gate only fires at layers whose output can go negative (conv outputs
/// taken before ReLU); at ReLU or post-ReLU pool layers it is a no-op and the
/// gradient is exact for the value above.
inline LossValue perceptual_loss(const NetworkSpec& net, const std::string& layer,
                                 const Image& target, const Image& ref) {
    if (!target.same_shape(ref))
        throw std::invalid_argument("perceptual_loss: image shapes differ, " +
                                    target.shape_string() + " vs " + ref.shape_string());
    FeatureStack stack_t = forward(net, target, layer);
    FeatureStack stack_r = forward(net, ref, layer);
    const Tensor3& ft = stack_t.feature(layer);
    const Tensor3& fr = stack_r.feature(layer);

    double norm = 1.0 / static_cast<double>(ft.size());
    double value = 0.0;
    Tensor3 grad_at_layer(ft.channels(), ft.height(), ft.width());
    for (std::size_t i = 0; i < ft.size(); ++i) {
        double d = ft[i] - fr[i];
        value += d * d;
        grad_at_layer[i] = ft[i] >= 0.0 ? norm * d : 0.0;
    }
    value *= 0.5 * norm;

    LossValue out;
    out.value = value;
    out.gradient = backward_to_image(net, stack_t, layer, grad_at_layer);
    return out;
}

/// Perceptual value only (used by candidate ranking, where no gradient is
/// needed and forward passes dominate).
inline double perceptual_value(const NetworkSpec& net, const std::string& layer,
                               const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("perceptual_value: image shapes differ");
    FeatureStack sa = forward(net, a, layer);
    FeatureStack sb = forward(net, b, layer);
    const Tensor3& fa = sa.feature(layer);
    const Tensor3& fb = sb.feature(layer);
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        double d = fa[i] - fb[i];
        acc += d * d;
    }
    return acc / (2.0 * static_cast<double>(fa.size()));
}

/// Keeps the reference face recognizable: the perceptual loss against the
/// reference, kept as a named operation so the lambda-weighted term can be
/// logged separately.
inline LossValue identity_loss(const NetworkSpec& net, const std::string& layer,
                               const Image& target, const Image& ref) {
    return perceptual_loss(net, layer, target, ref);
}

// ---------------------------------------------------------------------------
// Attribute loss
// ---------------------------------------------------------------------------

namespace detail {

inline Image apply_mask(const Image& img, const Image& mask) {
    Image out = img;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return out;
}

}  // namespace detail

/// Weighted sum of perceptual losses against the guided faces. With a mask,
/// each term is evaluated on target (x) mask and the image gradient is zeroed
/// wherever the mask is <= 0; guided faces stay unmasked unless mask_guided
/// is set.
inline LossValue attribute_loss(const NetworkSpec& net, const std::string& layer,
                                const Image& target, const GuidedSet& guided,
                                const Image* mask = nullptr, bool mask_guided = false) {
    guided.validate();
    if (mask && !mask->same_shape(target))
        throw std::invalid_argument("attribute_loss: mask shape " + mask->shape_string() +
                                    " does not match target " + target.shape_string());

    Image masked_target = mask ? detail::apply_mask(target, *mask) : target;

    LossValue out;
    out.value = 0.0;
    out.gradient = Tensor3(target.channels(), target.height(), target.width());
    // Fixed summation order: guided-set index.
    for (const GuidedEntry& entry : guided.entries) {
        const Image& exemplar = (mask && mask_guided) ? detail::apply_mask(entry.image, *mask)
                                                      : entry.image;
        LossValue term = perceptual_loss(net, layer, masked_target, exemplar);
        out.value += entry.weight * term.value;
        for (std::size_t i = 0; i < out.gradient.size(); ++i)
            out.gradient[i] += entry.weight * term.gradient[i];
    }
    if (mask) {
        for (std::size_t i = 0; i < out.gradient.size(); ++i)
            if ((*mask)[i] <= 0.0) out.gradient[i] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Total variation
// ---------------------------------------------------------------------------

/// Smoothness penalty: per position, the squared forward differences down
/// and right are summed and raised to beta/2; out-of-range differences at
/// the borders are dropped.
inline LossValue tv_loss(const Image& target, double beta = 2.0) {
    if (!std::isfinite(beta) || beta < 1.0)
        throw std::invalid_argument("tv_loss: beta must be >= 1");
    const int h = target.height(), w = target.width();
    LossValue out;
    out.gradient = Tensor3(target.channels(), h, w);
    double value = 0.0;
    for (int c = 0; c < target.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double dy = y + 1 < h ? target.at(c, y + 1, x) - target.at(c, y, x) : 0.0;
                double dx = x + 1 < w ? target.at(c, y, x + 1) - target.at(c, y, x) : 0.0;
                double base = dy * dy + dx * dx;
                if (base <= 0.0) continue;
                value += beta == 2.0 ? base : std::pow(base, beta * 0.5);
                double coeff = beta == 2.0 ? 2.0 : beta * std::pow(base, beta * 0.5 - 1.0);
                out.gradient.at(c, y, x) -= coeff * (dy + dx);
                if (y + 1 < h) out.gradient.at(c, y + 1, x) += coeff * dy;
                if (x + 1 < w) out.gradient.at(c, y, x + 1) += coeff * dx;
            }
    out.value = value;
    return out;
}

// ---------------------------------------------------------------------------
// Combined objective
// ---------------------------------------------------------------------------

/// Value, gradient and the per-term components of the combined objective.
struct TotalLoss {
    double value = 0.0;
    Tensor3 gradient;
    double attr = 0.0;
    double id = 0.0;
    double tv = 0.0;
};

/// attr_weight * l_attr + lambda * l_id + gamma * l_tv, with the component
/// values reported for logging. Terms with a zero coefficient do not touch
/// the gradient, so degenerate configs reduce bit-exactly to the remaining
/// terms.
inline TotalLoss total_objective(const NetworkSpec& net, const ObjectiveConfig& cfg,
                                 const Image& target, const GuidedSet& guided,
                                 const Image& ref, const Image* mask = nullptr) {
    cfg.validate();
    TotalLoss out;
    out.gradient = Tensor3(target.channels(), target.height(), target.width());

    LossValue attr = attribute_loss(net, cfg.layer, target, guided, mask, cfg.mask_guided);
    LossValue id = identity_loss(net, cfg.layer, target, ref);
    LossValue tv = tv_loss(target, cfg.tv_beta);
    out.attr = attr.value;
    out.id = id.value;
    out.tv = tv.value;
    out.value = cfg.attr_weight * attr.value + cfg.lambda * id.value + cfg.gamma * tv.value;

    if (cfg.attr_weight != 0.0)
        for (std::size_t i = 0; i < out.gradient.size(); ++i)
            out.gradient[i] += cfg.attr_weight * attr.gradient[i];
    if (cfg.lambda != 0.0)
        for (std::size_t i = 0; i < out.gradient.size(); ++i)
            out.gradient[i] += cfg.lambda * id.gradient[i];
    if (cfg.gamma != 0.0)
        for (std::size_t i = 0; i < out.gradient.size(); ++i)
            out.gradient[i] += cfg.gamma * tv.gradient[i];
    return out;
}

}  // namespace facegen
