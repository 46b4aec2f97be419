#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "facegen/tensor.hpp"

namespace facegen {

// ---------------------------------------------------------------------------
// Layer descriptors
// ---------------------------------------------------------------------------

struct ConvLayer {
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int pad = 0;
    std::vector<double> weights;  // out_ch x in_ch x kh x kw, row-major
    std::vector<double> bias;     // out_ch

    double weight(int oc, int ic, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) *
                           kernel_w + kx];
    }
};

struct ReluLayer {
    std::string name;
};

struct MaxPoolLayer {
    std::string name;
    int kernel = 0;
    int stride = 1;
};

using Layer = std::variant<ConvLayer, ReluLayer, MaxPoolLayer>;

inline const std::string& layer_name(const Layer& layer) {
    return std::visit([](const auto& l) -> const std::string& { return l.name; }, layer);
}

// ---------------------------------------------------------------------------
// NetworkSpec
// ---------------------------------------------------------------------------

/// Ordered stack of conv / relu / maxpool layers over a 3-channel input.
/// Immutable after validation; safe to share across forward/backward calls.
struct NetworkSpec {
    std::vector<Layer> layers;

    /// Checks the cross-layer channel chain (input is 3-channel), name
    /// uniqueness, stride/pad/shape sanity and weight finiteness.
    void validate() const {
        if (layers.empty()) throw std::invalid_argument("NetworkSpec: no layers");
        std::map<std::string, int> seen;
        int channels = 3;
        for (const Layer& layer : layers) {
            const std::string& name = layer_name(layer);
            if (name.empty()) throw std::invalid_argument("NetworkSpec: empty layer name");
            if (seen.count(name))
                throw std::invalid_argument("NetworkSpec: duplicate layer name '" + name + "'");
            seen[name] = 1;
            if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
                if (conv->in_channels != channels)
                    throw std::invalid_argument(
                        "NetworkSpec: layer '" + name + "' expects " +
                        std::to_string(conv->in_channels) + " input channels, got " +
                        std::to_string(channels));
                if (conv->out_channels <= 0 || conv->kernel_h <= 0 || conv->kernel_w <= 0)
                    throw std::invalid_argument("NetworkSpec: bad conv shape in '" + name + "'");
                if (conv->stride < 1 || conv->pad < 0)
                    throw std::invalid_argument("NetworkSpec: bad stride/pad in '" + name + "'");
                std::size_t expected = static_cast<std::size_t>(conv->out_channels) *
                                       conv->in_channels * conv->kernel_h * conv->kernel_w;
                if (conv->weights.size() != expected)
                    throw std::invalid_argument(
                        "NetworkSpec: weight tensor of '" + name + "' has " +
                        std::to_string(conv->weights.size()) + " values, expected " +
                        std::to_string(expected));
                if (conv->bias.size() != static_cast<std::size_t>(conv->out_channels))
                    throw std::invalid_argument("NetworkSpec: bias size mismatch in '" + name + "'");
                for (double w : conv->weights)
                    if (!std::isfinite(w))
                        throw std::invalid_argument("NetworkSpec: non-finite weight in '" + name + "'");
                for (double b : conv->bias)
                    if (!std::isfinite(b))
                        throw std::invalid_argument("NetworkSpec: non-finite bias in '" + name + "'");
                channels = conv->out_channels;
            } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
                if (pool->kernel <= 0 || pool->stride < 1)
                    throw std::invalid_argument("NetworkSpec: bad pool shape in '" + name + "'");
            }
        }
    }

    int layer_index(const std::string& name) const {
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layer_name(layers[i]) == name) return static_cast<int>(i);
        throw std::invalid_argument("NetworkSpec: unknown layer '" + name + "'");
    }

    bool has_layer(const std::string& name) const {
        for (const Layer& layer : layers)
            if (layer_name(layer) == name) return true;
        return false;
    }

    std::vector<std::string> layer_names() const {
        std::vector<std::string> names;
        names.reserve(layers.size());
        for (const Layer& layer : layers) names.push_back(layer_name(layer));
        return names;
    }
};

// ---------------------------------------------------------------------------
// FeatureStack
// ---------------------------------------------------------------------------

/// Per-layer outputs of one forward pass, plus the pooling argmax positions
/// needed to run the matching backward pass. Single-consumer: one stack
/// backs one backward call chain.
struct FeatureStack {
    Image input;                           // the image that was fed forward
    std::vector<std::string> names;        // executed layers, in order
    std::vector<Tensor3> outputs;          // output of each executed layer
    std::vector<std::vector<int>> argmax;  // per layer: flat input index per pool output elem

    const Tensor3& feature(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return outputs[i];
        throw std::invalid_argument("FeatureStack: layer '" + name + "' not in stack");
    }

    bool has(const std::string& name) const {
        for (const std::string& n : names)
            if (n == name) return true;
        return false;
    }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("FeatureStack: layer '" + name + "' not in stack");
    }
};

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace detail {

inline Tensor3 conv_forward(const ConvLayer& conv, const Tensor3& in) {
    int out_h = (in.height() + 2 * conv.pad - conv.kernel_h) / conv.stride + 1;
    int out_w = (in.width() + 2 * conv.pad - conv.kernel_w) / conv.stride + 1;
    if (in.height() + 2 * conv.pad < conv.kernel_h || in.width() + 2 * conv.pad < conv.kernel_w)
        throw std::invalid_argument("conv '" + conv.name + "': input " + in.shape_string() +
                                    " smaller than kernel");
    Tensor3 out(conv.out_channels, out_h, out_w);
    for (int oc = 0; oc < conv.out_channels; ++oc)
        for (int oy = 0; oy < out_h; ++oy)
            for (int ox = 0; ox < out_w; ++ox) {
                double acc = conv.bias[oc];
                for (int ic = 0; ic < conv.in_channels; ++ic)
                    for (int ky = 0; ky < conv.kernel_h; ++ky) {
                        int iy = oy * conv.stride - conv.pad + ky;
                        if (iy < 0 || iy >= in.height()) continue;
                        for (int kx = 0; kx < conv.kernel_w; ++kx) {
                            int ix = ox * conv.stride - conv.pad + kx;
                            if (ix < 0 || ix >= in.width()) continue;
                            acc += conv.weight(oc, ic, ky, kx) * in.at(ic, iy, ix);
                        }
                    }
                out.at(oc, oy, ox) = acc;
            }
    return out;
}

inline Tensor3 relu_forward(const Tensor3& in) {
    Tensor3 out = in;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

// Ties go to the first-scanned (row-major) position so backward is
// deterministic.
inline Tensor3 maxpool_forward(const MaxPoolLayer& pool, const Tensor3& in,
                               std::vector<int>& argmax_out) {
    if (in.height() < pool.kernel || in.width() < pool.kernel)
        throw std::invalid_argument("maxpool '" + pool.name + "': input " + in.shape_string() +
                                    " smaller than kernel");
    int out_h = (in.height() - pool.kernel) / pool.stride + 1;
    int out_w = (in.width() - pool.kernel) / pool.stride + 1;
    Tensor3 out(in.channels(), out_h, out_w);
    argmax_out.assign(out.size(), -1);
    std::size_t flat = 0;
    for (int c = 0; c < in.channels(); ++c)
        for (int oy = 0; oy < out_h; ++oy)
            for (int ox = 0; ox < out_w; ++ox, ++flat) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                for (int ky = 0; ky < pool.kernel; ++ky)
                    for (int kx = 0; kx < pool.kernel; ++kx) {
                        int iy = oy * pool.stride + ky;
                        int ix = ox * pool.stride + kx;
                        double v = in.at(c, iy, ix);
                        if (v > best) {
                            best = v;
                            best_idx = (c * in.height() + iy) * in.width() + ix;
                        }
                    }
                out.at(c, oy, ox) = best;
                argmax_out[flat] = best_idx;
            }
    return out;
}

}  // namespace detail

/// Runs the network on `image` through the layer named `up_to` (inclusive)
/// and returns every executed layer's output.
inline FeatureStack forward(const NetworkSpec& net, const Image& image,
                            const std::string& up_to) {
    int stop = net.layer_index(up_to);
    if (image.channels() != 3)
        throw std::invalid_argument("forward: expected a 3-channel image, got " +
                                    image.shape_string());
    FeatureStack stack;
    stack.input = image;
    const Tensor3* current = &stack.input;
    for (int i = 0; i <= stop; ++i) {
        const Layer& layer = net.layers[i];
        std::vector<int> argmax;
        Tensor3 out;
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            if (current->channels() != conv->in_channels)
                throw std::invalid_argument("forward: channel mismatch at '" + conv->name + "'");
            out = detail::conv_forward(*conv, *current);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            out = detail::relu_forward(*current);
        } else {
            out = detail::maxpool_forward(std::get<MaxPoolLayer>(layer), *current, argmax);
        }
        stack.names.push_back(layer_name(layer));
        stack.outputs.push_back(std::move(out));
        stack.argmax.push_back(std::move(argmax));
        current = &stack.outputs.back();
    }
    return stack;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace detail {

// Transposed convolution with the stored weights: scatter each output
// gradient element across its receptive field.
inline Tensor3 conv_backward(const ConvLayer& conv, const Tensor3& grad_out,
                             int in_h, int in_w) {
    Tensor3 grad_in(conv.in_channels, in_h, in_w);
    for (int oc = 0; oc < conv.out_channels; ++oc)
        for (int oy = 0; oy < grad_out.height(); ++oy)
            for (int ox = 0; ox < grad_out.width(); ++ox) {
                double g = grad_out.at(oc, oy, ox);
                if (g == 0.0) continue;
                for (int ic = 0; ic < conv.in_channels; ++ic)
                    for (int ky = 0; ky < conv.kernel_h; ++ky) {
                        int iy = oy * conv.stride - conv.pad + ky;
                        if (iy < 0 || iy >= in_h) continue;
                        for (int kx = 0; kx < conv.kernel_w; ++kx) {
                            int ix = ox * conv.stride - conv.pad + kx;
                            if (ix < 0 || ix >= in_w) continue;
                            grad_in.at(ic, iy, ix) += g * conv.weight(oc, ic, ky, kx);
                        }
                    }
            }
    return grad_in;
}

inline Tensor3 relu_backward(const Tensor3& grad_out, const Tensor3& forward_input) {
    Tensor3 grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i)
        if (forward_input[i] <= 0.0) grad_in[i] = 0.0;
    return grad_in;
}

inline Tensor3 maxpool_backward(const Tensor3& grad_out, const std::vector<int>& argmax,
                                int in_c, int in_h, int in_w) {
    Tensor3 grad_in(in_c, in_h, in_w);
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in[argmax[i]] += grad_out[i];
    return grad_in;
}

}  // namespace detail

/// Propagates a gradient defined at the named layer down to the input
/// image of the forward pass that produced `stack`.
inline Tensor3 backward_to_image(const NetworkSpec& net, const FeatureStack& stack,
                                 const std::string& layer, const Tensor3& grad_at_layer) {
    int start = stack.index_of(layer);
    if (!stack.outputs[start].same_shape(grad_at_layer))
        throw std::invalid_argument("backward_to_image: gradient shape " +
                                    grad_at_layer.shape_string() + " does not match layer '" +
                                    layer + "' output " + stack.outputs[start].shape_string());
    if (static_cast<std::size_t>(start) >= net.layers.size() ||
        layer_name(net.layers[start]) != stack.names[start])
        throw std::invalid_argument("backward_to_image: stack does not match network");

    Tensor3 grad = grad_at_layer;
    for (int i = start; i >= 0; --i) {
        const Tensor3& below = i > 0 ? stack.outputs[i - 1] : stack.input;
        const Layer& l = net.layers[i];
        if (const auto* conv = std::get_if<ConvLayer>(&l)) {
            grad = detail::conv_backward(*conv, grad, below.height(), below.width());
        } else if (std::holds_alternative<ReluLayer>(l)) {
            grad = detail::relu_backward(grad, below);
        } else {
            grad = detail::maxpool_backward(grad, stack.argmax[i], below.channels(),
                                            below.height(), below.width());
        }
    }
    return grad;
}

}  // namespace facegen
