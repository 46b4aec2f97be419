#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "facegen/color_transfer.hpp"
#include "facegen/guided_set.hpp"
#include "facegen/losses.hpp"
#include "facegen/network.hpp"
#include "facegen/tensor.hpp"

namespace facegen {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class InitMode { kBlankGray, kSeededNoise, kReferenceCopy };

inline InitMode parse_init_mode(const std::string& text) {
    if (text == "blank-gray") return InitMode::kBlankGray;
    if (text == "seeded-noise") return InitMode::kSeededNoise;
    if (text == "reference-copy") return InitMode::kReferenceCopy;
    throw std::invalid_argument("unknown init mode '" + text +
                                "' (expected blank-gray, seeded-noise or reference-copy)");
}

inline std::string init_mode_name(InitMode mode) {
    switch (mode) {
        case InitMode::kBlankGray: return "blank-gray";
        case InitMode::kSeededNoise: return "seeded-noise";
        case InitMode::kReferenceCopy: return "reference-copy";
    }
    return "?";
}

struct OptimizerConfig {
    double learning_rate = 0.05;
    int max_iters = 200;
    int convergence_window = 10;
    double convergence_rel_tol = 1e-4;
    InitMode init = InitMode::kBlankGray;
    std::uint64_t seed = 0;
    bool clamp_each_step = true;
    double momentum = 0.0;  // 0 = plain descent

    void validate() const {
        if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
            throw std::invalid_argument("optimizer: learning_rate must be positive and finite");
        if (max_iters < 1) throw std::invalid_argument("optimizer: max_iters must be >= 1");
        if (convergence_window < 1 || convergence_window > max_iters)
            throw std::invalid_argument("optimizer: convergence_window must be in [1, max_iters]");
        if (!std::isfinite(convergence_rel_tol) || convergence_rel_tol <= 0.0)
            throw std::invalid_argument("optimizer: convergence_rel_tol must be positive");
        if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0)
            throw std::invalid_argument("optimizer: momentum must be in [0, 1)");
    }
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Starting image for the descent. reference is required (and must match
/// the requested dims) only for reference-copy.
inline Image initialize_target(InitMode mode, int height, int width, std::uint64_t seed,
                               const Image* reference = nullptr) {
    switch (mode) {
        case InitMode::kBlankGray:
            return Image(3, height, width, 0.5);
        case InitMode::kSeededNoise: {
            Image out(3, height, width);
            SeededRng rng(seed);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = 0.5 + rng.next_uniform(-0.05, 0.05);
            return out;
        }
        case InitMode::kReferenceCopy: {
            if (!reference)
                throw std::invalid_argument("initialize_target: reference-copy needs a reference");
            if (reference->channels() != 3 || reference->height() != height ||
                reference->width() != width)
                throw std::invalid_argument("initialize_target: reference shape " +
                                            reference->shape_string() + " does not match request");
            return *reference;
        }
    }
    throw std::invalid_argument("initialize_target: bad mode");
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// One descent iterate: loss components and pixel squared error vs the
/// reference, all evaluated before the step of the same index.
struct TraceRow {
    int iter = 0;
    double total = 0.0;
    double attr = 0.0;
    double id = 0.0;
    double tv = 0.0;
    double sqerr = 0.0;
};

/// Non-finite loss or gradient. Carries the iteration that failed and the
/// last iterate whose evaluation was still finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int iteration, Image last_good)
        : std::runtime_error("descent diverged at iteration " + std::to_string(iteration) +
                             ": non-finite loss or gradient"),
          iteration(iteration),
          last_good(std::move(last_good)) {}

    int iteration;
    Image last_good;
};

struct GenerationResult {
    Image image;      // final output, color-transferred when that stage ran
    Image raw_image;  // final descent iterate, before the color stage
    std::vector<TraceRow> trace;
    int iterations_run = 0;  // == trace.size(); the initial image counts as iteration 0
    int steps_taken = 0;     // descent steps applied; trace rows - 1
    bool converged = false;
    bool rolled_back = false;  // run ended above its starting loss; best iterate returned
    bool color_applied = false;
    ColorTransform color;  // identity unless color_applied
};

// ---------------------------------------------------------------------------
// Descent loop
// ---------------------------------------------------------------------------

/// Gradient descent on the combined objective: evaluate, record a trace row,
/// test convergence, then step target <- clamp(target - a * gradient).
/// Convergence is a windowed rule: once the total loss fails to drop by at
/// least rel_tol (relative) over convergence_window steps, the run stops. An
/// exactly zero gradient stops immediately, so a zero-loss start returns the
/// input untouched. If the color flag is set, a 3x3 YCbCr transform is fitted
/// against the reference and applied to the final iterate.
inline GenerationResult run_generation(const NetworkSpec& net, const ObjectiveConfig& objective,
                                       const OptimizerConfig& optimizer, const GuidedSet& guided,
                                       const Image& ref, const Image* mask = nullptr,
                                       bool color = false) {
    objective.validate();
    optimizer.validate();
    guided.validate();
    if (ref.channels() != 3) throw std::invalid_argument("run_generation: reference must be 3xHxW");
    for (const GuidedEntry& entry : guided.entries)
        if (!entry.image.same_shape(ref))
            throw std::invalid_argument("run_generation: guided image shape " +
                                        entry.image.shape_string() + " does not match reference " +
                                        ref.shape_string());
    if (mask && !mask->same_shape(ref))
        throw std::invalid_argument("run_generation: mask shape does not match reference");

    Image current = initialize_target(optimizer.init, ref.height(), ref.width(), optimizer.seed,
                                      &ref);
    Image last_good = current;
    Image best = current;
    double best_total = 0.0;
    Tensor3 velocity;
    if (optimizer.momentum > 0.0)
        velocity = Tensor3(current.channels(), current.height(), current.width());

    GenerationResult out;
    for (int iter = 0;; ++iter) {
        TotalLoss loss = total_objective(net, objective, current, guided, ref, mask);
        if (!std::isfinite(loss.value) || !loss.gradient.all_finite())
            throw DivergenceError(iter, last_good);
        out.trace.push_back({iter, loss.value, loss.attr, loss.id, loss.tv,
                             pixel_squared_error(current, ref)});
        last_good = current;
        if (iter == 0 || loss.value < best_total) {
            best_total = loss.value;
            best = current;
        }

        bool zero_gradient = true;
        for (std::size_t i = 0; i < loss.gradient.size(); ++i)
            if (loss.gradient[i] != 0.0) {
                zero_gradient = false;
                break;
            }
        if (zero_gradient) {
            out.converged = true;
            break;
        }
        if (iter >= optimizer.convergence_window) {
            double prev = out.trace[iter - optimizer.convergence_window].total;
            double drop = prev - loss.value;
            if (drop < optimizer.convergence_rel_tol * std::max(std::abs(prev), 1e-30)) {
                out.converged = true;
                break;
            }
        }
        if (iter >= optimizer.max_iters) break;

        if (optimizer.momentum > 0.0) {
            for (std::size_t i = 0; i < current.size(); ++i) {
                velocity[i] = optimizer.momentum * velocity[i] + loss.gradient[i];
                current[i] -= optimizer.learning_rate * velocity[i];
            }
        } else {
            for (std::size_t i = 0; i < current.size(); ++i)
                current[i] -= optimizer.learning_rate * loss.gradient[i];
        }
        if (optimizer.clamp_each_step) current.clamp(0.0, 1.0);
    }

    out.iterations_run = static_cast<int>(out.trace.size());
    out.steps_taken = out.iterations_run - 1;
    // A run must never end worse than it started; a pathological config
    // (e.g. an oversized step on a bumpy objective) returns its best iterate.
    if (out.trace.back().total > out.trace.front().total) {
        current = best;
        out.converged = false;
        out.rolled_back = true;
    }
    out.raw_image = current;

    if (color) {
        long window = sample_window_pixels(ref.height(), ref.width());
        int n = static_cast<int>(std::min<long>(1000, window));
        if (n < 9)
            throw std::invalid_argument("run_generation: image too small for the color stage (" +
                                        std::to_string(window) + "-pixel sampling window)");
        PixelSample sample = sample_pixel_pairs(current, ref, n, 0.5, optimizer.seed);
        out.color = fit_color_transform(sample);
        out.image = apply_color_transform(current, out.color);
        out.color_applied = true;
    } else {
        out.image = current;
    }
    return out;
}

/// Same descent, but the guided set is supplied directly instead of being
/// retrieved from a corpus. Weights are normalized to sum 1 (uniform when
/// empty) and distances are not defined in this mode.
inline GenerationResult run_guided_image_mode(const NetworkSpec& net,
                                              const ObjectiveConfig& objective,
                                              const OptimizerConfig& optimizer,
                                              const std::vector<Image>& guided_images,
                                              std::vector<double> weights, const Image& ref,
                                              const Image* mask = nullptr, bool color = false) {
    if (guided_images.empty())
        throw std::invalid_argument("guided-image mode: no guided images given");
    if (weights.empty()) weights.assign(guided_images.size(), 1.0 / guided_images.size());
    if (weights.size() != guided_images.size())
        throw std::invalid_argument("guided-image mode: " + std::to_string(weights.size()) +
                                    " weights for " + std::to_string(guided_images.size()) +
                                    " images");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("guided-image mode: weights must be finite and >= 0");
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("guided-image mode: weights sum to zero");
    for (double& w : weights) w /= sum;
    return run_generation(net, objective, optimizer, make_guided_set(guided_images, weights), ref,
                          mask, color);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One sweep entry: the varied value, the summary metric, the full run.
struct SweepRun {
    std::string label;
    double metric = 0.0;
    GenerationResult result;
};

namespace detail {

inline std::string format_value(double v) {
    std::ostringstream out;
    out << std::setprecision(15) << v;
    return out.str();
}

}  // namespace detail

/// Reruns the identical setup once per layer and reports the final pixel
/// squared error vs the reference for each.
inline std::vector<SweepRun> layer_sweep(const NetworkSpec& net, const ObjectiveConfig& objective,
                                         const OptimizerConfig& optimizer, const GuidedSet& guided,
                                         const Image& ref, const std::vector<std::string>& layers,
                                         const Image* mask = nullptr, bool color = false) {
    if (layers.empty()) throw std::invalid_argument("layer_sweep: no layers given");
    std::vector<SweepRun> out;
    out.reserve(layers.size());
    for (const std::string& layer : layers) {
        ObjectiveConfig cfg = objective;
        cfg.layer = layer;
        net.layer_index(layer);  // unknown layer fails before the run starts
        SweepRun run;
        run.label = layer;
        run.result = run_generation(net, cfg, optimizer, guided, ref, mask, color);
        run.metric = pixel_squared_error(run.result.raw_image, ref);
        out.push_back(std::move(run));
    }
    return out;
}

/// Reruns the identical setup once per smoothing weight and reports the
/// final (unweighted) total-variation value for each.
inline std::vector<SweepRun> tv_sweep(const NetworkSpec& net, const ObjectiveConfig& objective,
                                      const OptimizerConfig& optimizer, const GuidedSet& guided,
                                      const Image& ref, const std::vector<double>& gammas,
                                      const Image* mask = nullptr, bool color = false) {
    if (gammas.empty()) throw std::invalid_argument("tv_sweep: no gamma values given");
    std::vector<SweepRun> out;
    out.reserve(gammas.size());
    for (double gamma : gammas) {
        if (!std::isfinite(gamma) || gamma < 0.0)
            throw std::invalid_argument("tv_sweep: gamma must be finite and >= 0");
        ObjectiveConfig cfg = objective;
        cfg.gamma = gamma;
        SweepRun run;
        run.label = detail::format_value(gamma);
        run.result = run_generation(net, cfg, optimizer, guided, ref, mask, color);
        run.metric = tv_loss(run.result.raw_image, cfg.tv_beta).value;
        out.push_back(std::move(run));
    }
    return out;
}

}  // namespace facegen
