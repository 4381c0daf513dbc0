#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/net.hpp"
#include "swag/ops.hpp"
#include "swag/tensor.hpp"

namespace swag {

// Default style-loss weight per architecture family: the VGG taps operate at
// feature scales ~1e0 while the residual-family taps reach much larger
// magnitudes, hence the very different balancing constants.
inline double default_beta(const std::string& arch_name) {
    return arch_name == "vgg19" ? 4e10 : 1e17;
}

struct LossConfig {
    // w_l in {0,1} per style tap; empty means every style tap participates.
    std::map<std::string, double> style_layer_weights;
    double alpha = 1.0;
    double beta = 4e10;
    bool swag = false;
    double temperature = 1.0;

    double weight_for(const std::string& tap) const {
        if (style_layer_weights.empty()) return 1.0;
        auto it = style_layer_weights.find(tap);
        return it == style_layer_weights.end() ? 0.0 : it->second;
    }
};

template <typename S>
struct GramMatrix {
    Tensor<S> values;  // DxD, exactly symmetric
    std::string layer;
    std::int64_t d = 0;
    std::int64_t m = 0;
};

namespace detail {

template <typename S>
std::pair<std::int64_t, std::int64_t> feature_dm(const Tensor<S>& f) {
    if (f.ndim() == 4 && f.dim(0) == 1) return {f.dim(1), f.dim(2) * f.dim(3)};
    if (f.ndim() == 2) return {f.dim(0), f.dim(1)};
    throw ConfigError("feature map must be 1xDxHxW or DxM");
}

}  // namespace detail

template <typename S>
GramMatrix<S> gram_matrix(const Tensor<S>& f, const std::string& layer = "") {
    const auto [d, m] = detail::feature_dm(f);
    GramMatrix<S> g;
    g.values = gram(f);
    g.layer = layer;
    g.d = d;
    g.m = m;
    return g;
}

// Softmax smoothing of a feature map: one distribution over all D*M entries.
template <typename S>
Tensor<S> smooth(const Tensor<S>& f, double temperature = 1.0) {
    return softmax_all(f, temperature);
}

// 1/2 * ||Fx - Fc||^2
template <typename S>
Tensor<S> content_loss(const Tensor<S>& fx, const Tensor<S>& fc) {
    if (fx.shape() != fc.shape()) throw ConfigError("content_loss: shape mismatch");
    return scale(sum_sq(sub(fx, fc)), S(0.5));
}

template <typename S>
Tensor<S> swag_content_loss(const Tensor<S>& fx, const Tensor<S>& fc,
                            double temperature = 1.0) {
    if (fx.shape() != fc.shape()) throw ConfigError("content_loss: shape mismatch");
    return content_loss(smooth(fx, temperature), smooth(fc, temperature));
}

// Precomputed per-tap targets for the style term: the style image's Gram
// matrices (of smoothed features under SWAG) plus the normalization constants.
template <typename S>
struct StyleTargets {
    struct Entry {
        std::string tap;
        Tensor<S> gram;  // target G, detached
        double weight = 1.0;
        std::int64_t d = 0;
        std::int64_t m = 0;
    };
    std::vector<Entry> entries;
    bool swag = false;
    double temperature = 1.0;
};

template <typename S>
StyleTargets<S> make_style_targets(const FeatureTaps<S>& style_taps, const LossConfig& cfg) {
    StyleTargets<S> targets;
    targets.swag = cfg.swag;
    targets.temperature = cfg.temperature;
    for (const auto& [name, f] : style_taps.items) {
        const double w = cfg.weight_for(name);
        if (w == 0.0) continue;
        typename StyleTargets<S>::Entry e;
        e.tap = name;
        e.weight = w;
        const auto [d, m] = detail::feature_dm(f);
        e.d = d;
        e.m = m;
        const Tensor<S> feat = cfg.swag ? smooth(f, cfg.temperature) : f;
        e.gram = gram(feat).clone();
        targets.entries.push_back(std::move(e));
    }
    if (targets.entries.empty())
        throw ConfigError("style loss requires at least one tap with weight 1");
    return targets;
}

// sum_l w_l / (4 D_l^2 M_l^2) * ||G(F_l(x)) - G_l||^2 against fixed targets.
template <typename S>
Tensor<S> style_loss_vs_targets(const FeatureTaps<S>& taps_x,
                                const StyleTargets<S>& targets) {
    Tensor<S> total = Tensor<S>::scalar(S(0));
    for (const auto& e : targets.entries) {
        if (!taps_x.contains(e.tap)) throw ConfigError("style loss: missing tap " + e.tap);
        const Tensor<S>& fx = taps_x.at(e.tap);
        const auto [d, m] = detail::feature_dm(fx);
        if (d != e.d || m != e.m)
            throw ConfigError("style loss: tap " + e.tap + " shape mismatch");
        const Tensor<S> feat = targets.swag ? smooth(fx, targets.temperature) : fx;
        const Tensor<S> diff = sub(gram(feat), e.gram);
        const double norm = e.weight / (4.0 * static_cast<double>(d) * static_cast<double>(d) *
                                        static_cast<double>(m) * static_cast<double>(m));
        total = add(total, scale(sum_sq(diff), static_cast<S>(norm)));
    }
    return total;
}

template <typename S>
Tensor<S> style_loss(const FeatureTaps<S>& taps_x, const FeatureTaps<S>& taps_s,
                     const LossConfig& cfg) {
    LossConfig plain = cfg;
    plain.swag = false;
    return style_loss_vs_targets(taps_x, make_style_targets(taps_s, plain));
}

template <typename S>
Tensor<S> swag_style_loss(const FeatureTaps<S>& taps_x, const FeatureTaps<S>& taps_s,
                          const LossConfig& cfg) {
    LossConfig smoothed = cfg;
    smoothed.swag = true;
    return style_loss_vs_targets(taps_x, make_style_targets(taps_s, smoothed));
}

// Fixed optimization targets for one synthesis task.
template <typename S>
struct ObjectiveTargets {
    std::string content_tap;
    Tensor<S> content_feature;  // detached; smoothed already applied under SWAG
    StyleTargets<S> style;
    bool has_content = false;
    bool has_style = false;
};

template <typename S>
struct ObjectiveValue {
    Tensor<S> total;
    double content = 0;
    double style = 0;
};

// alpha * L_content + beta * L_style over the taps of x.
template <typename S>
ObjectiveValue<S> evaluate_objective(const FeatureTaps<S>& taps_x,
                                     const ObjectiveTargets<S>& targets,
                                     const LossConfig& cfg) {
    ObjectiveValue<S> out;
    Tensor<S> total = Tensor<S>::scalar(S(0));
    if (targets.has_content && cfg.alpha != 0.0) {
        if (!taps_x.contains(targets.content_tap))
            throw ConfigError("objective: missing content tap " + targets.content_tap);
        const Tensor<S>& fx = taps_x.at(targets.content_tap);
        const Tensor<S> feat = cfg.swag ? smooth(fx, cfg.temperature) : fx;
        Tensor<S> c = content_loss(feat, targets.content_feature);
        out.content = static_cast<double>(c.item());
        total = add(total, scale(c, static_cast<S>(cfg.alpha)));
    }
    if (targets.has_style && cfg.beta != 0.0) {
        Tensor<S> s = style_loss_vs_targets(taps_x, targets.style);
        out.style = static_cast<double>(s.item());
        total = add(total, scale(s, static_cast<S>(cfg.beta)));
    }
    out.total = total;
    return out;
}

}  // namespace swag
