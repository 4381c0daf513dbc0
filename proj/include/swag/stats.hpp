#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/image.hpp"
#include "swag/losses.hpp"
#include "swag/net.hpp"
#include "swag/tensor.hpp"

namespace swag {

// Shannon entropy of the softmax distribution over all entries, scaled so a
// uniform input scores exactly 1. Shift-stable.
template <typename S>
double normalized_entropy(const std::vector<S>& values) {
    const std::size_t n = values.size();
    if (n <= 1) return 1.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (S v : values) mx = std::max(mx, static_cast<double>(v));
    double z = 0;
    for (S v : values) z += std::exp(static_cast<double>(v) - mx);
    // H = log z - (1/z) * sum e^(v-mx) * (v-mx), in nats
    double acc = 0;
    for (S v : values) {
        const double d = static_cast<double>(v) - mx;
        acc += std::exp(d) * d;
    }
    const double h = std::log(z) - acc / z;
    return std::max(0.0, h / std::log(static_cast<double>(n)));
}

template <typename S>
double max_entry(const std::vector<S>& values) {
    double mx = -std::numeric_limits<double>::infinity();
    for (S v : values) mx = std::max(mx, static_cast<double>(v));
    return mx;
}

// Per-tap activation and Gram statistics for one forward pass.
struct TapStats {
    std::string tap;
    int depth_index = 0;
    double max_activation = 0;
    double activation_entropy = 0;
    double gram_max = 0;
    double gram_entropy = 0;
};

struct StatsReport {
    std::string arch;
    std::uint64_t seed = 0;
    std::string image;
    bool smoothed = false;
    std::vector<TapStats> taps;
};

// When `smoothed` is set, the statistics are taken on the softmax-smoothed
// feature maps (the diagnostics view of the SWAG losses); the entropy softmax
// is then applied on top of the smoothed values.
template <typename S>
StatsReport activation_stats(const FeatureTaps<S>& taps, bool smoothed = false) {
    if (taps.size() == 0) throw ConfigError("activation_stats: no taps");
    StatsReport report;
    report.smoothed = smoothed;
    int depth = 0;
    for (const auto& [name, f] : taps.items) {
        detail::check_finite(f, "tap " + name);
        TapStats row;
        row.tap = name;
        row.depth_index = depth++;
        const Tensor<S> feat = smoothed ? smooth(f, 1.0) : f;
        row.max_activation = max_entry(feat.data());
        row.activation_entropy = normalized_entropy(feat.data());
        report.taps.push_back(std::move(row));
    }
    return report;
}

template <typename S>
StatsReport gram_stats(const FeatureTaps<S>& taps, bool smoothed = false) {
    if (taps.size() == 0) throw ConfigError("gram_stats: no taps");
    StatsReport report;
    report.smoothed = smoothed;
    int depth = 0;
    for (const auto& [name, f] : taps.items) {
        detail::check_finite(f, "tap " + name);
        TapStats row;
        row.tap = name;
        row.depth_index = depth++;
        const Tensor<S> feat = smoothed ? smooth(f, 1.0) : f;
        const Tensor<S> g = gram(feat);
        row.gram_max = max_entry(g.data());
        row.gram_entropy = normalized_entropy(g.data());
        report.taps.push_back(std::move(row));
    }
    return report;
}

// Activation and Gram statistics in one pass; what `probe` emits per row.
template <typename S>
StatsReport full_stats(const FeatureTaps<S>& taps, bool smoothed = false) {
    StatsReport a = activation_stats(taps, smoothed);
    const StatsReport g = gram_stats(taps, smoothed);
    for (std::size_t i = 0; i < a.taps.size(); ++i) {
        a.taps[i].gram_max = g.taps[i].gram_max;
        a.taps[i].gram_entropy = g.taps[i].gram_entropy;
    }
    return a;
}

// --- Activation tracks --------------------------------------------------------

enum class TrackReduce { channel_max, random_channel };

struct TrackSet {
    std::vector<std::pair<int, int>> positions;   // (u, v) image coordinates
    std::vector<std::string> taps;                // tapped layers, shallow -> deep
    std::vector<std::vector<double>> values;      // [position][tap]
    std::string interpolation = "nearest";
};

// Samples image positions and follows them through every tapped layer via
// nearest-neighbor grid mapping; the tracked value at a cell is the maximum
// over channels (or one seeded random channel per position).
template <typename S>
TrackSet activation_tracks(const Network<S>& net, const Tensor<S>& image, int n_positions,
                           std::uint64_t seed,
                           TrackReduce reduce = TrackReduce::channel_max) {
    if (n_positions < 1) throw ConfigError("activation_tracks: n_positions must be >= 1");
    const std::int64_t h0 = image.dim(2), w0 = image.dim(3);
    FeatureTaps<S> taps = forward_taps(net, image);
    if (taps.size() == 0) throw ConfigError("activation_tracks: network declares no taps");

    TrackSet out;
    std::mt19937_64 rng(seed);
    auto draw = [&rng](std::int64_t n) {
        return static_cast<std::int64_t>(static_cast<double>(rng() >> 11) * 0x1.0p-53 *
                                         static_cast<double>(n));
    };
    std::vector<std::uint64_t> channel_draws;
    for (int p = 0; p < n_positions; ++p) {
        const int u = static_cast<int>(draw(w0));
        const int v = static_cast<int>(draw(h0));
        out.positions.emplace_back(u, v);
        channel_draws.push_back(rng());
    }
    for (const auto& [name, t] : taps.items) out.taps.push_back(name);

    out.values.assign(static_cast<std::size_t>(n_positions), {});
    for (int p = 0; p < n_positions; ++p) {
        const auto [u, v] = out.positions[static_cast<std::size_t>(p)];
        for (const auto& [name, t] : taps.items) {
            const std::int64_t d = t.dim(1), hl = t.dim(2), wl = t.dim(3);
            std::int64_t gx = std::llround(static_cast<double>(u) * static_cast<double>(wl) /
                                           static_cast<double>(w0));
            std::int64_t gy = std::llround(static_cast<double>(v) * static_cast<double>(hl) /
                                           static_cast<double>(h0));
            gx = std::min(wl - 1, std::max<std::int64_t>(0, gx));
            gy = std::min(hl - 1, std::max<std::int64_t>(0, gy));
            const S* data = t.data().data();
            double value;
            if (reduce == TrackReduce::channel_max) {
                value = -std::numeric_limits<double>::infinity();
                for (std::int64_t c = 0; c < d; ++c)
                    value = std::max(value, static_cast<double>(
                                                data[(c * hl + gy) * wl + gx]));
            } else {
                const std::int64_t c = static_cast<std::int64_t>(
                    channel_draws[static_cast<std::size_t>(p)] % static_cast<std::uint64_t>(d));
                value = static_cast<double>(data[(c * hl + gy) * wl + gx]);
            }
            out.values[static_cast<std::size_t>(p)].push_back(value);
        }
    }
    return out;
}

// --- PSNR ----------------------------------------------------------------------

// 10 * log10(1 / MSE) over [0,1] pixel values; +inf when the images match.
inline double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height)
        throw ConfigError("psnr: image shapes differ");
    double mse = 0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = (static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i])) / 255.0;
        mse += d * d;
    }
    mse /= static_cast<double>(a.rgb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

// --- Reference style loss -------------------------------------------------------

// Eq.-4-style loss of a stylized output against the style image, measured by
// an independent reference network. Evaluation metric only.
template <typename S>
double reference_style_loss(const ImageBuffer& stylized, const ImageBuffer& style,
                            const Network<S>& reference_net) {
    LossConfig cfg;
    cfg.swag = false;
    const Tensor<S> xs = normalize<S>(stylized);
    const Tensor<S> ss = normalize<S>(style);
    const auto& style_taps = reference_net.spec.style_taps;
    FeatureTaps<S> tx = forward_taps(reference_net, xs, style_taps);
    FeatureTaps<S> ts = forward_taps(reference_net, ss, style_taps);
    // restrict to the style taps
    FeatureTaps<S> fx, fs;
    for (const auto& name : style_taps) {
        fx.items.emplace_back(name, tx.at(name));
        fs.items.emplace_back(name, ts.at(name));
    }
    return static_cast<double>(style_loss(fx, fs, cfg).item());
}

}  // namespace swag
