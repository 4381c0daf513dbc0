#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swag/common.hpp"
#include "swag/ops.hpp"
#include "swag/tensor.hpp"

namespace swag {

inline constexpr double kBatchNormEps = 1e-5;

enum class LayerKind { conv, bn, relu, maxpool, block_begin, block_end };
enum class ReluPlacement { post_add, pre_add };

// One entry of a declarative architecture description. Residual blocks are
// delimited by block_begin/block_end; the layers in between form the body.
// block_begin carries the skip wiring (projection, stride, relu placement).
struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    std::int64_t channels_out = 0;  // base (unscaled) count; conv and block_begin
    std::int64_t kernel = 0;
    std::int64_t stride = 1;
    std::int64_t padding = 0;
    bool residual = false;
    bool skip_projection = false;
    ReluPlacement relu_placement = ReluPlacement::post_add;
    std::string tap;
};

struct ArchSpec {
    std::string name;
    std::vector<LayerSpec> layers;
    double width_scale = 1.0;  // 1.0 = full published widths
    int widen_factor = 1;
    std::vector<std::string> style_taps;  // ordered shallow -> deep
    std::string content_tap;

    std::int64_t scaled_channels(std::int64_t base) const {
        const double v = width_scale * widen_factor * static_cast<double>(base);
        return std::max<std::int64_t>(1, std::llround(v));
    }

    std::vector<std::string> declared_taps() const {
        std::vector<std::string> taps;
        for (const auto& l : layers)
            if (!l.tap.empty()) taps.push_back(l.tap);
        return taps;
    }
};

inline void validate_arch(const ArchSpec& spec) {
    if (spec.layers.empty()) throw ConfigError("architecture has no layers");
    if (spec.width_scale <= 0 || spec.width_scale > 1.0)
        throw ConfigError("width_scale must be in (0, 1]");
    if (spec.widen_factor < 1) throw ConfigError("widen_factor must be >= 1");
    std::set<std::string> taps;
    int depth = 0;
    for (const auto& l : spec.layers) {
        if (!l.tap.empty() && !taps.insert(l.tap).second)
            throw ConfigError("duplicate tap name: " + l.tap);
        if (l.kind == LayerKind::conv) {
            if (l.channels_out < 1) throw ConfigError("conv needs channels_out >= 1");
            if (l.kernel != 1 && l.kernel != 3 && l.kernel != 7)
                throw ConfigError("conv kernel must be 1, 3 or 7");
        }
        if (l.kind == LayerKind::block_begin) {
            if (++depth > 1) throw ConfigError("nested residual blocks are not supported");
            if (l.channels_out < 1) throw ConfigError("block needs channels_out >= 1");
        }
        if (l.kind == LayerKind::block_end && --depth < 0)
            throw ConfigError("block_end without block_begin");
    }
    if (depth != 0) throw ConfigError("unterminated residual block");
    for (const auto& t : spec.style_taps)
        if (!taps.count(t)) throw ConfigError("style tap not declared: " + t);
    if (!spec.content_tap.empty() && !taps.count(spec.content_tap))
        throw ConfigError("content tap not declared: " + spec.content_tap);
}

// --- JSON schema --------------------------------------------------------------

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::bn: return "bn";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::block_begin: return "block_begin";
        case LayerKind::block_end: return "block_end";
    }
    return "?";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "bn") return LayerKind::bn;
    if (s == "relu") return LayerKind::relu;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "block_begin") return LayerKind::block_begin;
    if (s == "block_end") return LayerKind::block_end;
    throw ConfigError("unknown layer kind: " + s);
}

inline nlohmann::json arch_to_json(const ArchSpec& spec) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["width_scale"] = spec.width_scale;
    j["widen_factor"] = spec.widen_factor;
    j["style_taps"] = spec.style_taps;
    j["content_tap"] = spec.content_tap;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        nlohmann::json e;
        e["kind"] = to_string(l.kind);
        if (l.kind == LayerKind::conv) {
            e["channels_out"] = l.channels_out;
            e["kernel"] = l.kernel;
            e["stride"] = l.stride;
            e["padding"] = l.padding;
        } else if (l.kind == LayerKind::block_begin) {
            e["channels_out"] = l.channels_out;
            e["stride"] = l.stride;
            e["residual"] = l.residual;
            e["skip_projection"] = l.skip_projection;
            e["relu_placement"] =
                l.relu_placement == ReluPlacement::post_add ? "post_add" : "pre_add";
        }
        if (!l.tap.empty()) e["tap"] = l.tap;
        j["layers"].push_back(e);
    }
    return j;
}

inline ArchSpec arch_from_json(const nlohmann::json& j) {
    ArchSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.width_scale = j.value("width_scale", 1.0);
    spec.widen_factor = j.value("widen_factor", 1);
    spec.style_taps = j.value("style_taps", std::vector<std::string>{});
    spec.content_tap = j.value("content_tap", std::string{});
    for (const auto& e : j.at("layers")) {
        LayerSpec l;
        l.kind = layer_kind_from_string(e.at("kind").get<std::string>());
        l.channels_out = e.value("channels_out", std::int64_t{0});
        l.kernel = e.value("kernel", std::int64_t{0});
        l.stride = e.value("stride", std::int64_t{1});
        l.padding = e.value("padding", std::int64_t{0});
        l.residual = e.value("residual", false);
        l.skip_projection = e.value("skip_projection", false);
        const std::string rp = e.value("relu_placement", std::string("post_add"));
        if (rp != "post_add" && rp != "pre_add")
            throw ConfigError("unknown relu_placement: " + rp);
        l.relu_placement =
            rp == "post_add" ? ReluPlacement::post_add : ReluPlacement::pre_add;
        l.tap = e.value("tap", std::string{});
        spec.layers.push_back(std::move(l));
    }
    validate_arch(spec);
    return spec;
}

inline ArchSpec load_arch(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid architecture JSON: ") + e.what(), 0);
    }
    return arch_from_json(j);
}

inline void save_arch(const std::string& path, const ArchSpec& spec) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << arch_to_json(spec).dump(2) << "\n";
}

// --- Presets ------------------------------------------------------------------

namespace detail {

inline LayerSpec conv_layer(std::int64_t ch, std::int64_t k, std::int64_t stride,
                            std::int64_t pad) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.channels_out = ch;
    l.kernel = k;
    l.stride = stride;
    l.padding = pad;
    return l;
}

inline LayerSpec plain(LayerKind kind, std::string tap = "") {
    LayerSpec l;
    l.kind = kind;
    l.tap = std::move(tap);
    return l;
}

// Bottleneck: 1x1 reduce, 3x3 (carries the block stride), 1x1 expand.
inline void push_bottleneck(std::vector<LayerSpec>& v, std::int64_t planes,
                            std::int64_t stride, bool residual, bool projection,
                            ReluPlacement rp, const std::string& tap) {
    LayerSpec begin;
    begin.kind = LayerKind::block_begin;
    begin.channels_out = planes * 4;
    begin.stride = stride;
    begin.residual = residual;
    begin.skip_projection = projection;
    begin.relu_placement = rp;
    v.push_back(begin);
    v.push_back(conv_layer(planes, 1, 1, 0));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::relu));
    v.push_back(conv_layer(planes, 3, stride, 1));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::relu));
    v.push_back(conv_layer(planes * 4, 1, 1, 0));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::block_end, tap));
}

// Basicblock: two 3x3 convolutions, no expansion.
inline void push_basicblock(std::vector<LayerSpec>& v, std::int64_t planes, bool residual,
                            bool projection, const std::string& tap) {
    LayerSpec begin;
    begin.kind = LayerKind::block_begin;
    begin.channels_out = planes;
    begin.stride = 1;
    begin.residual = residual;
    begin.skip_projection = projection;
    begin.relu_placement = ReluPlacement::post_add;
    v.push_back(begin);
    v.push_back(conv_layer(planes, 3, 1, 1));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::relu));
    v.push_back(conv_layer(planes, 3, 1, 1));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::block_end, tap));
}

inline ArchSpec resnet50_family(const std::string& name, bool residual, int widen_factor,
                                ReluPlacement rp) {
    ArchSpec spec;
    spec.name = name;
    spec.width_scale = 0.25;
    spec.widen_factor = widen_factor;
    auto& v = spec.layers;
    v.push_back(conv_layer(64, 7, 2, 3));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::relu));
    v.push_back(plain(LayerKind::maxpool, "conv1_2"));
    const std::int64_t planes[4] = {64, 128, 256, 512};
    const int blocks[4] = {3, 4, 6, 3};
    const std::int64_t strides[4] = {1, 2, 2, 2};
    for (int s = 0; s < 4; ++s) {
        for (int b = 0; b < blocks[s]; ++b) {
            const bool first = b == 0;
            const std::string tap =
                b + 1 == blocks[s]
                    ? "conv" + std::to_string(s + 2) + "_" + std::to_string(blocks[s])
                    : "";
            push_bottleneck(v, planes[s], first ? strides[s] : 1, residual, first, rp, tap);
        }
    }
    spec.style_taps = {"conv1_2", "conv2_3", "conv3_4", "conv4_6", "conv5_3"};
    spec.content_tap = "conv4_6";
    return spec;
}

inline ArchSpec pseudo_family(const std::string& name, bool residual) {
    ArchSpec spec;
    spec.name = name;
    spec.width_scale = 0.25;
    auto& v = spec.layers;
    v.push_back(conv_layer(64, 3, 1, 1));
    v.push_back(plain(LayerKind::bn));
    v.push_back(plain(LayerKind::relu));
    v.push_back(plain(LayerKind::maxpool, "conv1_2"));
    const std::int64_t planes[4] = {64, 128, 256, 512};
    const int blocks[4] = {3, 4, 6, 3};
    for (int s = 0; s < 4; ++s) {
        if (s > 0) v.push_back(plain(LayerKind::maxpool));
        for (int b = 0; b < blocks[s]; ++b) {
            // Projection rectifies the channel change at each stage entry.
            const bool projection = b == 0 && s > 0;
            const std::string tap =
                b + 1 == blocks[s]
                    ? "conv" + std::to_string(s + 2) + "_" + std::to_string(blocks[s])
                    : "";
            push_basicblock(v, planes[s], residual, projection, tap);
        }
    }
    spec.style_taps = {"conv1_2", "conv2_3", "conv3_4", "conv4_6", "conv5_3"};
    spec.content_tap = "conv4_6";
    return spec;
}

}  // namespace detail

namespace presets {

inline ArchSpec vgg19() {
    ArchSpec spec;
    spec.name = "vgg19";
    spec.width_scale = 0.25;
    auto& v = spec.layers;
    const std::int64_t stage_channels[5] = {64, 128, 256, 512, 512};
    const int stage_convs[5] = {2, 2, 4, 4, 4};
    for (int s = 0; s < 5; ++s) {
        if (s > 0) v.push_back(detail::plain(LayerKind::maxpool));
        for (int c = 0; c < stage_convs[s]; ++c) {
            v.push_back(detail::conv_layer(stage_channels[s], 3, 1, 1));
            std::string tap;
            if (c == 0) tap = "conv" + std::to_string(s + 1) + "_1";
            if (s == 3 && c == 1) tap = "conv4_2";
            if (s == 2 && c == 3) tap = "conv3_4";
            v.push_back(detail::plain(LayerKind::relu, tap));
        }
    }
    spec.style_taps = {"conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"};
    spec.content_tap = "conv4_2";
    return spec;
}

inline ArchSpec resnet50() {
    return detail::resnet50_family("resnet50", true, 1, ReluPlacement::post_add);
}

inline ArchSpec noresnet() {
    return detail::resnet50_family("noresnet", false, 1, ReluPlacement::post_add);
}

inline ArchSpec pseudo_vgg() { return detail::pseudo_family("pseudo_vgg", false); }

inline ArchSpec pseudo_resvgg() { return detail::pseudo_family("pseudo_resvgg", true); }

inline ArchSpec wrn() {
    return detail::resnet50_family("wrn", true, 2, ReluPlacement::post_add);
}

inline ArchSpec resnet50_preact() {
    return detail::resnet50_family("resnet50_preact", true, 1, ReluPlacement::pre_add);
}

}  // namespace presets

inline ArchSpec preset(const std::string& name) {
    if (name == "vgg19") return presets::vgg19();
    if (name == "resnet50") return presets::resnet50();
    if (name == "noresnet") return presets::noresnet();
    if (name == "pseudo_vgg") return presets::pseudo_vgg();
    if (name == "pseudo_resvgg") return presets::pseudo_resvgg();
    if (name == "wrn") return presets::wrn();
    if (name == "resnet50_preact") return presets::resnet50_preact();
    throw ConfigError("unknown architecture: " + name);
}

inline std::vector<std::string> preset_names() {
    return {"vgg19",         "resnet50", "noresnet",       "pseudo_vgg",
            "pseudo_resvgg", "wrn",      "resnet50_preact"};
}

// --- Network ------------------------------------------------------------------

enum class Provenance { random, imported };

template <typename S>
struct Network {
    ArchSpec spec;
    std::map<std::string, Tensor<S>> params;
    std::uint64_t seed = 0;
    Provenance provenance = Provenance::random;

    const Tensor<S>& param(const std::string& name) const {
        auto it = params.find(name);
        if (it == params.end()) throw ConfigError("missing parameter: " + name);
        return it->second;
    }
};

namespace detail {

inline std::string layer_id(std::size_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "layer%03zu", idx);
    return buf;
}

// Deterministic Box-Muller sampler; does not depend on the standard
// library's distribution implementations.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0;
};

template <typename S>
void add_conv_params(std::map<std::string, Tensor<S>>& params, const std::string& base,
                     std::int64_t cout, std::int64_t cin, std::int64_t k,
                     NormalSampler& rng) {
    Tensor<S> w({cout, cin, k, k});
    const double std_dev = std::sqrt(2.0 / static_cast<double>(cout * k * k));
    for (auto& v : w.data()) v = static_cast<S>(rng.next() * std_dev);
    params.emplace(base + ".weight", std::move(w));
    params.emplace(base + ".bias", Tensor<S>({cout}));
}

template <typename S>
void add_bn_params(std::map<std::string, Tensor<S>>& params, const std::string& base,
                   std::int64_t c) {
    params.emplace(base + ".gamma", Tensor<S>::full({c}, S(1)));
    params.emplace(base + ".beta", Tensor<S>({c}));
    params.emplace(base + ".running_mean", Tensor<S>({c}));
    params.emplace(base + ".running_var", Tensor<S>::full({c}, S(1)));
}

}  // namespace detail

// Kaiming-normal (fan-out) conv weights, zero biases, identity batch norm.
// The parameter stream is drawn in layer order from a single seeded RNG, so
// equal (spec, seed) pairs rebuild bit-identical networks.
template <typename S>
Network<S> init_random(const ArchSpec& spec, std::uint64_t seed) {
    validate_arch(spec);
    Network<S> net;
    net.spec = spec;
    net.seed = seed;
    net.provenance = Provenance::random;
    detail::NormalSampler rng(seed);
    std::int64_t cur = 3;
    std::int64_t block_entry = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const std::string id = detail::layer_id(i);
        switch (l.kind) {
            case LayerKind::conv: {
                const std::int64_t cout = spec.scaled_channels(l.channels_out);
                detail::add_conv_params(net.params, id, cout, cur, l.kernel, rng);
                cur = cout;
                break;
            }
            case LayerKind::bn:
                detail::add_bn_params(net.params, id, cur);
                break;
            case LayerKind::block_begin: {
                block_entry = cur;
                if (l.skip_projection) {
                    const std::int64_t cout = spec.scaled_channels(l.channels_out);
                    detail::add_conv_params(net.params, id + ".proj", cout, block_entry, 1,
                                            rng);
                    detail::add_bn_params(net.params, id + ".proj.bn", cout);
                }
                break;
            }
            default: break;
        }
    }
    return net;
}

// Ordered tap-name -> activation map produced by a forward pass.
template <typename S>
struct FeatureTaps {
    std::vector<std::pair<std::string, Tensor<S>>> items;

    const Tensor<S>& at(const std::string& name) const {
        for (const auto& [n, t] : items)
            if (n == name) return t;
        throw ConfigError("missing tap: " + name);
    }
    bool contains(const std::string& name) const {
        for (const auto& [n, t] : items)
            if (n == name) return true;
        return false;
    }
    std::size_t size() const { return items.size(); }
};

// Runs the network on a 1x3xHxW image and collects activations at declared
// taps. When `needed` is non-empty, evaluation stops after the deepest
// requested tap. Joins the image's tape when it has one.
template <typename S>
FeatureTaps<S> forward_taps(const Network<S>& net, const Tensor<S>& x,
                            const std::vector<std::string>& needed = {}) {
    if (x.ndim() != 4 || x.dim(0) != 1 || x.dim(1) != 3)
        throw ConfigError("forward_taps: input must be a 1x3xHxW image tensor");
    const auto& layers = net.spec.layers;

    std::size_t stop = layers.size();
    if (!needed.empty()) {
        std::set<std::string> want(needed.begin(), needed.end());
        stop = 0;
        std::size_t found = 0;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (!layers[i].tap.empty() && want.count(layers[i].tap)) {
                stop = i + 1;
                ++found;
            }
        }
        if (found != want.size()) throw ConfigError("forward_taps: unknown tap requested");
    }

    // Pre-ReLU stream only matters when some block adds onto pre-activation
    // values.
    bool track_preact = false;
    for (const auto& l : layers)
        if (l.kind == LayerKind::block_begin &&
            l.relu_placement == ReluPlacement::pre_add && l.residual)
            track_preact = true;

    struct BlockCtx {
        Tensor<S> act_in, preact_in;
        const LayerSpec* begin;
        std::string id;
    };

    FeatureTaps<S> taps;
    Tensor<S> act = x;
    Tensor<S> preact = x;
    std::optional<BlockCtx> block;

    for (std::size_t i = 0; i < stop; ++i) {
        const auto& l = layers[i];
        const std::string id = detail::layer_id(i);
        switch (l.kind) {
            case LayerKind::conv:
                act = conv2d(act, net.param(id + ".weight"), net.param(id + ".bias"),
                             l.stride, l.padding, id + " (conv)");
                preact = act;
                break;
            case LayerKind::bn:
                act = batchnorm2d_eval(act, net.param(id + ".gamma"), net.param(id + ".beta"),
                                       net.param(id + ".running_mean"),
                                       net.param(id + ".running_var"), kBatchNormEps,
                                       id + " (bn)");
                preact = act;
                break;
            case LayerKind::relu:
                preact = act;  // the value feeding this ReLU
                act = relu(act);
                break;
            case LayerKind::maxpool: {
                const bool same = preact.node() == act.node();
                if (track_preact && !same)
                    preact = maxpool2d(preact, 2, 2, id + " (maxpool)");
                act = maxpool2d(act, 2, 2, id + " (maxpool)");
                if (!track_preact || same) preact = act;
                break;
            }
            case LayerKind::block_begin:
                if (block) throw ConfigError("nested residual blocks are not supported");
                block = BlockCtx{act, preact, &l, id};
                break;
            case LayerKind::block_end: {
                if (!block) throw ConfigError("block_end without block_begin");
                Tensor<S> body = act;
                Tensor<S> sum = body;
                if (block->begin->residual) {
                    Tensor<S> skip =
                        block->begin->relu_placement == ReluPlacement::post_add
                            ? block->act_in
                            : block->preact_in;
                    if (block->begin->skip_projection) {
                        skip = conv2d(skip, net.param(block->id + ".proj.weight"),
                                      net.param(block->id + ".proj.bias"),
                                      block->begin->stride, 0, block->id + " (proj)");
                        skip = batchnorm2d_eval(
                            skip, net.param(block->id + ".proj.bn.gamma"),
                            net.param(block->id + ".proj.bn.beta"),
                            net.param(block->id + ".proj.bn.running_mean"),
                            net.param(block->id + ".proj.bn.running_var"), kBatchNormEps,
                            block->id + " (proj bn)");
                    }
                    if (skip.shape() != body.shape())
                        throw ConfigError(block->id +
                                          ": residual add shape mismatch (set "
                                          "skip_projection on the block)");
                    sum = add(body, skip);
                }
                preact = sum;
                act = relu(sum);
                block.reset();
                break;
            }
        }
        if (!l.tap.empty()) {
            detail::check_finite(act, "tap " + l.tap);
            taps.items.emplace_back(l.tap, act);
        }
    }
    return taps;
}

}  // namespace swag
