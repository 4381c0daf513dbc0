#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/image.hpp"
#include "swag/losses.hpp"
#include "swag/net.hpp"
#include "swag/stats.hpp"
#include "swag/tensor.hpp"

namespace swag {

enum class Task { stylize, reconstruct, synthesize };
enum class InitKind { content, noise };
enum class OptimizerKind { adam, lbfgs };

struct AdamParams {
    double lr = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// The smoothed losses live on a much flatter, saturation-prone surface than
// the raw Gram losses; a tenth of the step size keeps Adam stable there.
inline double default_adam_lr(bool swag) { return swag ? 0.005 : 0.05; }

struct LbfgsParams {
    int history = 10;
    int max_line_search = 20;
};

struct OptimConfig {
    Task task = Task::stylize;
    InitKind init = InitKind::content;
    std::uint64_t seed = 0;
    int steps = 300;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamParams adam;
    LbfgsParams lbfgs;
    int snapshot_every = 0;  // 0 = no snapshots
    bool clamp = true;       // project pixels back into the valid range
};

struct LossRow {
    int step = 0;
    double total = 0;
    double content = 0;
    double style = 0;
};

template <typename S>
struct RunRecord {
    std::vector<LossRow> losses;
    double wall_seconds = 0;
    Tensor<S> final_image;  // normalized domain
    std::vector<std::pair<int, Tensor<S>>> snapshots;
    double psnr = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Seeded i.i.d. uniform image in the valid normalized range.
template <typename S>
Tensor<S> noise_image(std::int64_t h, std::int64_t w, std::uint64_t seed) {
    Tensor<S> t({1, 3, h, w});
    std::mt19937_64 rng(seed);
    S* out = t.data().data();
    const std::int64_t hw = h * w;
    for (int c = 0; c < 3; ++c) {
        const double lo = (0.0 - kChannelMean[static_cast<std::size_t>(c)]) /
                          kChannelStd[static_cast<std::size_t>(c)];
        const double hi = (1.0 - kChannelMean[static_cast<std::size_t>(c)]) /
                          kChannelStd[static_cast<std::size_t>(c)];
        for (std::int64_t i = 0; i < hw; ++i) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            out[c * hw + i] = static_cast<S>(lo + u * (hi - lo));
        }
    }
    return t;
}

template <typename S>
void clamp_image(Tensor<S>& img) {
    S* d = img.data().data();
    const std::int64_t hw = img.dim(2) * img.dim(3);
    for (int c = 0; c < 3; ++c) {
        const S lo = static_cast<S>((0.0 - kChannelMean[static_cast<std::size_t>(c)]) /
                                    kChannelStd[static_cast<std::size_t>(c)]);
        const S hi = static_cast<S>((1.0 - kChannelMean[static_cast<std::size_t>(c)]) /
                                    kChannelStd[static_cast<std::size_t>(c)]);
        for (std::int64_t i = 0; i < hw; ++i) {
            S& v = d[c * hw + i];
            v = std::min(hi, std::max(lo, v));
        }
    }
}

// Tracks the divergence rule: total > 1e3 * initial for 50 consecutive steps.
class DivergenceGuard {
public:
    void observe(double total, int step) {
        if (step == 0) initial_ = total;
        if (!std::isfinite(total))
            throw NumericError("non-finite loss at step " + std::to_string(step));
        if (total > 1e3 * initial_) {
            if (++streak_ >= 50)
                throw NumericError("divergence: loss exceeded 1000x the initial value for 50 "
                                   "consecutive steps (step " +
                                   std::to_string(step) + ")");
        } else {
            streak_ = 0;
        }
    }

private:
    double initial_ = 0;
    int streak_ = 0;
};

}  // namespace detail

// Gradient descent on the image pixels against fixed targets; the network is
// a frozen feature extractor throughout.
template <typename S>
RunRecord<S> optimize_image(const Network<S>& net, Tensor<S> img,
                            const ObjectiveTargets<S>& targets, const LossConfig& loss_cfg,
                            const OptimConfig& cfg) {
    if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<std::string> needed;
    {
        std::set<std::string> seen;
        if (targets.has_content && loss_cfg.alpha != 0.0 &&
            seen.insert(targets.content_tap).second)
            needed.push_back(targets.content_tap);
        if (targets.has_style && loss_cfg.beta != 0.0)
            for (const auto& e : targets.style.entries)
                if (seen.insert(e.tap).second) needed.push_back(e.tap);
    }

    RunRecord<S> rec;
    detail::DivergenceGuard guard;

    auto eval_value = [&](const Tensor<S>& x) {
        FeatureTaps<S> taps = forward_taps(net, x, needed);
        return evaluate_objective(taps, targets, loss_cfg);
    };

    // Loss and d(loss)/d(image) at the current pixels.
    auto eval_grad = [&](Tensor<S>& x, ObjectiveValue<S>& value) {
        Tape<S> tape;
        tape.watch(x);
        value = eval_value(x);
        const double total = static_cast<double>(value.total.item());
        std::vector<S> g(x.data().size(), S(0));
        if (value.total.requires_grad()) {
            tape.backward(value.total);
            g = x.grad();
        }
        return std::pair<double, std::vector<S>>(total, std::move(g));
    };

    if (cfg.optimizer == OptimizerKind::adam) {
        std::vector<double> m(img.data().size(), 0.0), v(img.data().size(), 0.0);
        for (int step = 0; step < cfg.steps; ++step) {
            ObjectiveValue<S> value;
            auto [total, g] = eval_grad(img, value);
            guard.observe(total, step);
            rec.losses.push_back({step, total, value.content, value.style});

            const double bc1 = 1.0 - std::pow(cfg.adam.beta1, step + 1);
            const double bc2 = 1.0 - std::pow(cfg.adam.beta2, step + 1);
            S* x = img.data().data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                m[i] = cfg.adam.beta1 * m[i] + (1.0 - cfg.adam.beta1) * gi;
                v[i] = cfg.adam.beta2 * v[i] + (1.0 - cfg.adam.beta2) * gi * gi;
                const double update =
                    cfg.adam.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam.eps);
                x[i] = static_cast<S>(static_cast<double>(x[i]) - update);
            }
            if (cfg.clamp) detail::clamp_image(img);
            if (cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0)
                rec.snapshots.emplace_back(step + 1, img.clone());
        }
    } else {
        // L-BFGS two-loop recursion with Armijo backtracking.
        std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
        std::vector<double> g_prev;
        std::vector<double> x_prev;
        for (int step = 0; step < cfg.steps; ++step) {
            ObjectiveValue<S> value;
            auto [total, g_s] = eval_grad(img, value);
            guard.observe(total, step);
            rec.losses.push_back({step, total, value.content, value.style});

            std::vector<double> g(g_s.begin(), g_s.end());
            if (!g_prev.empty()) {
                std::vector<double> s(g.size()), y(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    s[i] = static_cast<double>(img.data()[i]) - x_prev[i];
                    y[i] = g[i] - g_prev[i];
                }
                double sy = 0;
                for (std::size_t i = 0; i < g.size(); ++i) sy += s[i] * y[i];
                if (sy > 1e-10) {
                    pairs.emplace_back(std::move(s), std::move(y));
                    if (static_cast<int>(pairs.size()) > cfg.lbfgs.history) pairs.pop_front();
                }
            }

            std::vector<double> q(g);
            std::vector<double> alpha(pairs.size());
            for (std::size_t k = pairs.size(); k-- > 0;) {
                const auto& [s, y] = pairs[k];
                double sy = 0, sq = 0;
                for (std::size_t i = 0; i < q.size(); ++i) {
                    sy += s[i] * y[i];
                    sq += s[i] * q[i];
                }
                alpha[k] = sq / sy;
                for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * y[i];
            }
            if (!pairs.empty()) {
                const auto& [s, y] = pairs.back();
                double sy = 0, yy = 0;
                for (std::size_t i = 0; i < q.size(); ++i) {
                    sy += s[i] * y[i];
                    yy += y[i] * y[i];
                }
                const double h0 = sy / std::max(yy, 1e-300);
                for (auto& qi : q) qi *= h0;
            }
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto& [s, y] = pairs[k];
                double sy = 0, yq = 0;
                for (std::size_t i = 0; i < q.size(); ++i) {
                    sy += s[i] * y[i];
                    yq += y[i] * q[i];
                }
                const double beta = yq / sy;
                for (std::size_t i = 0; i < q.size(); ++i)
                    q[i] += (alpha[k] - beta) * s[i];
            }
            // q approximates H*g; direction is -q.
            double gd = 0;
            for (std::size_t i = 0; i < g.size(); ++i) gd -= g[i] * q[i];
            if (gd >= 0) break;  // not a descent direction; give up

            x_prev.assign(img.data().begin(), img.data().end());
            g_prev = std::move(g);

            // Without curvature history the direction is the raw gradient,
            // whose scale is arbitrary; start from a unit-travel step.
            double step_len = 1.0;
            if (pairs.empty()) {
                double l1 = 0;
                for (double qi : q) l1 += std::abs(qi);
                if (l1 > 1.0) step_len = 1.0 / l1;
            }
            bool accepted = false;
            Tensor<S> trial = img.clone();
            for (int ls = 0; ls < cfg.lbfgs.max_line_search; ++ls) {
                S* t = trial.data().data();
                for (std::size_t i = 0; i < q.size(); ++i)
                    t[i] = static_cast<S>(x_prev[i] - step_len * q[i]);
                if (cfg.clamp) detail::clamp_image(trial);
                const double f_trial = static_cast<double>(eval_value(trial).total.item());
                if (std::isfinite(f_trial) && f_trial <= total + 1e-4 * step_len * gd) {
                    accepted = true;
                    break;
                }
                step_len *= 0.5;
            }
            if (!accepted) break;  // no progress possible along this direction
            img.data() = trial.data();
            if (cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0)
                rec.snapshots.emplace_back(step + 1, img.clone());
        }
    }

    rec.final_image = img.clone();
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

// Eq.-style stylization: image initialized from the content (or seeded noise)
// and optimized against the content feature and style Gram targets.
template <typename S>
RunRecord<S> stylize(const Network<S>& net, const Tensor<S>& content, const Tensor<S>& style,
                     LossConfig loss_cfg, OptimConfig cfg) {
    cfg.task = Task::stylize;
    if (content.shape() != style.shape())
        throw ConfigError("stylize: content and style images must share a shape here");

    ObjectiveTargets<S> targets;
    targets.content_tap = net.spec.content_tap;
    if (targets.content_tap.empty()) throw ConfigError("stylize: network has no content tap");
    {
        FeatureTaps<S> tc = forward_taps(net, content, {targets.content_tap});
        Tensor<S> f = tc.at(targets.content_tap);
        targets.content_feature =
            (loss_cfg.swag ? smooth(f, loss_cfg.temperature) : f).clone();
        targets.has_content = true;
    }
    {
        FeatureTaps<S> ts = forward_taps(net, style, net.spec.style_taps);
        FeatureTaps<S> subset;
        for (const auto& name : net.spec.style_taps)
            subset.items.emplace_back(name, ts.at(name));
        targets.style = make_style_targets(subset, loss_cfg);
        targets.has_style = true;
    }

    Tensor<S> img = cfg.init == InitKind::content
                        ? content.clone()
                        : detail::noise_image<S>(content.dim(2), content.dim(3), cfg.seed);
    return optimize_image(net, std::move(img), targets, loss_cfg, cfg);
}

// Feature inversion at one tap from a random start; reports PSNR against the
// original.
template <typename S>
RunRecord<S> reconstruct(const Network<S>& net, const Tensor<S>& content,
                         const std::string& tap, LossConfig loss_cfg, OptimConfig cfg) {
    cfg.task = Task::reconstruct;
    loss_cfg.beta = 0.0;
    if (loss_cfg.alpha == 0.0) loss_cfg.alpha = 1.0;

    ObjectiveTargets<S> targets;
    targets.content_tap = tap;
    {
        FeatureTaps<S> tc = forward_taps(net, content, {tap});
        Tensor<S> f = tc.at(tap);
        targets.content_feature =
            (loss_cfg.swag ? smooth(f, loss_cfg.temperature) : f).clone();
        targets.has_content = true;
    }

    Tensor<S> img = cfg.init == InitKind::content
                        ? content.clone()
                        : detail::noise_image<S>(content.dim(2), content.dim(3), cfg.seed);
    RunRecord<S> rec = optimize_image(net, std::move(img), targets, loss_cfg, cfg);
    rec.psnr = psnr(denormalize(rec.final_image), denormalize(content));
    return rec;
}

// Style-only synthesis from seeded noise (alpha forced to zero).
template <typename S>
RunRecord<S> synthesize_texture(const Network<S>& net, const Tensor<S>& style,
                                LossConfig loss_cfg, OptimConfig cfg) {
    cfg.task = Task::synthesize;
    cfg.init = InitKind::noise;
    loss_cfg.alpha = 0.0;

    ObjectiveTargets<S> targets;
    {
        FeatureTaps<S> ts = forward_taps(net, style, net.spec.style_taps);
        FeatureTaps<S> subset;
        for (const auto& name : net.spec.style_taps)
            subset.items.emplace_back(name, ts.at(name));
        targets.style = make_style_targets(subset, loss_cfg);
        targets.has_style = true;
    }

    Tensor<S> img = detail::noise_image<S>(style.dim(2), style.dim(3), cfg.seed);
    return optimize_image(net, std::move(img), targets, loss_cfg, cfg);
}

}  // namespace swag
