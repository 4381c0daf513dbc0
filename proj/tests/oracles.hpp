// Independent reference implementations used as test oracles. These stay
// deliberately naive (plain loops, no shared code with the library kernels).
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "swag/tensor.hpp"

namespace oracle {

// Direct six-loop convolution, zero padding, batch 1.
template <typename S>
swag::Tensor<S> conv2d(const swag::Tensor<S>& input, const swag::Tensor<S>& weight,
                       const swag::Tensor<S>& bias, std::int64_t stride,
                       std::int64_t pad) {
    const std::int64_t cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const std::int64_t ho = (h + 2 * pad - kh) / stride + 1;
    const std::int64_t wo = (w + 2 * pad - kw) / stride + 1;
    swag::Tensor<S> out({1, cout, ho, wo});
    for (std::int64_t oc = 0; oc < cout; ++oc)
        for (std::int64_t oy = 0; oy < ho; ++oy)
            for (std::int64_t ox = 0; ox < wo; ++ox) {
                double acc = bias.defined()
                                 ? static_cast<double>(bias.data()[(std::size_t)oc])
                                 : 0.0;
                for (std::int64_t ic = 0; ic < cin; ++ic)
                    for (std::int64_t ky = 0; ky < kh; ++ky)
                        for (std::int64_t kx = 0; kx < kw; ++kx) {
                            const std::int64_t iy = oy * stride - pad + ky;
                            const std::int64_t ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(
                                       input.data()[(std::size_t)((ic * h + iy) * w + ix)]) *
                                   static_cast<double>(
                                       weight.data()[(std::size_t)(((oc * cin + ic) * kh + ky) *
                                                                   kw + kx)]);
                        }
                out.data()[(std::size_t)((oc * ho + oy) * wo + ox)] = static_cast<S>(acc);
            }
    return out;
}

// Window-scan 2x2/2 max pooling.
template <typename S>
swag::Tensor<S> maxpool2d(const swag::Tensor<S>& input) {
    const std::int64_t c = input.dim(1), h = input.dim(2), w = input.dim(3);
    swag::Tensor<S> out({1, c, h / 2, w / 2});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t oy = 0; oy < h / 2; ++oy)
            for (std::int64_t ox = 0; ox < w / 2; ++ox) {
                S best = input.data()[(std::size_t)((ch * h + 2 * oy) * w + 2 * ox)];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        best = std::max(best,
                                        input.data()[(std::size_t)((ch * h + 2 * oy + dy) * w +
                                                                   2 * ox + dx)]);
                out.data()[(std::size_t)((ch * (h / 2) + oy) * (w / 2) + ox)] = best;
            }
    return out;
}

// Per-element evaluation-mode batch norm.
template <typename S>
swag::Tensor<S> batchnorm(const swag::Tensor<S>& input, const swag::Tensor<S>& gamma,
                          const swag::Tensor<S>& beta, const swag::Tensor<S>& mean,
                          const swag::Tensor<S>& var, double eps) {
    const std::int64_t c = input.dim(1), hw = input.dim(2) * input.dim(3);
    swag::Tensor<S> out(input.shape());
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < hw; ++i) {
            const auto k = (std::size_t)(ch * hw + i);
            const auto ci = (std::size_t)ch;
            out.data()[k] = static_cast<S>(
                static_cast<double>(gamma.data()[ci]) *
                    (static_cast<double>(input.data()[k]) -
                     static_cast<double>(mean.data()[ci])) /
                    std::sqrt(static_cast<double>(var.data()[ci]) + eps) +
                static_cast<double>(beta.data()[ci]));
        }
    return out;
}

// Double-loop Gram matrix over a DxM view.
template <typename S>
std::vector<double> gram(const std::vector<S>& f, std::int64_t d, std::int64_t m) {
    std::vector<double> g((std::size_t)(d * d), 0.0);
    for (std::int64_t i = 0; i < d; ++i)
        for (std::int64_t j = 0; j < d; ++j) {
            double acc = 0;
            for (std::int64_t k = 0; k < m; ++k)
                acc += static_cast<double>(f[(std::size_t)(i * m + k)]) *
                       static_cast<double>(f[(std::size_t)(j * m + k)]);
            g[(std::size_t)(i * d + j)] = acc;
        }
    return g;
}

// Entropy of the softmax distribution straight from the definition.
template <typename S>
double entropy(const std::vector<S>& v) {
    if (v.size() <= 1) return 1.0;
    double mx = -1e300;
    for (S x : v) mx = std::max(mx, static_cast<double>(x));
    double z = 0;
    for (S x : v) z += std::exp(static_cast<double>(x) - mx);
    double h = 0;
    for (S x : v) {
        const double p = std::exp(static_cast<double>(x) - mx) / z;
        if (p > 0) h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(v.size()));
}

// Central-difference gradient check at `n_coords` random coordinates.
// `f` evaluates the scalar loss at the given flat input; `analytic` is the
// tape gradient. Returns the worst relative error observed.
template <typename S>
double gradcheck(const std::function<double(const std::vector<S>&)>& f,
                 const std::vector<S>& x, const std::vector<S>& analytic, int n_coords,
                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double h_scale = std::is_same_v<S, float> ? 1e-3 : 1e-6;
    double worst = 0;
    for (int t = 0; t < n_coords; ++t) {
        const std::size_t i = rng() % x.size();
        const double h = h_scale * std::max(1.0, std::abs(static_cast<double>(x[i])));
        std::vector<S> xp = x, xm = x;
        xp[i] = static_cast<S>(static_cast<double>(xp[i]) + h);
        xm[i] = static_cast<S>(static_cast<double>(xm[i]) - h);
        const double fd = (f(xp) - f(xm)) / (2 * h);
        const double a = static_cast<double>(analytic[i]);
        const double rel = std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1.0});
        worst = std::max(worst, rel);
    }
    return worst;
}

inline std::vector<float> randn_f(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) {
        const double u1 = (double)(rng() >> 11) * 0x1.0p-53;
        const double u2 = (double)(rng() >> 11) * 0x1.0p-53;
        x = (float)(scale * std::sqrt(-2 * std::log(1 - u1)) * std::cos(6.283185307179586 * u2));
    }
    return v;
}

inline std::vector<double> randn_d(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) {
        const double u1 = (double)(rng() >> 11) * 0x1.0p-53;
        const double u2 = (double)(rng() >> 11) * 0x1.0p-53;
        x = scale * std::sqrt(-2 * std::log(1 - u1)) * std::cos(6.283185307179586 * u2);
    }
    return v;
}

template <typename S>
std::vector<S> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    if constexpr (std::is_same_v<S, float>)
        return randn_f(n, seed, scale);
    else
        return randn_d(n, seed, scale);
}

}  // namespace oracle
