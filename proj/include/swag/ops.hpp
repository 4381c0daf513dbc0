#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "swag/common.hpp"
#include "swag/tensor.hpp"

namespace swag {
namespace detail {

inline constexpr std::int64_t kGemmSerialWork = 1 << 16;

// C(MxN) += A(MxK) * B(KxN), row-major. Rows of C are independent, so the
// parallel split never changes the result.
template <typename S>
void gemm_nn(std::int64_t M, std::int64_t N, std::int64_t K, const S* A, const S* B, S* C) {
    const std::int64_t grain = (M * N * K < kGemmSerialWork) ? M + 1 : 1;
    parallel_for(
        0, M,
        [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const S* a = A + i * K;
                S* c = C + i * N;
                for (std::int64_t k = 0; k < K; ++k) {
                    const S av = a[k];
                    if (av == S(0)) continue;
                    const S* b = B + k * N;
                    for (std::int64_t j = 0; j < N; ++j) c[j] += av * b[j];
                }
            }
        },
        grain);
}

// C(MxN) += A(MxK) * B(NxK)^T
template <typename S>
void gemm_nt(std::int64_t M, std::int64_t N, std::int64_t K, const S* A, const S* B, S* C) {
    const std::int64_t grain = (M * N * K < kGemmSerialWork) ? M + 1 : 1;
    parallel_for(
        0, M,
        [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const S* a = A + i * K;
                S* c = C + i * N;
                for (std::int64_t j = 0; j < N; ++j) {
                    const S* b = B + j * K;
                    S acc = S(0);
                    for (std::int64_t k = 0; k < K; ++k) acc += a[k] * b[k];
                    c[j] += acc;
                }
            }
        },
        grain);
}

// C(MxN) += A(KxM)^T * B(KxN)
template <typename S>
void gemm_tn(std::int64_t M, std::int64_t N, std::int64_t K, const S* A, const S* B, S* C) {
    const std::int64_t grain = (M * N * K < kGemmSerialWork) ? M + 1 : 1;
    parallel_for(
        0, M,
        [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                S* c = C + i * N;
                for (std::int64_t k = 0; k < K; ++k) {
                    const S av = A[k * M + i];
                    if (av == S(0)) continue;
                    const S* b = B + k * N;
                    for (std::int64_t j = 0; j < N; ++j) c[j] += av * b[j];
                }
            }
        },
        grain);
}

struct ConvDims {
    std::int64_t cin, h, w, cout, kh, kw, ho, wo;
    std::int64_t cols() const { return ho * wo; }
    std::int64_t rows() const { return cin * kh * kw; }
};

// Unfolds input (CxHxW) into a (C*kh*kw) x (Ho*Wo) matrix, zero padding.
template <typename S>
void im2col(const S* in, const ConvDims& d, std::int64_t stride, std::int64_t pad, S* col) {
    for (std::int64_t c = 0; c < d.cin; ++c) {
        const S* plane = in + c * d.h * d.w;
        for (std::int64_t ki = 0; ki < d.kh; ++ki) {
            for (std::int64_t kj = 0; kj < d.kw; ++kj) {
                S* row = col + ((c * d.kh + ki) * d.kw + kj) * d.cols();
                for (std::int64_t oy = 0; oy < d.ho; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ki;
                    S* dst = row + oy * d.wo;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(dst, dst + d.wo, S(0));
                        continue;
                    }
                    const S* src = plane + iy * d.w;
                    for (std::int64_t ox = 0; ox < d.wo; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kj;
                        dst[ox] = (ix >= 0 && ix < d.w) ? src[ix] : S(0);
                    }
                }
            }
        }
    }
}

// Scatter-adds a column matrix back onto the input layout. Serial: output
// cells overlap across kernel positions.
template <typename S>
void col2im(const S* col, const ConvDims& d, std::int64_t stride, std::int64_t pad, S* in) {
    for (std::int64_t c = 0; c < d.cin; ++c) {
        S* plane = in + c * d.h * d.w;
        for (std::int64_t ki = 0; ki < d.kh; ++ki) {
            for (std::int64_t kj = 0; kj < d.kw; ++kj) {
                const S* row = col + ((c * d.kh + ki) * d.kw + kj) * d.cols();
                for (std::int64_t oy = 0; oy < d.ho; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= d.h) continue;
                    S* dst = plane + iy * d.w;
                    const S* src = row + oy * d.wo;
                    for (std::int64_t ox = 0; ox < d.wo; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// 2-D convolution, zero padding, batch 1. Implemented as im2col + matmul.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias,
                 std::int64_t stride, std::int64_t padding,
                 const std::string& label = "conv2d") {
    if (input.ndim() != 4 || input.dim(0) != 1)
        throw ConfigError(label + ": input must be 1xCxHxW");
    if (weight.ndim() != 4) throw ConfigError(label + ": weight must be CoutxCinxKhxKw");
    detail::ConvDims d;
    d.cin = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.cout = weight.dim(0);
    d.kh = weight.dim(2);
    d.kw = weight.dim(3);
    if (weight.dim(1) != d.cin)
        throw ConfigError(label + ": weight expects " + std::to_string(weight.dim(1)) +
                          " input channels, got " + std::to_string(d.cin));
    if (stride < 1) throw ConfigError(label + ": stride must be >= 1");
    if (padding < 0) throw ConfigError(label + ": padding must be >= 0");
    if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw)
        throw ConfigError(label + ": spatial dims too small for kernel");
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != d.cout))
        throw ConfigError(label + ": bias must have Cout entries");
    d.ho = (d.h + 2 * padding - d.kh) / stride + 1;
    d.wo = (d.w + 2 * padding - d.kw) / stride + 1;

    Tensor<S> out({1, d.cout, d.ho, d.wo});
    {
        std::vector<S> col(static_cast<std::size_t>(d.rows() * d.cols()));
        detail::im2col(input.data().data(), d, stride, padding, col.data());
        detail::gemm_nn(d.cout, d.cols(), d.rows(), weight.data().data(), col.data(),
                        out.data().data());
    }
    if (bias.defined()) {
        S* o = out.data().data();
        for (std::int64_t c = 0; c < d.cout; ++c) {
            const S b = bias.data()[static_cast<std::size_t>(c)];
            if (b == S(0)) continue;
            for (std::int64_t j = 0; j < d.cols(); ++j) o[c * d.cols() + j] += b;
        }
    }
    if (!out.all_finite()) throw NumericError("non-finite output of " + label);

    auto st = detail::tape_of<S>({&input, &weight, &bias});
    if (st) {
        auto in_n = input.node();
        auto w_n = weight.node();
        auto b_n = bias.defined() ? bias.node() : nullptr;
        detail::record_op<S>(
            st, out, bias.defined() ? std::vector<Tensor<S>>{input, weight, bias}
                                    : std::vector<Tensor<S>>{input, weight},
            "conv2d", [in_n, w_n, b_n, d, stride, padding](detail::TensorNode<S>& self) {
                const S* gy = self.grad.data();
                if (in_n->on_tape) {
                    std::vector<S> colg(static_cast<std::size_t>(d.rows() * d.cols()), S(0));
                    detail::gemm_tn(d.rows(), d.cols(), d.cout, w_n->data.data(), gy,
                                    colg.data());
                    std::vector<S> dx(in_n->data.size(), S(0));
                    detail::col2im(colg.data(), d, stride, padding, dx.data());
                    detail::accumulate(in_n, dx.data());
                }
                if (w_n->on_tape) {
                    std::vector<S> col(static_cast<std::size_t>(d.rows() * d.cols()));
                    detail::im2col(in_n->data.data(), d, stride, padding, col.data());
                    std::vector<S> dw(w_n->data.size(), S(0));
                    detail::gemm_nt(d.cout, d.rows(), d.cols(), gy, col.data(), dw.data());
                    detail::accumulate(w_n, dw.data());
                }
                if (b_n && b_n->on_tape) {
                    std::vector<S> db(b_n->data.size(), S(0));
                    for (std::int64_t c = 0; c < d.cout; ++c) {
                        double acc = 0;
                        for (std::int64_t j = 0; j < d.cols(); ++j)
                            acc += static_cast<double>(gy[c * d.cols() + j]);
                        db[static_cast<std::size_t>(c)] = static_cast<S>(acc);
                    }
                    detail::accumulate(b_n, db.data());
                }
            });
    }
    return out;
}

// 2x2/2 max pooling; gradient goes to the argmax cell, first index on ties.
template <typename S>
Tensor<S> maxpool2d(const Tensor<S>& input, std::int64_t k, std::int64_t stride,
                    const std::string& label = "maxpool2d") {
    if (input.ndim() != 4 || input.dim(0) != 1)
        throw ConfigError(label + ": input must be 1xCxHxW");
    if (k != 2 || stride != 2) throw ConfigError(label + ": only 2x2 stride-2 is supported");
    const std::int64_t c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0 || h < 2 || w < 2)
        throw ConfigError(label + ": spatial dims must be even and >= 2, got " +
                          std::to_string(h) + "x" + std::to_string(w));
    const std::int64_t ho = h / 2, wo = w / 2;
    Tensor<S> out({1, c, ho, wo});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(c * ho * wo));
    const S* in = input.data().data();
    S* o = out.data().data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const S* plane = in + ch * h * w;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
            for (std::int64_t ox = 0; ox < wo; ++ox) {
                const std::int64_t base = (2 * oy) * w + 2 * ox;
                std::int64_t best = base;
                S bv = plane[base];
                const std::int64_t cand[3] = {base + 1, base + w, base + w + 1};
                for (std::int64_t idx : cand) {
                    if (plane[idx] > bv) {
                        bv = plane[idx];
                        best = idx;
                    }
                }
                const std::int64_t oi = (ch * ho + oy) * wo + ox;
                o[oi] = bv;
                (*argmax)[static_cast<std::size_t>(oi)] = ch * h * w + best;
            }
        }
    }

    auto st = detail::tape_of<S>({&input});
    if (st) {
        auto in_n = input.node();
        detail::record_op<S>(st, out, {input}, "maxpool2d",
                             [in_n, argmax](detail::TensorNode<S>& self) {
                                 if (!in_n->on_tape) return;
                                 in_n->ensure_grad();
                                 const S* gy = self.grad.data();
                                 for (std::size_t i = 0; i < argmax->size(); ++i)
                                     in_n->grad[static_cast<std::size_t>((*argmax)[i])] += gy[i];
                             });
    }
    return out;
}

// Evaluation-mode batch normalization with stored running statistics.
template <typename S>
Tensor<S> batchnorm2d_eval(const Tensor<S>& input, const Tensor<S>& gamma,
                           const Tensor<S>& beta, const Tensor<S>& running_mean,
                           const Tensor<S>& running_var, double eps = 1e-5,
                           const std::string& label = "batchnorm2d") {
    if (input.ndim() != 4 || input.dim(0) != 1)
        throw ConfigError(label + ": input must be 1xCxHxW");
    const std::int64_t c = input.dim(1), hw = input.dim(2) * input.dim(3);
    for (const auto* p : {&gamma, &beta, &running_mean, &running_var})
        if (p->numel() != c) throw ConfigError(label + ": per-channel parameter length != C");
    for (S v : running_var.data())
        if (v < S(0)) throw ConfigError(label + ": negative running_var");

    Tensor<S> out({1, c, input.dim(2), input.dim(3)});
    std::vector<S> scale(static_cast<std::size_t>(c));
    std::vector<S> inv_std(static_cast<std::size_t>(c));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const auto i = static_cast<std::size_t>(ch);
        inv_std[i] =
            static_cast<S>(1.0 / std::sqrt(static_cast<double>(running_var.data()[i]) + eps));
        scale[i] = gamma.data()[i] * inv_std[i];
    }
    const S* in = input.data().data();
    S* o = out.data().data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const auto i = static_cast<std::size_t>(ch);
        const S sc = scale[i];
        const S mu = running_mean.data()[i];
        const S bt = beta.data()[i];
        const S* src = in + ch * hw;
        S* dst = o + ch * hw;
        for (std::int64_t j = 0; j < hw; ++j) dst[j] = (src[j] - mu) * sc + bt;
    }
    if (!out.all_finite()) throw NumericError("non-finite output of " + label);

    auto st = detail::tape_of<S>({&input, &gamma, &beta});
    if (st) {
        auto in_n = input.node();
        auto g_n = gamma.node();
        auto b_n = beta.node();
        auto mu_n = running_mean.node();
        auto scale_v = std::make_shared<std::vector<S>>(std::move(scale));
        auto inv_std_v = std::make_shared<std::vector<S>>(std::move(inv_std));
        detail::record_op<S>(
            st, out, {input, gamma, beta}, "batchnorm2d",
            [in_n, g_n, b_n, mu_n, scale_v, inv_std_v, c, hw](detail::TensorNode<S>& self) {
                const S* gy = self.grad.data();
                if (in_n->on_tape) {
                    in_n->ensure_grad();
                    for (std::int64_t ch = 0; ch < c; ++ch) {
                        const S sc = (*scale_v)[static_cast<std::size_t>(ch)];
                        const S* g = gy + ch * hw;
                        S* dst = in_n->grad.data() + ch * hw;
                        for (std::int64_t j = 0; j < hw; ++j) dst[j] += g[j] * sc;
                    }
                }
                if (g_n->on_tape) {
                    g_n->ensure_grad();
                    for (std::int64_t ch = 0; ch < c; ++ch) {
                        const auto i = static_cast<std::size_t>(ch);
                        const double inv = static_cast<double>((*inv_std_v)[i]);
                        const S mu = mu_n->data[i];
                        double acc = 0;
                        const S* g = gy + ch * hw;
                        const S* x = in_n->data.data() + ch * hw;
                        for (std::int64_t j = 0; j < hw; ++j)
                            acc += static_cast<double>(g[j]) * (x[j] - mu) * inv;
                        g_n->grad[i] += static_cast<S>(acc);
                    }
                }
                if (b_n->on_tape) {
                    b_n->ensure_grad();
                    for (std::int64_t ch = 0; ch < c; ++ch) {
                        double acc = 0;
                        const S* g = gy + ch * hw;
                        for (std::int64_t j = 0; j < hw; ++j) acc += static_cast<double>(g[j]);
                        b_n->grad[static_cast<std::size_t>(ch)] += static_cast<S>(acc);
                    }
                }
            });
    }
    return out;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
    Tensor<S> out(x.shape());
    const S* in = x.data().data();
    S* o = out.data().data();
    const std::size_t n = x.data().size();
    for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > S(0) ? in[i] : S(0);

    auto st = detail::tape_of<S>({&x});
    if (st) {
        auto x_n = x.node();
        detail::record_op<S>(st, out, {x}, "relu", [x_n](detail::TensorNode<S>& self) {
            if (!x_n->on_tape) return;
            x_n->ensure_grad();
            const S* gy = self.grad.data();
            const S* xv = x_n->data.data();
            S* gx = x_n->grad.data();
            for (std::size_t i = 0; i < x_n->data.size(); ++i)
                if (xv[i] > S(0)) gx[i] += gy[i];
        });
    }
    return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape()) throw ConfigError("add: shape mismatch");
    Tensor<S> out(a.shape());
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* o = out.data().data();
    for (std::size_t i = 0; i < a.data().size(); ++i) o[i] = pa[i] + pb[i];

    auto st = detail::tape_of<S>({&a, &b});
    if (st) {
        auto a_n = a.node();
        auto b_n = b.node();
        detail::record_op<S>(st, out, {a, b}, "add", [a_n, b_n](detail::TensorNode<S>& self) {
            detail::accumulate(a_n, self.grad.data());
            detail::accumulate(b_n, self.grad.data());
        });
    }
    return out;
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape()) throw ConfigError("sub: shape mismatch");
    Tensor<S> out(a.shape());
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* o = out.data().data();
    for (std::size_t i = 0; i < a.data().size(); ++i) o[i] = pa[i] - pb[i];

    auto st = detail::tape_of<S>({&a, &b});
    if (st) {
        auto a_n = a.node();
        auto b_n = b.node();
        detail::record_op<S>(st, out, {a, b}, "sub", [a_n, b_n](detail::TensorNode<S>& self) {
            detail::accumulate(a_n, self.grad.data());
            if (b_n->on_tape) {
                b_n->ensure_grad();
                const S* gy = self.grad.data();
                for (std::size_t i = 0; i < b_n->data.size(); ++i) b_n->grad[i] -= gy[i];
            }
        });
    }
    return out;
}

template <typename S>
Tensor<S> scale(const Tensor<S>& x, S c) {
    Tensor<S> out(x.shape());
    const S* in = x.data().data();
    S* o = out.data().data();
    for (std::size_t i = 0; i < x.data().size(); ++i) o[i] = c * in[i];

    auto st = detail::tape_of<S>({&x});
    if (st) {
        auto x_n = x.node();
        detail::record_op<S>(st, out, {x}, "scale", [x_n, c](detail::TensorNode<S>& self) {
            if (!x_n->on_tape) return;
            x_n->ensure_grad();
            const S* gy = self.grad.data();
            for (std::size_t i = 0; i < x_n->data.size(); ++i) x_n->grad[i] += c * gy[i];
        });
    }
    return out;
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
    double acc = 0;
    for (S v : x.data()) acc += static_cast<double>(v);
    Tensor<S> out = Tensor<S>::scalar(static_cast<S>(acc));

    auto st = detail::tape_of<S>({&x});
    if (st) {
        auto x_n = x.node();
        detail::record_op<S>(st, out, {x}, "sum", [x_n](detail::TensorNode<S>& self) {
            if (!x_n->on_tape) return;
            x_n->ensure_grad();
            const S g = self.grad[0];
            for (auto& v : x_n->grad) v += g;
        });
    }
    return out;
}

template <typename S>
Tensor<S> sum_sq(const Tensor<S>& x) {
    double acc = 0;
    for (S v : x.data()) acc += static_cast<double>(v) * static_cast<double>(v);
    Tensor<S> out = Tensor<S>::scalar(static_cast<S>(acc));

    auto st = detail::tape_of<S>({&x});
    if (st) {
        auto x_n = x.node();
        detail::record_op<S>(st, out, {x}, "sum_sq", [x_n](detail::TensorNode<S>& self) {
            if (!x_n->on_tape) return;
            x_n->ensure_grad();
            const S g = self.grad[0];
            const S* xv = x_n->data.data();
            for (std::size_t i = 0; i < x_n->data.size(); ++i)
                x_n->grad[i] += S(2) * xv[i] * g;
        });
    }
    return out;
}

// Channel correlation matrix G = F * F^T of a feature map reshaped to DxM.
// Accepts 1xDxHxW (M = H*W) or DxM. Upper triangle is computed once and
// mirrored, so G == G^T holds exactly.
template <typename S>
Tensor<S> gram(const Tensor<S>& f) {
    std::int64_t d, m;
    if (f.ndim() == 4 && f.dim(0) == 1) {
        d = f.dim(1);
        m = f.dim(2) * f.dim(3);
    } else if (f.ndim() == 2) {
        d = f.dim(0);
        m = f.dim(1);
    } else {
        throw ConfigError("gram: expected 1xDxHxW or DxM input");
    }
    Tensor<S> out({d, d});
    const S* fv = f.data().data();
    S* g = out.data().data();
    const std::int64_t grain = (d * d * m < detail::kGemmSerialWork) ? d + 1 : 1;
    detail::parallel_for(
        0, d,
        [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                const S* fi = fv + i * m;
                for (std::int64_t j = i; j < d; ++j) {
                    const S* fj = fv + j * m;
                    double acc = 0;
                    for (std::int64_t k = 0; k < m; ++k)
                        acc += static_cast<double>(fi[k]) * static_cast<double>(fj[k]);
                    g[i * d + j] = static_cast<S>(acc);
                }
            }
        },
        grain);
    for (std::int64_t i = 0; i < d; ++i)
        for (std::int64_t j = 0; j < i; ++j) g[i * d + j] = g[j * d + i];

    auto st = detail::tape_of<S>({&f});
    if (st) {
        auto f_n = f.node();
        detail::record_op<S>(st, out, {f}, "gram", [f_n, d, m](detail::TensorNode<S>& self) {
            if (!f_n->on_tape) return;
            const S* gy = self.grad.data();
            std::vector<S> sym(static_cast<std::size_t>(d * d));
            for (std::int64_t i = 0; i < d; ++i)
                for (std::int64_t j = 0; j < d; ++j)
                    sym[static_cast<std::size_t>(i * d + j)] = gy[i * d + j] + gy[j * d + i];
            std::vector<S> df(f_n->data.size(), S(0));
            detail::gemm_nn(d, m, d, sym.data(), f_n->data.data(), df.data());
            detail::accumulate(f_n, df.data());
        });
    }
    return out;
}

// Softmax over every entry of the tensor jointly, shift-stabilized.
template <typename S>
Tensor<S> softmax_all(const Tensor<S>& x, double temperature = 1.0) {
    if (temperature <= 0) throw ConfigError("softmax_all: temperature must be > 0");
    Tensor<S> out(x.shape());
    const S* in = x.data().data();
    S* o = out.data().data();
    const std::size_t n = x.data().size();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, static_cast<double>(in[i]));
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp((static_cast<double>(in[i]) - mx) / temperature);
        o[i] = static_cast<S>(e);
        z += e;
    }
    const double inv = 1.0 / z;
    for (std::size_t i = 0; i < n; ++i) o[i] = static_cast<S>(static_cast<double>(o[i]) * inv);

    auto st = detail::tape_of<S>({&x});
    if (st) {
        auto x_n = x.node();
        detail::record_op<S>(
            st, out, {x}, "softmax_all", [x_n, temperature](detail::TensorNode<S>& self) {
                if (!x_n->on_tape) return;
                x_n->ensure_grad();
                const S* gy = self.grad.data();
                const S* p = self.data.data();
                double dot = 0;
                for (std::size_t i = 0; i < self.data.size(); ++i)
                    dot += static_cast<double>(gy[i]) * static_cast<double>(p[i]);
                const double invt = 1.0 / temperature;
                for (std::size_t i = 0; i < self.data.size(); ++i)
                    x_n->grad[i] += static_cast<S>(static_cast<double>(p[i]) *
                                                   (static_cast<double>(gy[i]) - dot) * invt);
            });
    }
    return out;
}

}  // namespace swag
