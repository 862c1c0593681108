#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dcys/blas.hpp"
#include "dcys/errors.hpp"
#include "dcys/tensor.hpp"

namespace dcys {

// ---------------------------------------------------------------------------
// Convolution. Bias-free; batch normalization supplies the shift.
// Fast path is an im2col patch gather followed by one GEMM per sample; the
// naive nested-loop reference lives in the test suite as the oracle.
// ---------------------------------------------------------------------------

inline int conv_out_extent(int in, int kernel, int stride, int pad, const char* axis) {
    const int padded = in + 2 * pad;
    if (padded < kernel) {
        throw ShapeError(std::string("conv2d: padded ") + axis + " extent " + std::to_string(padded) +
                         " smaller than kernel " + std::to_string(kernel));
    }
    if ((padded - kernel) % stride != 0) {
        throw ShapeError(std::string("conv2d: (") + axis + "+2*pad-kernel) = " +
                         std::to_string(padded - kernel) + " not divisible by stride " +
                         std::to_string(stride));
    }
    return (padded - kernel) / stride + 1;
}

template <class T>
void conv2d_check(const TensorT<T>& input, const TensorT<T>& weight, int stride, int pad) {
    if (input.rank() != 4 || weight.rank() != 4) {
        throw ShapeError("conv2d: expected 4-d input and weight, got " + input.shape_str() + " and " +
                         weight.shape_str());
    }
    if (input.dim(1) != weight.dim(1)) {
        throw ShapeError("conv2d: input channels " + std::to_string(input.dim(1)) +
                         " != weight input channels " + std::to_string(weight.dim(1)));
    }
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
    if (pad < 0) throw ShapeError("conv2d: negative padding");
}

// cols is (C*Kh*Kw) x (OH*OW) for one sample, row-major.
template <class T>
void im2col(const TensorT<T>& input, int n, int kh, int kw, int stride, int pad, int oh, int ow,
            T* cols) {
    const int c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    std::size_t row = 0;
    for (int c = 0; c < c_in; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
            for (int dx = 0; dx < kw; ++dx, ++row) {
                T* dst = cols + row * static_cast<std::size_t>(oh) * ow;
                for (int y = 0; y < oh; ++y) {
                    const int sy = y * stride + dy - pad;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst, dst + ow, T(0));
                        dst += ow;
                        continue;
                    }
                    for (int x = 0; x < ow; ++x) {
                        const int sx = x * stride + dx - pad;
                        *dst++ = (sx < 0 || sx >= w) ? T(0) : input.at4(n, c, sy, sx);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_accum(const T* cols, int n, int c_in, int h, int w, int kh, int kw, int stride, int pad,
                  int oh, int ow, TensorT<T>& grad_input) {
    std::size_t row = 0;
    for (int c = 0; c < c_in; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
            for (int dx = 0; dx < kw; ++dx, ++row) {
                const T* src = cols + row * static_cast<std::size_t>(oh) * ow;
                for (int y = 0; y < oh; ++y) {
                    const int sy = y * stride + dy - pad;
                    if (sy >= 0 && sy < h) {
                        for (int x = 0; x < ow; ++x) {
                            const int sx = x * stride + dx - pad;
                            if (sx >= 0 && sx < w) grad_input.at4(n, c, sy, sx) += src[x];
                        }
                    }
                    src += ow;
                }
            }
        }
    }
}

template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weight, int stride, int pad) {
    conv2d_check(input, weight, stride, pad);
    const int n_batch = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const int oh = conv_out_extent(h, kh, stride, pad, "H");
    const int ow = conv_out_extent(w, kw, stride, pad, "W");

    TensorT<T> out({n_batch, c_out, oh, ow});
    const int k_dim = c_in * kh * kw;
    const int p_dim = oh * ow;
    std::vector<T> cols(static_cast<std::size_t>(k_dim) * p_dim);

    for (int n = 0; n < n_batch; ++n) {
        im2col(input, n, kh, kw, stride, pad, oh, ow, cols.data());
        T* out_n = out.data.data() + static_cast<std::size_t>(n) * c_out * p_dim;
        gemm(false, false, c_out, p_dim, k_dim, T(1), weight.data.data(), k_dim, cols.data(), p_dim,
             T(0), out_n, p_dim);
    }
    return out;
}

// grad_input / grad_weight are accumulated into (callers zero them first when
// they want fresh gradients).
template <class T>
void conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& input, const TensorT<T>& weight,
                     int stride, int pad, TensorT<T>& grad_input, TensorT<T>& grad_weight) {
    conv2d_check(input, weight, stride, pad);
    const int n_batch = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const int oh = conv_out_extent(h, kh, stride, pad, "H");
    const int ow = conv_out_extent(w, kw, stride, pad, "W");
    if (grad_out.shape != std::vector<int>{n_batch, c_out, oh, ow}) {
        throw ShapeError("conv2d_backward: grad_out shape " + grad_out.shape_str() +
                         " does not match forward output");
    }
    if (grad_input.shape != input.shape) grad_input = TensorT<T>(input.shape);
    if (grad_weight.shape != weight.shape) grad_weight = TensorT<T>(weight.shape);

    const int k_dim = c_in * kh * kw;
    const int p_dim = oh * ow;
    std::vector<T> cols(static_cast<std::size_t>(k_dim) * p_dim);
    std::vector<T> grad_cols(cols.size());

    for (int n = 0; n < n_batch; ++n) {
        im2col(input, n, kh, kw, stride, pad, oh, ow, cols.data());
        const T* gout_n = grad_out.data.data() + static_cast<std::size_t>(n) * c_out * p_dim;
        // dW += gout_n (O x P) * cols^T (P x K)
        gemm(false, true, c_out, k_dim, p_dim, T(1), gout_n, p_dim, cols.data(), p_dim, T(1),
             grad_weight.data.data(), k_dim);
        // dcols = W^T (K x O) * gout_n (O x P)
        gemm(true, false, k_dim, p_dim, c_out, T(1), weight.data.data(), k_dim, gout_n, p_dim, T(0),
             grad_cols.data(), p_dim);
        col2im_accum(grad_cols.data(), n, c_in, h, w, kh, kw, stride, pad, oh, ow, grad_input);
    }
}

// ---------------------------------------------------------------------------
// Batch normalization over NCHW channels. Statistics accumulate in double
// regardless of T.
// ---------------------------------------------------------------------------

template <class T>
struct BatchNormStateT {
    std::vector<T> gamma, beta;
    std::vector<T> running_mean, running_var;
    T epsilon = T(1e-5);
    T momentum = T(0.9);
    std::vector<T> gamma_grad, beta_grad;

    explicit BatchNormStateT(int channels = 0) { resize(channels); }

    void resize(int channels) {
        gamma.assign(channels, T(1));
        beta.assign(channels, T(0));
        running_mean.assign(channels, T(0));
        running_var.assign(channels, T(1));
        gamma_grad.assign(channels, T(0));
        beta_grad.assign(channels, T(0));
    }
    int channels() const { return static_cast<int>(gamma.size()); }
};

template <class T>
struct BatchNormCache {
    std::vector<T> mean, inv_std;  // per channel, statistics actually used
    TensorT<T> xhat;
    bool train = false;
};

template <class T>
TensorT<T> batchnorm_forward(const TensorT<T>& input, BatchNormStateT<T>& state, bool train,
                             BatchNormCache<T>* cache = nullptr) {
    if (input.rank() != 4) throw ShapeError("batchnorm: expected 4-d input, got " + input.shape_str());
    const int n_batch = input.dim(0), c_dim = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (c_dim != state.channels()) {
        throw ShapeError("batchnorm: input channels " + std::to_string(c_dim) + " != state channels " +
                         std::to_string(state.channels()));
    }
    if (!(state.epsilon > T(0))) throw ConfigError("batchnorm: epsilon must be positive");
    const std::size_t per_c = static_cast<std::size_t>(n_batch) * h * w;
    if (train && per_c < 2) throw ShapeError("batchnorm: train mode needs N*H*W >= 2");

    std::vector<T> mean(c_dim), inv_std(c_dim);
    if (train) {
        for (int c = 0; c < c_dim; ++c) {
            double sum = 0.0, sq = 0.0;
            for (int n = 0; n < n_batch; ++n)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double v = input.at4(n, c, y, x);
                        sum += v;
                        sq += v * v;
                    }
            const double m = sum / static_cast<double>(per_c);
            const double var = std::max(0.0, sq / static_cast<double>(per_c) - m * m);
            mean[c] = static_cast<T>(m);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(state.epsilon)));
            state.running_mean[c] =
                state.momentum * state.running_mean[c] + (T(1) - state.momentum) * static_cast<T>(m);
            state.running_var[c] =
                state.momentum * state.running_var[c] + (T(1) - state.momentum) * static_cast<T>(var);
        }
    } else {
        for (int c = 0; c < c_dim; ++c) {
            mean[c] = state.running_mean[c];
            inv_std[c] = static_cast<T>(
                1.0 / std::sqrt(static_cast<double>(state.running_var[c]) +
                                static_cast<double>(state.epsilon)));
        }
    }

    TensorT<T> out(input.shape);
    TensorT<T> xhat(input.shape);
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < c_dim; ++c) {
            const T m = mean[c], is = inv_std[c], g = state.gamma[c], b = state.beta[c];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const T xh = (input.at4(n, c, y, x) - m) * is;
                    xhat.at4(n, c, y, x) = xh;
                    out.at4(n, c, y, x) = g * xh + b;
                }
        }
    if (cache) {
        cache->mean = std::move(mean);
        cache->inv_std = std::move(inv_std);
        cache->xhat = std::move(xhat);
        cache->train = train;
    }
    return out;
}

template <class T>
TensorT<T> batchnorm_backward(const TensorT<T>& grad_out, const BatchNormCache<T>& cache,
                              BatchNormStateT<T>& state) {
    const TensorT<T>& xhat = cache.xhat;
    const int n_batch = xhat.dim(0), c_dim = xhat.dim(1), h = xhat.dim(2), w = xhat.dim(3);
    if (grad_out.shape != xhat.shape) {
        throw ShapeError("batchnorm_backward: grad_out shape " + grad_out.shape_str() +
                         " does not match cached activation");
    }
    const double per_c = static_cast<double>(n_batch) * h * w;
    TensorT<T> grad_in(xhat.shape);

    for (int c = 0; c < c_dim; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int n = 0; n < n_batch; ++n)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double g = grad_out.at4(n, c, y, x);
                    sum_g += g;
                    sum_gx += g * xhat.at4(n, c, y, x);
                }
        state.gamma_grad[c] += static_cast<T>(sum_gx);
        state.beta_grad[c] += static_cast<T>(sum_g);

        const double gamma = state.gamma[c], is = cache.inv_std[c];
        if (cache.train) {
            for (int n = 0; n < n_batch; ++n)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double g = grad_out.at4(n, c, y, x);
                        const double xh = xhat.at4(n, c, y, x);
                        grad_in.at4(n, c, y, x) = static_cast<T>(
                            gamma * is * (g - sum_g / per_c - xh * sum_gx / per_c));
                    }
        } else {
            // Frozen statistics: pure affine map.
            for (int n = 0; n < n_batch; ++n)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        grad_in.at4(n, c, y, x) =
                            static_cast<T>(gamma * is * grad_out.at4(n, c, y, x));
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> relu(const TensorT<T>& input) {
    TensorT<T> out;
    out.shape = input.shape;
    out.data.resize(input.data.size());
    for (std::size_t i = 0; i < input.data.size(); ++i)
        out.data[i] = input.data[i] > T(0) ? input.data[i] : T(0);
    return out;
}

template <class T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& forward_input) {
    if (grad_out.shape != forward_input.shape)
        throw ShapeError("relu_backward: shape mismatch " + grad_out.shape_str() + " vs " +
                         forward_input.shape_str());
    TensorT<T> grad_in;
    grad_in.shape = grad_out.shape;
    grad_in.data.resize(grad_out.data.size());
    for (std::size_t i = 0; i < grad_out.data.size(); ++i)
        grad_in.data[i] = forward_input.data[i] > T(0) ? grad_out.data[i] : T(0);
    return grad_in;
}

// Guided rule: additionally zero negative incoming gradients.
template <class T>
TensorT<T> relu_backward_guided(const TensorT<T>& grad_out, const TensorT<T>& forward_input) {
    TensorT<T> grad_in = relu_backward(grad_out, forward_input);
    for (auto& g : grad_in.data)
        if (g < T(0)) g = T(0);
    return grad_in;
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

enum class PoolKind { Max, Avg };

template <class T>
TensorT<T> pool2x2_forward(const TensorT<T>& input, PoolKind kind,
                           std::vector<int>* argmax = nullptr) {
    if (input.rank() != 4) throw ShapeError("pool2x2: expected 4-d input, got " + input.shape_str());
    const int n_batch = input.dim(0), c_dim = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("pool2x2: spatial extents " + std::to_string(h) + "x" + std::to_string(w) +
                         " must be even; pad or crop upstream");
    }
    const int oh = h / 2, ow = w / 2;
    TensorT<T> out({n_batch, c_dim, oh, ow});
    if (argmax) argmax->assign(out.numel(), 0);

    std::size_t oi = 0;
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < c_dim; ++c)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x, ++oi) {
                    const int sy = 2 * y, sx = 2 * x;
                    if (kind == PoolKind::Max) {
                        // First-index tie break in row-major window order.
                        T best = input.at4(n, c, sy, sx);
                        int best_dy = 0, best_dx = 0;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const T v = input.at4(n, c, sy + dy, sx + dx);
                                if (v > best) {
                                    best = v;
                                    best_dy = dy;
                                    best_dx = dx;
                                }
                            }
                        out.data[oi] = best;
                        if (argmax)
                            (*argmax)[oi] = ((static_cast<int>(n) * c_dim + c) * h + sy + best_dy) * w +
                                            sx + best_dx;
                    } else {
                        const T s = input.at4(n, c, sy, sx) + input.at4(n, c, sy, sx + 1) +
                                    input.at4(n, c, sy + 1, sx) + input.at4(n, c, sy + 1, sx + 1);
                        out.data[oi] = s / T(4);
                    }
                }
    return out;
}

template <class T>
TensorT<T> pool2x2_backward(const TensorT<T>& grad_out, const std::vector<int>& input_shape_like,
                            PoolKind kind, const std::vector<int>& argmax) {
    TensorT<T> grad_in(input_shape_like);
    const int c_dim = input_shape_like[1], h = input_shape_like[2], w = input_shape_like[3];
    const int oh = h / 2, ow = w / 2;
    std::size_t oi = 0;
    for (int n = 0; n < grad_out.dim(0); ++n)
        for (int c = 0; c < c_dim; ++c)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x, ++oi) {
                    const T g = grad_out.data[oi];
                    if (kind == PoolKind::Max) {
                        grad_in.data[static_cast<std::size_t>(argmax[oi])] += g;
                    } else {
                        const T q = g / T(4);
                        grad_in.at4(n, c, 2 * y, 2 * x) += q;
                        grad_in.at4(n, c, 2 * y, 2 * x + 1) += q;
                        grad_in.at4(n, c, 2 * y + 1, 2 * x) += q;
                        grad_in.at4(n, c, 2 * y + 1, 2 * x + 1) += q;
                    }
                }
    return grad_in;
}

template <class T>
TensorT<T> global_avg_pool(const TensorT<T>& input) {
    if (input.rank() != 4) throw ShapeError("global_avg_pool: expected 4-d input");
    const int n_batch = input.dim(0), c_dim = input.dim(1), h = input.dim(2), w = input.dim(3);
    TensorT<T> out({n_batch, c_dim});
    const double denom = static_cast<double>(h) * w;
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < c_dim; ++c) {
            double s = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) s += input.at4(n, c, y, x);
            out.at2(n, c) = static_cast<T>(s / denom);
        }
    return out;
}

template <class T>
TensorT<T> global_avg_pool_backward(const TensorT<T>& grad_out, const std::vector<int>& input_shape) {
    TensorT<T> grad_in(input_shape);
    const int c_dim = input_shape[1], h = input_shape[2], w = input_shape[3];
    const T denom = static_cast<T>(h * w);
    for (int n = 0; n < grad_out.dim(0); ++n)
        for (int c = 0; c < c_dim; ++c) {
            const T g = grad_out.at2(n, c) / denom;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) grad_in.at4(n, c, y, x) += g;
        }
    return grad_in;
}

// ---------------------------------------------------------------------------
// Channel concatenation
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> concat_channels(const std::vector<const TensorT<T>*>& inputs) {
    if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
    const TensorT<T>& first = *inputs.front();
    if (first.rank() != 4) throw ShapeError("concat_channels: expected 4-d inputs");
    int total_c = 0;
    for (const auto* t : inputs) {
        if (t->dim(0) != first.dim(0) || t->dim(2) != first.dim(2) || t->dim(3) != first.dim(3)) {
            throw ShapeError("concat_channels: mismatched N/H/W between " + first.shape_str() +
                             " and " + t->shape_str());
        }
        total_c += t->dim(1);
    }
    TensorT<T> out({first.dim(0), total_c, first.dim(2), first.dim(3)});
    const std::size_t plane = static_cast<std::size_t>(first.dim(2)) * first.dim(3);
    for (int n = 0; n < first.dim(0); ++n) {
        std::size_t off = static_cast<std::size_t>(n) * total_c * plane;
        for (const auto* t : inputs) {
            const std::size_t len = static_cast<std::size_t>(t->dim(1)) * plane;
            std::copy_n(t->data.data() + static_cast<std::size_t>(n) * len, len, out.data.data() + off);
            off += len;
        }
    }
    return out;
}

// Splits grad_out back into per-input gradients with matching channel offsets.
template <class T>
std::vector<TensorT<T>> split_channels(const TensorT<T>& grad_out,
                                       const std::vector<int>& channel_counts) {
    const int n_batch = grad_out.dim(0);
    const std::size_t plane = static_cast<std::size_t>(grad_out.dim(2)) * grad_out.dim(3);
    std::vector<TensorT<T>> parts;
    parts.reserve(channel_counts.size());
    for (int c : channel_counts)
        parts.emplace_back(std::vector<int>{n_batch, c, grad_out.dim(2), grad_out.dim(3)});
    for (int n = 0; n < n_batch; ++n) {
        std::size_t off = static_cast<std::size_t>(n) * grad_out.dim(1) * plane;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const std::size_t len = static_cast<std::size_t>(channel_counts[i]) * plane;
            std::copy_n(grad_out.data.data() + off, len,
                        parts[i].data.data() + static_cast<std::size_t>(n) * len);
            off += len;
        }
    }
    return parts;
}

// ---------------------------------------------------------------------------
// Linear (bias-free) and softmax
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> linear_forward(const TensorT<T>& input, const TensorT<T>& weight) {
    if (input.rank() != 2 || weight.rank() != 2)
        throw ShapeError("linear: expected 2-d input and weight");
    if (input.dim(1) != weight.dim(1)) {
        throw ShapeError("linear: input features " + std::to_string(input.dim(1)) +
                         " != weight features " + std::to_string(weight.dim(1)));
    }
    const int n = input.dim(0), o = weight.dim(0), f = input.dim(1);
    TensorT<T> out({n, o});
    gemm(false, true, n, o, f, T(1), input.data.data(), f, weight.data.data(), f, T(0),
         out.data.data(), o);
    return out;
}

template <class T>
void linear_backward(const TensorT<T>& grad_out, const TensorT<T>& input, const TensorT<T>& weight,
                     TensorT<T>& grad_input, TensorT<T>& grad_weight) {
    const int n = input.dim(0), o = weight.dim(0), f = input.dim(1);
    if (grad_input.shape != input.shape) grad_input = TensorT<T>(input.shape);
    if (grad_weight.shape != weight.shape) grad_weight = TensorT<T>(weight.shape);
    // dX = dY (N x O) * W (O x F)
    gemm(false, false, n, f, o, T(1), grad_out.data.data(), o, weight.data.data(), f, T(1),
         grad_input.data.data(), f);
    // dW += dY^T (O x N) * X (N x F)
    gemm(true, false, o, f, n, T(1), grad_out.data.data(), o, input.data.data(), f, T(1),
         grad_weight.data.data(), f);
}

template <class T>
TensorT<T> softmax(const TensorT<T>& logits) {
    if (logits.rank() != 2) throw ShapeError("softmax: expected [N,K] logits");
    if (logits.dim(1) < 2) throw ShapeError("softmax: needs K >= 2 classes");
    TensorT<T> out(logits.shape);
    const int n_rows = logits.dim(0), k = logits.dim(1);
    for (int n = 0; n < n_rows; ++n) {
        T mx = logits.at2(n, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at2(n, j));
        double denom = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(static_cast<double>(logits.at2(n, j) - mx));
            out.at2(n, j) = static_cast<T>(e);
            denom += e;
        }
        for (int j = 0; j < k; ++j) out.at2(n, j) = static_cast<T>(out.at2(n, j) / denom);
    }
    return out;
}

}  // namespace dcys
