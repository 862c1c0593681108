// Independent brute-force reference implementations used as test oracles.
// These must stay free of the im2col/GEMM fast path they check.
#pragma once

#include <algorithm>
#include <vector>

#include "dcys/tensor.hpp"

namespace oracle {

template <class T>
dcys::TensorT<T> naive_conv2d(const dcys::TensorT<T>& in, const dcys::TensorT<T>& w, int stride,
                              int pad) {
    const int n_batch = in.dim(0), c_in = in.dim(1), h = in.dim(2), wd = in.dim(3);
    const int c_out = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;
    dcys::TensorT<T> out({n_batch, c_out, oh, ow});
    for (int n = 0; n < n_batch; ++n)
        for (int o = 0; o < c_out; ++o)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x) {
                    double acc = 0.0;
                    for (int c = 0; c < c_in; ++c)
                        for (int dy = 0; dy < kh; ++dy)
                            for (int dx = 0; dx < kw; ++dx) {
                                const int sy = y * stride + dy - pad;
                                const int sx = x * stride + dx - pad;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
                                acc += static_cast<double>(in.at4(n, c, sy, sx)) *
                                       static_cast<double>(w.at4(o, c, dy, dx));
                            }
                    out.at4(n, o, y, x) = static_cast<T>(acc);
                }
    return out;
}

template <class T>
dcys::TensorT<T> naive_pool2x2(const dcys::TensorT<T>& in, bool max_pool) {
    const int n_batch = in.dim(0), c_dim = in.dim(1), h = in.dim(2), w = in.dim(3);
    dcys::TensorT<T> out({n_batch, c_dim, h / 2, w / 2});
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < c_dim; ++c)
            for (int y = 0; y < h / 2; ++y)
                for (int x = 0; x < w / 2; ++x) {
                    const T a = in.at4(n, c, 2 * y, 2 * x), b = in.at4(n, c, 2 * y, 2 * x + 1);
                    const T d = in.at4(n, c, 2 * y + 1, 2 * x), e = in.at4(n, c, 2 * y + 1, 2 * x + 1);
                    out.at4(n, c, y, x) =
                        max_pool ? std::max(std::max(a, b), std::max(d, e)) : (a + b + d + e) / T(4);
                }
    return out;
}

template <class T>
dcys::TensorT<T> naive_global_avg_pool(const dcys::TensorT<T>& in) {
    const int n_batch = in.dim(0), c_dim = in.dim(1), h = in.dim(2), w = in.dim(3);
    dcys::TensorT<T> out({n_batch, c_dim});
    for (int n = 0; n < n_batch; ++n)
        for (int c = 0; c < c_dim; ++c) {
            double acc = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) acc += in.at4(n, c, y, x);
            out.at2(n, c) = static_cast<T>(acc / (h * w));
        }
    return out;
}

}  // namespace oracle
