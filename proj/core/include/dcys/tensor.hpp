#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dcys/errors.hpp"

namespace dcys {

// Dense row-major n-d array. Activations use NCHW, conv weights [O,I,Kh,Kw].
// The gradient buffer is empty until alloc_grad(); ops that produce gradients
// accumulate into it so multi-consumer nodes sum naturally.
template <class T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;

    TensorT() = default;

    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    TensorT(std::vector<int> s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (data.size() != numel_of(shape)) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape product " + std::to_string(numel_of(shape)));
        }
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int e : s) {
            if (e <= 0) throw ShapeError("non-positive extent " + std::to_string(e));
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }

    static TensorT full(std::vector<int> s, T v) {
        TensorT t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    void alloc_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
    void zero_grad() {
        for (auto& g : grad) g = T(0);
    }

    // [N,C,H,W] indexing.
    T& at4(int n, int c, int h, int w) {
        return data[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
    }
    T at4(int n, int c, int h, int w) const {
        return data[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
    }

    // [N,K] indexing.
    T& at2(int n, int k) { return data[static_cast<std::size_t>(n) * dim(1) + k]; }
    T at2(int n, int k) const { return data[static_cast<std::size_t>(n) * dim(1) + k]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << "]";
        return os.str();
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <class T>
bool all_finite(const TensorT<T>& t) {
    for (T v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

template <class T>
void assert_finite(const TensorT<T>& t, const char* where) {
#ifndef NDEBUG
    if (!all_finite(t)) throw NumericError(std::string("non-finite values after ") + where);
#else
    (void)t;
    (void)where;
#endif
}

}  // namespace dcys
