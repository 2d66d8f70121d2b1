#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "histosr/errors.hpp"

namespace histosr {

// Rank-4 dense array in row-major (batch, height, width, channels) order.
template <typename T>
struct TensorT {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<T> data;

    TensorT() = default;
    TensorT(int n_, int h_, int w_, int c_)
        : n(n_), h(h_), w(w_), c(c_),
          data(static_cast<std::size_t>(n_) * h_ * w_ * c_, T(0)) {
        if (n_ < 0 || h_ < 0 || w_ < 0 || c_ < 0) {
            throw ShapeError("tensor dimensions must be non-negative, got " + shape_str());
        }
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int in, int iy, int ix, int ic) const {
        return ((static_cast<std::size_t>(in) * h + iy) * w + ix) * c + ic;
    }

    T& at(int in, int iy, int ix, int ic) { return data[index(in, iy, ix, ic)]; }
    const T& at(int in, int iy, int ix, int ic) const { return data[index(in, iy, ix, ic)]; }

    bool same_shape(const TensorT& o) const {
        return n == o.n && h == o.h && w == o.w && c == o.c;
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(h) + "x" + std::to_string(w) + "x" +
               std::to_string(c);
    }

    void fill(T v) { data.assign(data.size(), v); }
};

using Tensor = TensorT<float>;

template <typename T>
bool all_finite(const TensorT<T>& t) {
    for (T v : t.data) {
        if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
}

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace histosr
