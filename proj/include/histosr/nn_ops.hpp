#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "histosr/errors.hpp"
#include "histosr/rng.hpp"
#include "histosr/tensor.hpp"

namespace histosr {

// Convolution filter bank, weights in row-major (kh, kw, c_in, c_out) order.
template <typename T>
struct ConvKernelT {
    int kh = 0, kw = 0, c_in = 0, c_out = 0;
    std::vector<T> weights;
    std::vector<T> bias;

    ConvKernelT() = default;
    ConvKernelT(int kh_, int kw_, int ci, int co)
        : kh(kh_), kw(kw_), c_in(ci), c_out(co),
          weights(static_cast<std::size_t>(kh_) * kw_ * ci * co, T(0)),
          bias(static_cast<std::size_t>(co), T(0)) {}

    std::size_t weight_count() const { return weights.size(); }

    std::string shape_str() const {
        return std::to_string(kh) + "x" + std::to_string(kw) + "x" + std::to_string(c_in) + "x" +
               std::to_string(c_out);
    }
};

using ConvKernel = ConvKernelT<float>;

namespace detail {

// c[m x n] += a[m x k] * b[k x n], all dense row-major.
template <typename T>
void gemm_accum(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        T* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[k x n] += a^T * b, with a stored as [m x k] and b as [m x n].
template <typename T>
void gemm_at_b_accum(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        const T* brow = b + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            T* crow = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// Patch matrix for output rows [y0, y0+rows): shape [rows*w, kh*kw*c],
// zero-filled where the window hangs over the border.
template <typename T>
void im2col_rows(const TensorT<T>& x, int sample, int y0, int rows, int kh, int kw, int pad_top,
                 int pad_left, std::vector<T>& col) {
    const int H = x.h, W = x.w, C = x.c;
    const std::size_t patch = static_cast<std::size_t>(kh) * kw * C;
    col.assign(static_cast<std::size_t>(rows) * W * patch, T(0));
    for (int r = 0; r < rows; ++r) {
        const int oy = y0 + r;
        for (int ox = 0; ox < W; ++ox) {
            T* dst = col.data() + (static_cast<std::size_t>(r) * W + ox) * patch;
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy + ky - pad_top;
                if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ox + kx - pad_left;
                    if (ix < 0 || ix >= W) continue;
                    const T* src = &x.data[x.index(sample, iy, ix, 0)];
                    std::copy(src, src + C, dst + (static_cast<std::size_t>(ky) * kw + kx) * C);
                }
            }
        }
    }
}

// Row-chunk size keeping the im2col buffer near 4M elements.
inline int conv_row_chunk(int h, int w, std::size_t patch) {
    const std::size_t budget = 4u << 20;
    const std::size_t per_row = static_cast<std::size_t>(w) * patch;
    int chunk = static_cast<int>(std::max<std::size_t>(1, budget / std::max<std::size_t>(1, per_row)));
    return std::min(chunk, h);
}

}  // namespace detail

// Stride-1 convolution with zero padding preserving spatial dims. For even
// kernels the extra padding cell goes to the bottom/right edge.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvKernelT<T>& kernel) {
    if (input.c != kernel.c_in) {
        throw ShapeError("conv2d: input has " + std::to_string(input.c) +
                         " channels but kernel expects " + std::to_string(kernel.c_in) +
                         " (input " + input.shape_str() + ", kernel " + kernel.shape_str() + ")");
    }
    const int pad_top = (kernel.kh - 1) / 2;
    const int pad_left = (kernel.kw - 1) / 2;
    const std::size_t patch = static_cast<std::size_t>(kernel.kh) * kernel.kw * kernel.c_in;

    TensorT<T> out(input.n, input.h, input.w, kernel.c_out);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = kernel.bias[i % kernel.c_out];
    }

    const int chunk = detail::conv_row_chunk(input.h, input.w, patch);
    std::vector<T> col;
    for (int s = 0; s < input.n; ++s) {
        for (int y0 = 0; y0 < input.h; y0 += chunk) {
            const int rows = std::min(chunk, input.h - y0);
            detail::im2col_rows(input, s, y0, rows, kernel.kh, kernel.kw, pad_top, pad_left, col);
            detail::gemm_accum(col.data(), kernel.weights.data(), &out.data[out.index(s, y0, 0, 0)],
                               rows * input.w, static_cast<int>(patch), kernel.c_out);
        }
    }
    return out;
}

template <typename T>
struct ConvGradsT {
    TensorT<T> d_input;
    ConvKernelT<T> d_kernel;  // d_weights in .weights, d_bias in .bias
};

template <typename T>
ConvGradsT<T> conv2d_backward(const TensorT<T>& input, const ConvKernelT<T>& kernel,
                              const TensorT<T>& d_output) {
    if (input.c != kernel.c_in) {
        throw ShapeError("conv2d backward: input has " + std::to_string(input.c) +
                         " channels but kernel expects " + std::to_string(kernel.c_in));
    }
    if (d_output.n != input.n || d_output.h != input.h || d_output.w != input.w ||
        d_output.c != kernel.c_out) {
        throw ShapeError("conv2d backward: cotangent " + d_output.shape_str() +
                         " does not match forward output of input " + input.shape_str() +
                         " with kernel " + kernel.shape_str());
    }
    const int pad_top = (kernel.kh - 1) / 2;
    const int pad_left = (kernel.kw - 1) / 2;
    const int patch = kernel.kh * kernel.kw * kernel.c_in;

    ConvGradsT<T> g;
    g.d_input = TensorT<T>(input.n, input.h, input.w, input.c);
    g.d_kernel = ConvKernelT<T>(kernel.kh, kernel.kw, kernel.c_in, kernel.c_out);

    for (int s = 0; s < d_output.n; ++s) {
        for (int y = 0; y < d_output.h; ++y) {
            const T* gp = &d_output.data[d_output.index(s, y, 0, 0)];
            for (int x = 0; x < d_output.w; ++x) {
                for (int o = 0; o < kernel.c_out; ++o) g.d_kernel.bias[o] += gp[x * kernel.c_out + o];
            }
        }
    }

    // Transposed weights [c_out x patch] for the d_input pass.
    std::vector<T> wt(static_cast<std::size_t>(kernel.c_out) * patch);
    for (int p = 0; p < patch; ++p) {
        for (int o = 0; o < kernel.c_out; ++o) {
            wt[static_cast<std::size_t>(o) * patch + p] =
                kernel.weights[static_cast<std::size_t>(p) * kernel.c_out + o];
        }
    }

    const int chunk = detail::conv_row_chunk(input.h, input.w, static_cast<std::size_t>(patch));
    std::vector<T> col, dcol;
    for (int s = 0; s < input.n; ++s) {
        for (int y0 = 0; y0 < input.h; y0 += chunk) {
            const int rows = std::min(chunk, input.h - y0);
            const int m = rows * input.w;
            const T* grad_rows = &d_output.data[d_output.index(s, y0, 0, 0)];

            detail::im2col_rows(input, s, y0, rows, kernel.kh, kernel.kw, pad_top, pad_left, col);
            detail::gemm_at_b_accum(col.data(), grad_rows, g.d_kernel.weights.data(), m, patch,
                                    kernel.c_out);

            dcol.assign(static_cast<std::size_t>(m) * patch, T(0));
            detail::gemm_accum(grad_rows, wt.data(), dcol.data(), m, kernel.c_out, patch);

            // col2im: scatter-add patch gradients back onto the input.
            for (int r = 0; r < rows; ++r) {
                const int oy = y0 + r;
                for (int ox = 0; ox < input.w; ++ox) {
                    const T* src = dcol.data() + (static_cast<std::size_t>(r) * input.w + ox) *
                                                     static_cast<std::size_t>(patch);
                    for (int ky = 0; ky < kernel.kh; ++ky) {
                        const int iy = oy + ky - pad_top;
                        if (iy < 0 || iy >= input.h) continue;
                        for (int kx = 0; kx < kernel.kw; ++kx) {
                            const int ix = ox + kx - pad_left;
                            if (ix < 0 || ix >= input.w) continue;
                            T* dst = &g.d_input.data[g.d_input.index(s, iy, ix, 0)];
                            const T* sp = src + (static_cast<std::size_t>(ky) * kernel.kw + kx) *
                                                    input.c;
                            for (int ch = 0; ch < input.c; ++ch) dst[ch] += sp[ch];
                        }
                    }
                }
            }
        }
    }
    return g;
}

// Argmax bookkeeping from a pooling forward pass; shape fields record the
// pooled input so the backward pass can validate its cotangent.
struct PoolIndices {
    int n = 0, h = 0, w = 0, c = 0;  // input shape
    std::vector<std::int64_t> argmax;  // flat input index per output element
};

template <typename T>
struct MaxPoolResultT {
    TensorT<T> output;
    PoolIndices indices;
};

// 2x2 max pooling, stride 2. Ties go to the first element in row-major order.
template <typename T>
MaxPoolResultT<T> maxpool2x2_forward(const TensorT<T>& input) {
    if (input.h % 2 != 0 || input.w % 2 != 0) {
        throw ShapeError("maxpool2x2: spatial dims must be even, got " + input.shape_str());
    }
    MaxPoolResultT<T> r;
    r.output = TensorT<T>(input.n, input.h / 2, input.w / 2, input.c);
    r.indices = PoolIndices{input.n, input.h, input.w, input.c, {}};
    r.indices.argmax.resize(r.output.size());

    std::size_t oi = 0;
    for (int s = 0; s < input.n; ++s) {
        for (int oy = 0; oy < r.output.h; ++oy) {
            for (int ox = 0; ox < r.output.w; ++ox) {
                for (int ch = 0; ch < input.c; ++ch) {
                    std::size_t best = input.index(s, 2 * oy, 2 * ox, ch);
                    T best_v = input.data[best];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            if (dy == 0 && dx == 0) continue;
                            const std::size_t idx = input.index(s, 2 * oy + dy, 2 * ox + dx, ch);
                            if (input.data[idx] > best_v) {
                                best_v = input.data[idx];
                                best = idx;
                            }
                        }
                    }
                    r.output.data[oi] = best_v;
                    r.indices.argmax[oi] = static_cast<std::int64_t>(best);
                    ++oi;
                }
            }
        }
    }
    return r;
}

template <typename T>
TensorT<T> maxpool2x2_backward(const PoolIndices& indices, const TensorT<T>& d_output) {
    if (d_output.n != indices.n || d_output.h != indices.h / 2 || d_output.w != indices.w / 2 ||
        d_output.c != indices.c || d_output.size() != indices.argmax.size()) {
        throw ShapeError("maxpool2x2 backward: cotangent " + d_output.shape_str() +
                         " does not match recorded input shape " + std::to_string(indices.n) + "x" +
                         std::to_string(indices.h) + "x" + std::to_string(indices.w) + "x" +
                         std::to_string(indices.c));
    }
    TensorT<T> d_input(indices.n, indices.h, indices.w, indices.c);
    for (std::size_t i = 0; i < d_output.size(); ++i) {
        d_input.data[static_cast<std::size_t>(indices.argmax[i])] += d_output.data[i];
    }
    return d_input;
}

// Nearest-neighbor 2x replication.
template <typename T>
TensorT<T> upsample2x2_forward(const TensorT<T>& input) {
    TensorT<T> out(input.n, input.h * 2, input.w * 2, input.c);
    for (int s = 0; s < input.n; ++s) {
        for (int y = 0; y < input.h; ++y) {
            for (int x = 0; x < input.w; ++x) {
                const T* src = &input.data[input.index(s, y, x, 0)];
                for (int dy = 0; dy < 2; ++dy) {
                    T* dst = &out.data[out.index(s, 2 * y + dy, 2 * x, 0)];
                    std::copy(src, src + input.c, dst);
                    std::copy(src, src + input.c, dst + input.c);
                }
            }
        }
    }
    return out;
}

// Adjoint of replication: each input cell receives the sum of its 2x2 block.
template <typename T>
TensorT<T> upsample2x2_backward(const TensorT<T>& d_output) {
    if (d_output.h % 2 != 0 || d_output.w % 2 != 0) {
        throw ShapeError("upsample2x2 backward: cotangent dims must be even, got " +
                         d_output.shape_str());
    }
    TensorT<T> d_input(d_output.n, d_output.h / 2, d_output.w / 2, d_output.c);
    for (int s = 0; s < d_input.n; ++s) {
        for (int y = 0; y < d_input.h; ++y) {
            for (int x = 0; x < d_input.w; ++x) {
                T* dst = &d_input.data[d_input.index(s, y, x, 0)];
                for (int dy = 0; dy < 2; ++dy) {
                    const T* src = &d_output.data[d_output.index(s, 2 * y + dy, 2 * x, 0)];
                    for (int ch = 0; ch < d_input.c; ++ch) {
                        dst[ch] += src[ch] + src[d_input.c + ch];
                    }
                }
            }
        }
    }
    return d_input;
}

// Channel concatenation, a's channels first.
template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ShapeError("concat_channels: spatial mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    TensorT<T> out(a.n, a.h, a.w, a.c + b.c);
    for (int s = 0; s < a.n; ++s) {
        for (int y = 0; y < a.h; ++y) {
            for (int x = 0; x < a.w; ++x) {
                T* dst = &out.data[out.index(s, y, x, 0)];
                if (a.c > 0) std::copy(&a.data[a.index(s, y, x, 0)], &a.data[a.index(s, y, x, 0)] + a.c, dst);
                if (b.c > 0) std::copy(&b.data[b.index(s, y, x, 0)], &b.data[b.index(s, y, x, 0)] + b.c, dst + a.c);
            }
        }
    }
    return out;
}

// Inverse of concat_channels at the same boundary.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> split_channels(const TensorT<T>& x, int c_first) {
    if (c_first < 0 || c_first > x.c) {
        throw ShapeError("split_channels: boundary " + std::to_string(c_first) +
                         " outside tensor " + x.shape_str());
    }
    TensorT<T> a(x.n, x.h, x.w, c_first);
    TensorT<T> b(x.n, x.h, x.w, x.c - c_first);
    for (int s = 0; s < x.n; ++s) {
        for (int y = 0; y < x.h; ++y) {
            for (int x0 = 0; x0 < x.w; ++x0) {
                const T* src = &x.data[x.index(s, y, x0, 0)];
                if (a.c > 0) std::copy(src, src + a.c, &a.data[a.index(s, y, x0, 0)]);
                if (b.c > 0) std::copy(src + a.c, src + x.c, &b.data[b.index(s, y, x0, 0)]);
            }
        }
    }
    return {std::move(a), std::move(b)};
}

// ELU with alpha = 1: x for x >= 0, exp(x) - 1 otherwise.
template <typename T>
TensorT<T> elu_forward(const TensorT<T>& x) {
    TensorT<T> out(x.n, x.h, x.w, x.c);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x.data[i];
        out.data[i] = v >= T(0) ? v : std::expm1(v);
    }
    return out;
}

// Needs the forward input; derivative is 1 for x >= 0 and exp(x) = elu(x)+1 below.
template <typename T>
TensorT<T> elu_backward(const TensorT<T>& x, const TensorT<T>& d_output) {
    require_same_shape(x, d_output, "elu backward");
    TensorT<T> d_input(x.n, x.h, x.w, x.c);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x.data[i];
        d_input.data[i] = v >= T(0) ? d_output.data[i] : d_output.data[i] * std::exp(v);
    }
    return d_input;
}

// Outputs are pinned to [1e-7, 1 - 1e-7]: strictly inside (0,1) even where
// the exact value would round to 0 or 1, which also keeps the chained
// BCE-through-sigmoid gradient from dying at saturation.
template <typename T>
TensorT<T> sigmoid_forward(const TensorT<T>& x) {
    const T lo = T(1e-7), hi = T(1) - T(1e-7);
    TensorT<T> out(x.n, x.h, x.w, x.c);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T v = x.data[i];
        T s;
        if (v >= T(0)) {
            s = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            s = e / (T(1) + e);
        }
        out.data[i] = std::clamp(s, lo, hi);
    }
    return out;
}

// Takes the forward output s; derivative is s * (1 - s).
template <typename T>
TensorT<T> sigmoid_backward(const TensorT<T>& s, const TensorT<T>& d_output) {
    require_same_shape(s, d_output, "sigmoid backward");
    TensorT<T> d_input(s.n, s.h, s.w, s.c);
    for (std::size_t i = 0; i < s.size(); ++i) {
        d_input.data[i] = d_output.data[i] * s.data[i] * (T(1) - s.data[i]);
    }
    return d_input;
}

template <typename T>
struct BceResultT {
    double loss = 0.0;
    TensorT<T> d_pred;
};

// Mean binary cross-entropy over all elements. Predictions are clamped to
// [1e-7, 1 - 1e-7] before the logs; the gradient uses the clamped value.
template <typename T>
BceResultT<T> bce_loss(const TensorT<T>& pred, const TensorT<T>& target) {
    require_same_shape(pred, target, "bce_loss");
    if (pred.size() == 0) throw ShapeError("bce_loss: empty tensors");
    const T eps = T(1e-7);
    const T lo = eps, hi = T(1) - eps;
    const double inv_count = 1.0 / static_cast<double>(pred.size());

    BceResultT<T> r;
    r.d_pred = TensorT<T>(pred.n, pred.h, pred.w, pred.c);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T p = std::clamp(pred.data[i], lo, hi);
        const T t = target.data[i];
        sum -= static_cast<double>(t) * std::log(static_cast<double>(p)) +
               (1.0 - static_cast<double>(t)) * std::log(1.0 - static_cast<double>(p));
        r.d_pred.data[i] = static_cast<T>((static_cast<double>(p) - static_cast<double>(t)) /
                                          (static_cast<double>(p) * (1.0 - static_cast<double>(p))) *
                                          inv_count);
    }
    r.loss = sum * inv_count;
    return r;
}

// He Normal: weights ~ N(0, 2 / fan_in) drawn in row-major (kh, kw, c_in,
// c_out) order from the given stream; biases zero.
template <typename T>
ConvKernelT<T> he_normal_init(int kh, int kw, int c_in, int c_out, Rng& rng) {
    const long long fan_in = static_cast<long long>(kh) * kw * c_in;
    if (fan_in <= 0 || c_out <= 0) {
        throw ConfigError("he_normal_init: invalid kernel shape " + std::to_string(kh) + "x" +
                          std::to_string(kw) + "x" + std::to_string(c_in) + "x" +
                          std::to_string(c_out));
    }
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    ConvKernelT<T> k(kh, kw, c_in, c_out);
    for (auto& v : k.weights) v = static_cast<T>(rng.normal(0.0, stddev));
    return k;
}

}  // namespace histosr
