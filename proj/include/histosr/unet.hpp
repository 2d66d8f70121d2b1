#pragma once

#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "histosr/errors.hpp"
#include "histosr/nn_ops.hpp"
#include "histosr/rng.hpp"
#include "histosr/tensor.hpp"

namespace histosr {

// Encoder/decoder net mapping an RGB image to a same-size RGB map in (0,1).
// Encoder level k runs at base_channels * 2^k (16, 32, 64, 128 for the
// default), the bottleneck at base_channels * 2^levels (256). Every 3x3 block
// convolution is followed by ELU; the decoder upsamples by nearest-neighbor
// replication, halves channels with a 2x2 convolution, concatenates the skip
// tensor, and finishes with a 1x1 convolution and sigmoid.
struct UNetConfig {
    int levels = 4;
    int base_channels = 16;
    int input_h = 512;
    int input_w = 512;
    static constexpr int convs_per_block = 2;
    static constexpr int block_kernel = 3;
    // Recorded so alternative decoders/skips could be added without a format break.
    std::string upsample_mode = "nearest_conv2x2";
    std::string skip_mode = "concat";

    int divisor() const { return 1 << levels; }
    int bottleneck_channels() const { return base_channels << levels; }
    int level_channels(int k) const { return base_channels << k; }

    void validate() const {
        if (levels < 0 || levels > 16) {
            throw ConfigError("unet: levels must be in [0, 16], got " + std::to_string(levels));
        }
        if (base_channels < 1) {
            throw ConfigError("unet: base_channels must be >= 1, got " +
                              std::to_string(base_channels));
        }
        if (input_h < 1 || input_w < 1 || input_h % divisor() != 0 || input_w % divisor() != 0) {
            throw ConfigError("unet: input size " + std::to_string(input_h) + "x" +
                              std::to_string(input_w) + " must be positive and divisible by " +
                              std::to_string(divisor()));
        }
        if (upsample_mode != "nearest_conv2x2") {
            throw ConfigError("unet: unsupported upsample mode '" + upsample_mode + "'");
        }
        if (skip_mode != "concat") {
            throw ConfigError("unet: unsupported skip mode '" + skip_mode + "'");
        }
    }

    bool operator==(const UNetConfig&) const = default;
};

inline constexpr int kImageChannels = 3;

template <typename T>
struct UNetWeightsT {
    UNetConfig config;
    std::vector<ConvKernelT<T>> enc;  // 2 per level: conv1, conv2
    ConvKernelT<T> bottleneck1, bottleneck2;
    std::vector<ConvKernelT<T>> dec;  // 3 per level in traversal order (k = levels-1 .. 0): up, conv1, conv2
    ConvKernelT<T> final_conv;

    const ConvKernelT<T>& enc_conv(int level, int which) const { return enc[2 * level + which]; }
    ConvKernelT<T>& enc_conv(int level, int which) { return enc[2 * level + which]; }
    // j = traversal position, i.e. level k = levels-1-j.
    const ConvKernelT<T>& dec_kernel(int j, int which) const { return dec[3 * j + which]; }
    ConvKernelT<T>& dec_kernel(int j, int which) { return dec[3 * j + which]; }

    // Fixed traversal: encoder top-down, bottleneck, decoder bottom-up, final.
    template <typename Fn>
    void for_each_layer(Fn&& fn) {
        for (int k = 0; k < config.levels; ++k) {
            fn("enc" + std::to_string(k) + ".conv1", enc[2 * k]);
            fn("enc" + std::to_string(k) + ".conv2", enc[2 * k + 1]);
        }
        fn("bottleneck.conv1", bottleneck1);
        fn("bottleneck.conv2", bottleneck2);
        for (int j = 0; j < config.levels; ++j) {
            const int k = config.levels - 1 - j;
            fn("dec" + std::to_string(k) + ".up", dec[3 * j]);
            fn("dec" + std::to_string(k) + ".conv1", dec[3 * j + 1]);
            fn("dec" + std::to_string(k) + ".conv2", dec[3 * j + 2]);
        }
        fn("final", final_conv);
    }

    template <typename Fn>
    void for_each_layer(Fn&& fn) const {
        const_cast<UNetWeightsT*>(this)->for_each_layer(
            [&](const std::string& name, ConvKernelT<T>& k) { fn(name, std::as_const(k)); });
    }

    std::size_t parameter_count() const {
        std::size_t total = 0;
        for_each_layer([&](const std::string&, const ConvKernelT<T>& k) {
            total += k.weights.size() + k.bias.size();
        });
        return total;
    }
};

using ModelWeights = UNetWeightsT<float>;

namespace detail {

// Layer shapes are a pure function of the config.
struct LayerShape {
    std::string name;
    int kh, kw, c_in, c_out;
};

inline std::vector<LayerShape> unet_layer_shapes(const UNetConfig& cfg) {
    std::vector<LayerShape> shapes;
    int prev = kImageChannels;
    for (int k = 0; k < cfg.levels; ++k) {
        const int ch = cfg.level_channels(k);
        shapes.push_back({"enc" + std::to_string(k) + ".conv1", 3, 3, prev, ch});
        shapes.push_back({"enc" + std::to_string(k) + ".conv2", 3, 3, ch, ch});
        prev = ch;
    }
    const int bott = cfg.bottleneck_channels();
    shapes.push_back({"bottleneck.conv1", 3, 3, prev, bott});
    shapes.push_back({"bottleneck.conv2", 3, 3, bott, bott});
    for (int j = 0; j < cfg.levels; ++j) {
        const int k = cfg.levels - 1 - j;
        const int ch = cfg.level_channels(k);
        const int in_ch = cfg.level_channels(k + 1);  // 2^(k+1); equals bottleneck at the top
        shapes.push_back({"dec" + std::to_string(k) + ".up", 2, 2, in_ch, ch});
        shapes.push_back({"dec" + std::to_string(k) + ".conv1", 3, 3, 2 * ch, ch});
        shapes.push_back({"dec" + std::to_string(k) + ".conv2", 3, 3, ch, ch});
    }
    shapes.push_back({"final", 1, 1, cfg.levels > 0 ? cfg.base_channels : bott, kImageChannels});
    return shapes;
}

}  // namespace detail

// Zero-filled weights with the shapes the config dictates.
template <typename T>
UNetWeightsT<T> alloc_unet(const UNetConfig& cfg) {
    cfg.validate();
    UNetWeightsT<T> w;
    w.config = cfg;
    const auto shapes = detail::unet_layer_shapes(cfg);
    std::size_t i = 0;
    auto next = [&]() {
        const auto& s = shapes[i++];
        return ConvKernelT<T>(s.kh, s.kw, s.c_in, s.c_out);
    };
    for (int k = 0; k < cfg.levels; ++k) {
        w.enc.push_back(next());
        w.enc.push_back(next());
    }
    w.bottleneck1 = next();
    w.bottleneck2 = next();
    for (int j = 0; j < cfg.levels; ++j) {
        w.dec.push_back(next());
        w.dec.push_back(next());
        w.dec.push_back(next());
    }
    w.final_conv = next();
    return w;
}

// He-Normal initialization of every kernel from one seeded stream, drawn in
// traversal order; biases zero. Deterministic for a fixed seed.
template <typename T>
UNetWeightsT<T> build_unet(const UNetConfig& cfg, std::uint64_t seed) {
    UNetWeightsT<T> w = alloc_unet<T>(cfg);
    Rng rng(seed);
    w.for_each_layer([&](const std::string&, ConvKernelT<T>& k) {
        k = he_normal_init<T>(k.kh, k.kw, k.c_in, k.c_out, rng);
    });
    return w;
}

inline ModelWeights build_unet(const UNetConfig& cfg, std::uint64_t seed) {
    return build_unet<float>(cfg, seed);
}

template <typename T>
UNetWeightsT<T> zero_like(const UNetWeightsT<T>& w) {
    UNetWeightsT<T> z;
    z.config = w.config;
    for (const auto& k : w.enc) z.enc.emplace_back(k.kh, k.kw, k.c_in, k.c_out);
    z.bottleneck1 = ConvKernelT<T>(w.bottleneck1.kh, w.bottleneck1.kw, w.bottleneck1.c_in,
                                   w.bottleneck1.c_out);
    z.bottleneck2 = ConvKernelT<T>(w.bottleneck2.kh, w.bottleneck2.kw, w.bottleneck2.c_in,
                                   w.bottleneck2.c_out);
    for (const auto& k : w.dec) z.dec.emplace_back(k.kh, k.kw, k.c_in, k.c_out);
    z.final_conv = ConvKernelT<T>(w.final_conv.kh, w.final_conv.kw, w.final_conv.c_in,
                                  w.final_conv.c_out);
    return z;
}

template <typename Dst, typename Src>
UNetWeightsT<Dst> convert_weights(const UNetWeightsT<Src>& w) {
    auto conv = [](const ConvKernelT<Src>& k) {
        ConvKernelT<Dst> o(k.kh, k.kw, k.c_in, k.c_out);
        for (std::size_t i = 0; i < k.weights.size(); ++i) o.weights[i] = static_cast<Dst>(k.weights[i]);
        for (std::size_t i = 0; i < k.bias.size(); ++i) o.bias[i] = static_cast<Dst>(k.bias[i]);
        return o;
    };
    UNetWeightsT<Dst> out;
    out.config = w.config;
    for (const auto& k : w.enc) out.enc.push_back(conv(k));
    out.bottleneck1 = conv(w.bottleneck1);
    out.bottleneck2 = conv(w.bottleneck2);
    for (const auto& k : w.dec) out.dec.push_back(conv(k));
    out.final_conv = conv(w.final_conv);
    return out;
}

// Everything the backward pass needs, recorded in execution order.
template <typename T>
struct UNetCacheT {
    struct ConvTrace {
        TensorT<T> in;  // conv input
        TensorT<T> z;   // conv output before activation
    };
    std::vector<ConvTrace> enc_conv;   // 2 per level
    std::vector<PoolIndices> pools;    // 1 per level
    ConvTrace bott1, bott2;
    std::vector<ConvTrace> dec_up;     // per traversal position
    std::vector<ConvTrace> dec_conv1;  // input is the concatenated tensor
    std::vector<ConvTrace> dec_conv2;
    ConvTrace final_trace;
    TensorT<T> sigmoid_out;
};

using UNetCache = UNetCacheT<float>;

// FNV-1a fingerprint of the max-pool routing a forward pass used. Pool
// argmax flips are the model's only true slope discontinuities (ELU and the
// stable sigmoid are C1), so two evaluations with equal signatures live on
// one smooth branch and central differences are meaningful between them.
template <typename T>
std::uint64_t kink_signature(const UNetCacheT<T>& cache) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& pool : cache.pools) {
        for (std::int64_t idx : pool.argmax) {
            h ^= static_cast<std::uint64_t>(idx);
            h *= 1099511628211ull;
        }
    }
    return h;
}

// Runs the net. Inputs must have 3 channels and spatial dims divisible by
// 2^levels. Pass a cache to retain intermediates for backward; predict-style
// callers pass nullptr and skip that memory.
template <typename T>
TensorT<T> unet_forward(const UNetWeightsT<T>& w, const TensorT<T>& input,
                        std::type_identity_t<UNetCacheT<T>*> cache = nullptr) {
    const UNetConfig& cfg = w.config;
    if (input.c != kImageChannels) {
        throw ShapeError("unet forward: expected 3-channel input, got " + input.shape_str());
    }
    if (input.n < 1 || input.h < cfg.divisor() || input.w < cfg.divisor() ||
        input.h % cfg.divisor() != 0 || input.w % cfg.divisor() != 0) {
        throw ShapeError("unet forward: input " + input.shape_str() +
                         " spatial dims must be positive and divisible by " +
                         std::to_string(cfg.divisor()));
    }
    if (cache) *cache = UNetCacheT<T>{};

    auto conv_elu = [&](const TensorT<T>& x, const ConvKernelT<T>& k,
                        typename UNetCacheT<T>::ConvTrace* trace, const std::string& layer) {
        if (x.c != k.c_in) {
            throw ShapeError("unet forward: layer " + layer + " expected " +
                             std::to_string(k.c_in) + " channels, got " + x.shape_str());
        }
        TensorT<T> z = conv2d_forward(x, k);
        TensorT<T> a = elu_forward(z);
        if (trace) {
            trace->in = x;
            trace->z = std::move(z);
        }
        return a;
    };

    std::vector<TensorT<T>> skips;
    TensorT<T> x = input;
    for (int k = 0; k < cfg.levels; ++k) {
        const std::string tag = "enc" + std::to_string(k);
        typename UNetCacheT<T>::ConvTrace t1, t2;
        TensorT<T> a1 = conv_elu(x, w.enc_conv(k, 0), cache ? &t1 : nullptr, tag + ".conv1");
        TensorT<T> a2 = conv_elu(a1, w.enc_conv(k, 1), cache ? &t2 : nullptr, tag + ".conv2");
        auto pooled = maxpool2x2_forward(a2);
        skips.push_back(std::move(a2));
        if (cache) {
            cache->enc_conv.push_back(std::move(t1));
            cache->enc_conv.push_back(std::move(t2));
            cache->pools.push_back(std::move(pooled.indices));
        }
        x = std::move(pooled.output);
    }

    x = conv_elu(x, w.bottleneck1, cache ? &cache->bott1 : nullptr, "bottleneck.conv1");
    x = conv_elu(x, w.bottleneck2, cache ? &cache->bott2 : nullptr, "bottleneck.conv2");

    for (int j = 0; j < cfg.levels; ++j) {
        const int k = cfg.levels - 1 - j;
        const std::string tag = "dec" + std::to_string(k);
        TensorT<T> up = upsample2x2_forward(x);
        typename UNetCacheT<T>::ConvTrace tu, t1, t2;
        TensorT<T> au = conv_elu(up, w.dec_kernel(j, 0), cache ? &tu : nullptr, tag + ".up");
        TensorT<T> cc = concat_channels(au, skips[static_cast<std::size_t>(k)]);
        TensorT<T> a1 = conv_elu(cc, w.dec_kernel(j, 1), cache ? &t1 : nullptr, tag + ".conv1");
        TensorT<T> a2 = conv_elu(a1, w.dec_kernel(j, 2), cache ? &t2 : nullptr, tag + ".conv2");
        if (cache) {
            cache->dec_up.push_back(std::move(tu));
            cache->dec_conv1.push_back(std::move(t1));
            cache->dec_conv2.push_back(std::move(t2));
        }
        x = std::move(a2);
    }

    TensorT<T> zf = conv2d_forward(x, w.final_conv);
    TensorT<T> out = sigmoid_forward(zf);
    if (cache) {
        cache->final_trace.in = std::move(x);
        cache->final_trace.z = std::move(zf);
        cache->sigmoid_out = out;
    }
    return out;
}

// Exact reverse traversal; gradient shapes mirror the weights.
template <typename T>
UNetWeightsT<T> unet_backward(const UNetWeightsT<T>& w, const UNetCacheT<T>& cache,
                              const TensorT<T>& d_output) {
    const UNetConfig& cfg = w.config;
    if (cache.sigmoid_out.size() == 0 ||
        cache.enc_conv.size() != static_cast<std::size_t>(2 * cfg.levels) ||
        cache.dec_up.size() != static_cast<std::size_t>(cfg.levels)) {
        throw ShapeError("unet backward: cache does not match a forward pass of this model");
    }
    if (!cache.sigmoid_out.same_shape(d_output)) {
        throw ShapeError("unet backward: cotangent " + d_output.shape_str() +
                         " does not match forward output " + cache.sigmoid_out.shape_str());
    }

    UNetWeightsT<T> grads = zero_like(w);

    TensorT<T> g = sigmoid_backward(cache.sigmoid_out, d_output);
    {
        auto cg = conv2d_backward(cache.final_trace.in, w.final_conv, g);
        grads.final_conv = std::move(cg.d_kernel);
        g = std::move(cg.d_input);
    }

    // Decoder in reverse traversal order; collect skip cotangents per level.
    std::vector<TensorT<T>> d_skips(static_cast<std::size_t>(cfg.levels));
    for (int j = cfg.levels - 1; j >= 0; --j) {
        const int k = cfg.levels - 1 - j;
        {
            const auto& t = cache.dec_conv2[static_cast<std::size_t>(j)];
            TensorT<T> gz = elu_backward(t.z, g);
            auto cg = conv2d_backward(t.in, w.dec_kernel(j, 2), gz);
            grads.dec_kernel(j, 2) = std::move(cg.d_kernel);
            g = std::move(cg.d_input);
        }
        {
            const auto& t = cache.dec_conv1[static_cast<std::size_t>(j)];
            TensorT<T> gz = elu_backward(t.z, g);
            auto cg = conv2d_backward(t.in, w.dec_kernel(j, 1), gz);
            grads.dec_kernel(j, 1) = std::move(cg.d_kernel);
            auto [d_au, d_skip] = split_channels(cg.d_input, cfg.level_channels(k));
            d_skips[static_cast<std::size_t>(k)] = std::move(d_skip);
            g = std::move(d_au);
        }
        {
            const auto& t = cache.dec_up[static_cast<std::size_t>(j)];
            TensorT<T> gz = elu_backward(t.z, g);
            auto cg = conv2d_backward(t.in, w.dec_kernel(j, 0), gz);
            grads.dec_kernel(j, 0) = std::move(cg.d_kernel);
            g = upsample2x2_backward(cg.d_input);
        }
    }

    g = [&] {
        TensorT<T> gz = elu_backward(cache.bott2.z, g);
        auto cg = conv2d_backward(cache.bott2.in, w.bottleneck2, gz);
        grads.bottleneck2 = std::move(cg.d_kernel);
        TensorT<T> gz1 = elu_backward(cache.bott1.z, cg.d_input);
        auto cg1 = conv2d_backward(cache.bott1.in, w.bottleneck1, gz1);
        grads.bottleneck1 = std::move(cg1.d_kernel);
        return std::move(cg1.d_input);
    }();

    for (int k = cfg.levels - 1; k >= 0; --k) {
        TensorT<T> d_a2 = maxpool2x2_backward(cache.pools[static_cast<std::size_t>(k)], g);
        const TensorT<T>& ds = d_skips[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < d_a2.size(); ++i) d_a2.data[i] += ds.data[i];
        {
            const auto& t = cache.enc_conv[static_cast<std::size_t>(2 * k + 1)];
            TensorT<T> gz = elu_backward(t.z, d_a2);
            auto cg = conv2d_backward(t.in, w.enc_conv(k, 1), gz);
            grads.enc_conv(k, 1) = std::move(cg.d_kernel);
            g = std::move(cg.d_input);
        }
        {
            const auto& t = cache.enc_conv[static_cast<std::size_t>(2 * k)];
            TensorT<T> gz = elu_backward(t.z, g);
            auto cg = conv2d_backward(t.in, w.enc_conv(k, 0), gz);
            grads.enc_conv(k, 0) = std::move(cg.d_kernel);
            g = std::move(cg.d_input);
        }
    }
    return grads;
}

}  // namespace histosr
