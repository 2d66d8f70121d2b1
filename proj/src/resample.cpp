#include "histosr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace histosr {

void catmull_rom_weights(double f, double w[4]) {
    // k(t) with a = -0.5:
    //   |t| <= 1:     1.5|t|^3 - 2.5|t|^2 + 1
    //   1 < |t| < 2: -0.5|t|^3 + 2.5|t|^2 - 4|t| + 2
    const double f2 = f * f, f3 = f2 * f;
    w[0] = -0.5 * f3 + f2 - 0.5 * f;          // tap at distance 1 + f
    w[1] = 1.5 * f3 - 2.5 * f2 + 1.0;         // tap at distance f
    w[2] = -1.5 * f3 + 2.0 * f2 + 0.5 * f;    // tap at distance 1 - f
    w[3] = 0.5 * f3 - 0.5 * f2;               // tap at distance 2 - f
}

namespace {

struct TapTable {
    std::vector<int> base;       // leftmost tap index (pre-clamp), one per output coord
    std::vector<double> weight;  // 4 per output coord
};

TapTable make_taps(int src_size, int dst_size) {
    TapTable t;
    t.base.resize(static_cast<std::size_t>(dst_size));
    t.weight.resize(static_cast<std::size_t>(dst_size) * 4);
    const double scale = static_cast<double>(src_size) / dst_size;
    for (int d = 0; d < dst_size; ++d) {
        const double src = (d + 0.5) * scale - 0.5;
        const double fl = std::floor(src);
        t.base[static_cast<std::size_t>(d)] = static_cast<int>(fl) - 1;
        catmull_rom_weights(src - fl, &t.weight[static_cast<std::size_t>(d) * 4]);
    }
    return t;
}

inline int clamp_index(int i, int size) { return std::clamp(i, 0, size - 1); }

}  // namespace

ImageRGB8 bicubic_resample(const ImageRGB8& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw ConfigError("bicubic_resample: target size must be at least 1x1, got " +
                          std::to_string(out_w) + "x" + std::to_string(out_h));
    }
    if (img.width < 1 || img.height < 1) {
        throw ConfigError("bicubic_resample: empty source image");
    }

    const TapTable tx = make_taps(img.width, out_w);
    const TapTable ty = make_taps(img.height, out_h);

    // Horizontal pass into a float intermediate (img.height x out_w x 3).
    std::vector<double> mid(static_cast<std::size_t>(img.height) * out_w * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const int b = tx.base[static_cast<std::size_t>(x)];
            const double* wx = &tx.weight[static_cast<std::size_t>(x) * 4];
            double acc[3] = {0.0, 0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                const int sx = clamp_index(b + k, img.width);
                for (int ch = 0; ch < 3; ++ch) acc[ch] += wx[k] * img.at(sx, y, ch);
            }
            double* dst = &mid[(static_cast<std::size_t>(y) * out_w + x) * 3];
            for (int ch = 0; ch < 3; ++ch) dst[ch] = acc[ch];
        }
    }

    // Vertical pass, then round and clamp.
    ImageRGB8 out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const int b = ty.base[static_cast<std::size_t>(y)];
        const double* wy = &ty.weight[static_cast<std::size_t>(y) * 4];
        for (int x = 0; x < out_w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int k = 0; k < 4; ++k) {
                const int sy = clamp_index(b + k, img.height);
                const double* src = &mid[(static_cast<std::size_t>(sy) * out_w + x) * 3];
                for (int ch = 0; ch < 3; ++ch) acc[ch] += wy[k] * src[ch];
            }
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = quantize_byte(acc[ch]);
        }
    }
    return out;
}

ImageRGB8 degrade(const ImageRGB8& img, int factor) {
    if (factor < 2) throw ConfigError("degrade: factor must be >= 2");
    if (img.width % factor != 0 || img.height % factor != 0) {
        throw ConfigError("degrade: image " + img.size_str() + " not divisible by factor " +
                          std::to_string(factor));
    }
    const ImageRGB8 small = bicubic_resample(img, img.width / factor, img.height / factor);
    return bicubic_resample(small, img.width, img.height);
}

}  // namespace histosr
