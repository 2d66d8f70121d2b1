#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "histosr/errors.hpp"
#include "histosr/tensor.hpp"

namespace histosr {

// 8-bit RGB raster, row-major (R, G, B) triplets.
struct ImageRGB8 {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    ImageRGB8() = default;
    ImageRGB8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
        if (w < 0 || h < 0) {
            throw ShapeError("image dimensions must be non-negative, got " + std::to_string(w) +
                             "x" + std::to_string(h));
        }
    }

    std::size_t index(int x, int y, int ch) const {
        return (static_cast<std::size_t>(y) * width + x) * 3 + ch;
    }
    std::uint8_t& at(int x, int y, int ch) { return pixels[index(x, y, ch)]; }
    std::uint8_t at(int x, int y, int ch) const { return pixels[index(x, y, ch)]; }

    bool same_size(const ImageRGB8& o) const { return width == o.width && height == o.height; }
    std::string size_str() const { return std::to_string(width) + "x" + std::to_string(height); }

    bool operator==(const ImageRGB8&) const = default;
};

// PNG I/O: 8-bit RGB, no alpha. Reading converts palette/gray/alpha/16-bit
// variants down to RGB8; writing always emits the same fixed encoder settings
// (zlib level 6) so identical pixels give identical files.
ImageRGB8 read_png(const std::string& path);
void write_png(const ImageRGB8& img, const std::string& path);

// Round half away from zero, clamp to [0, 255].
inline std::uint8_t quantize_byte(double v) {
    const double r = std::round(v);  // std::round rounds halves away from zero
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

// Byte image -> 1 x h x w x 3 tensor in [0, 1].
inline Tensor to_tensor(const ImageRGB8& img) {
    Tensor t(1, img.height, img.width, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        t.data[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    }
    return t;
}

// Inverse: multiply by 255, round half away from zero, clamp.
inline ImageRGB8 to_image(const Tensor& t, int batch_index = 0) {
    if (t.c != 3 || batch_index < 0 || batch_index >= t.n) {
        throw ShapeError("to_image: need a 3-channel tensor and a valid batch index, got " +
                         t.shape_str() + " index " + std::to_string(batch_index));
    }
    ImageRGB8 img(t.w, t.h);
    const std::size_t base = t.index(batch_index, 0, 0, 0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = quantize_byte(static_cast<double>(t.data[base + i]) * 255.0);
    }
    return img;
}

}  // namespace histosr
