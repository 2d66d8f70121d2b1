#pragma once

#include <algorithm>

#include "histosr/image.hpp"

namespace histosr {

// Shifted residual codec: 127 encodes "no change", values below 127 darken,
// values above brighten. Differences outside [-127, 128] saturate at the
// byte range and are not recoverable.
inline ImageRGB8 encode_residual(const ImageRGB8& hr, const ImageRGB8& lr) {
    if (!hr.same_size(lr)) {
        throw ShapeError("encode_residual: size mismatch " + hr.size_str() + " vs " +
                         lr.size_str());
    }
    ImageRGB8 out(hr.width, hr.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const int d = static_cast<int>(hr.pixels[i]) - static_cast<int>(lr.pixels[i]) + 127;
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(d, 0, 255));
    }
    return out;
}

// Pixel-wise summation: clamp(lr + residual - 127).
inline ImageRGB8 decode_residual(const ImageRGB8& lr, const ImageRGB8& residual) {
    if (!lr.same_size(residual)) {
        throw ShapeError("decode_residual: size mismatch " + lr.size_str() + " vs " +
                         residual.size_str());
    }
    ImageRGB8 out(lr.width, lr.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const int v = static_cast<int>(lr.pixels[i]) + static_cast<int>(residual.pixels[i]) - 127;
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    return out;
}

}  // namespace histosr
