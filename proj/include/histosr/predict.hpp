#pragma once

#include "histosr/image.hpp"
#include "histosr/unet.hpp"

namespace histosr {

// Predicted shifted-residual image for a degraded input: normalize to [0,1],
// run the net, scale back to bytes. An untrained model with a zeroed final
// layer emits sigma(0) = 0.5, i.e. residual 127/128 (no change).
inline ImageRGB8 predict_residual(const ModelWeights& w, const ImageRGB8& lr) {
    const int div = w.config.divisor();
    if (lr.width < 1 || lr.height < 1 || lr.width % div != 0 || lr.height % div != 0) {
        throw ConfigError("predict: image " + lr.size_str() +
                          " must have dimensions divisible by " + std::to_string(div));
    }
    const Tensor out = unet_forward(w, to_tensor(lr), nullptr);
    return to_image(out);
}

}  // namespace histosr
