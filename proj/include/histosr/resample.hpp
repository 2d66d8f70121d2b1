#pragma once

#include "histosr/image.hpp"

namespace histosr {

// Separable cubic-convolution resampling with the Catmull-Rom kernel
// (a = -0.5). Destination pixel centers map to source coordinates via
// src = (dst + 0.5) * (src_size / dst_size) - 0.5; taps outside the image
// clamp to the nearest edge sample. Channels are filtered independently in
// double precision and rounded half away from zero at the end.
ImageRGB8 bicubic_resample(const ImageRGB8& img, int out_w, int out_h);

// Catmull-Rom weights for the four taps at floor(x)-1 .. floor(x)+2, given
// the fractional phase f = x - floor(x). Weights sum to 1 at every phase.
void catmull_rom_weights(double f, double w[4]);

// Downsample by `factor` in each dimension, then upsample back: same-size
// output with the high-frequency content lost in transit.
ImageRGB8 degrade(const ImageRGB8& img, int factor = 2);

}  // namespace histosr
