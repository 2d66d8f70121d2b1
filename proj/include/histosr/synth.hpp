#pragma once

#include <cstdint>
#include <vector>

#include "histosr/image.hpp"

namespace histosr {

// Procedural stand-in for H&E-stained villous tissue: a pink field with slow
// tonal drift, elliptical cells with darker membrane rings and purple nuclei,
// pale lumen patches, and band-limited texture noise. Image i draws from the
// child stream (seed, i), so the set is deterministic per seed and each image
// is independent of the others.
std::vector<ImageRGB8> synth_generate(int n, int width, int height, std::uint64_t seed);

}  // namespace histosr
