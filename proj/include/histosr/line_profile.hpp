#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "histosr/image.hpp"

namespace histosr {

// Integer pixel walk from (x0, y0) to (x1, y1), endpoints inclusive.
std::vector<std::pair<int, int>> bresenham_line(int x0, int y0, int x1, int y1);

struct ProfileSample {
    int index, x, y;
    std::uint8_t red_a, red_b;
};

// Red-channel values of both images along the segment's Bresenham traversal.
std::vector<ProfileSample> line_profile(const ImageRGB8& a, const ImageRGB8& b, int x0, int y0,
                                        int x1, int y1);

}  // namespace histosr
