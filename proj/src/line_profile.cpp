#include "histosr/line_profile.hpp"

#include <cmath>
#include <cstdlib>

namespace histosr {

std::vector<std::pair<int, int>> bresenham_line(int x0, int y0, int x1, int y1) {
    std::vector<std::pair<int, int>> pts;
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    for (;;) {
        pts.emplace_back(x, y);
        if (x == x1 && y == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
    return pts;
}

std::vector<ProfileSample> line_profile(const ImageRGB8& a, const ImageRGB8& b, int x0, int y0,
                                        int x1, int y1) {
    if (!a.same_size(b)) {
        throw ShapeError("line_profile: images differ in size, " + a.size_str() + " vs " +
                         b.size_str());
    }
    auto inside = [&](int x, int y) { return x >= 0 && x < a.width && y >= 0 && y < a.height; };
    if (!inside(x0, y0) || !inside(x1, y1)) {
        throw ConfigError("line_profile: endpoint outside image " + a.size_str());
    }
    const auto pts = bresenham_line(x0, y0, x1, y1);
    std::vector<ProfileSample> out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto [x, y] = pts[i];
        out.push_back({static_cast<int>(i), x, y, a.at(x, y, 0), b.at(x, y, 0)});
    }
    return out;
}

}  // namespace histosr
