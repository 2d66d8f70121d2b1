#include "histosr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "histosr/rng.hpp"

namespace histosr {

namespace {

// Smooth value noise: a coarse grid of uniform draws, bilinearly interpolated.
// Grid values are drawn row-major so the field is a fixed function of the
// stream state.
struct ValueNoise {
    int gw = 0, gh = 0, cell = 1;
    std::vector<float> grid;

    ValueNoise(int width, int height, int cell_px, Rng& rng) : cell(cell_px) {
        gw = width / cell_px + 2;
        gh = height / cell_px + 2;
        grid.resize(static_cast<std::size_t>(gw) * gh);
        for (auto& v : grid) v = static_cast<float>(rng.uniform() * 2.0 - 1.0);  // [-1, 1)
    }

    float at(int x, int y) const {
        const float fx = static_cast<float>(x) / cell;
        const float fy = static_cast<float>(y) / cell;
        const int gx = static_cast<int>(fx);
        const int gy = static_cast<int>(fy);
        const float tx = fx - gx;
        const float ty = fy - gy;
        auto g = [&](int ix, int iy) { return grid[static_cast<std::size_t>(iy) * gw + ix]; };
        const float top = g(gx, gy) * (1 - tx) + g(gx + 1, gy) * tx;
        const float bot = g(gx, gy + 1) * (1 - tx) + g(gx + 1, gy + 1) * tx;
        return top * (1 - ty) + bot * ty;
    }
};

struct Ellipse {
    float cx, cy, rx, ry, cos_a, sin_a;

    // Normalized squared radius: < 1 inside.
    float dist2(float x, float y) const {
        const float dx = x - cx, dy = y - cy;
        const float u = (dx * cos_a + dy * sin_a) / rx;
        const float v = (-dx * sin_a + dy * cos_a) / ry;
        return u * u + v * v;
    }
};

inline float smoothstep(float lo, float hi, float x) {
    const float t = std::clamp((x - lo) / (hi - lo), 0.0f, 1.0f);
    return t * t * (3.0f - 2.0f * t);
}

void blend(float* px, const float rgb[3], float alpha) {
    for (int ch = 0; ch < 3; ++ch) px[ch] += (rgb[ch] - px[ch]) * alpha;
}

Ellipse random_ellipse(Rng& rng, int width, int height, double rmin, double rmax) {
    Ellipse e;
    e.cx = static_cast<float>(rng.uniform() * width);
    e.cy = static_cast<float>(rng.uniform() * height);
    e.rx = static_cast<float>(rmin + rng.uniform() * (rmax - rmin));
    e.ry = static_cast<float>(rmin + rng.uniform() * (rmax - rmin));
    const double a = rng.uniform() * 3.14159265358979323846;
    e.cos_a = static_cast<float>(std::cos(a));
    e.sin_a = static_cast<float>(std::sin(a));
    return e;
}

// Stamp an ellipse interior with a sub-pixel-soft rim.
template <typename Fn>
void stamp(const Ellipse& e, int width, int height, Fn&& body) {
    const float rmax = std::max(e.rx, e.ry);
    const int x0 = std::max(0, static_cast<int>(e.cx - rmax - 2));
    const int x1 = std::min(width - 1, static_cast<int>(e.cx + rmax + 2));
    const int y0 = std::max(0, static_cast<int>(e.cy - rmax - 2));
    const int y1 = std::min(height - 1, static_cast<int>(e.cy + rmax + 2));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const float d2 = e.dist2(static_cast<float>(x), static_cast<float>(y));
            if (d2 < 1.0f) body(x, y, d2);
        }
    }
}

// A 40X-style field: cells are a few pixels across with crisp, high-contrast
// edges, so factor-2 degradation wipes out real pixel-level detail and the
// residual image carries a strong signal rather than an all-grey one.
ImageRGB8 synth_one(int width, int height, Rng& rng) {
    const float base_rgb[3] = {243.0f, 214.0f, 233.0f};     // eosin-bright field
    const float stroma_rgb[3] = {229.0f, 178.0f, 206.0f};   // deeper pink patches
    const float lumen_rgb[3] = {252.0f, 248.0f, 252.0f};

    std::vector<float> buf(static_cast<std::size_t>(width) * height * 3);
    const ValueNoise drift(width, height, 24, rng);
    const ValueNoise grain(width, height, 6, rng);
    const ValueNoise fine(width, height, 2, rng);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            float* px = &buf[(static_cast<std::size_t>(y) * width + x) * 3];
            const float d = drift.at(x, y) * 7.0f;
            px[0] = base_rgb[0] + d;
            px[1] = base_rgb[1] + d * 1.4f;
            px[2] = base_rgb[2] + d * 0.8f;
        }
    }

    // Broad stromal patches and pale lumen openings under the cells.
    const int n_patches = std::max(1, width * height / 6000);
    for (int i = 0; i < n_patches; ++i) {
        const Ellipse e = random_ellipse(rng, width, height, 10.0, 30.0);
        const bool lumen = rng.uniform() < 0.3;
        stamp(e, width, height, [&](int x, int y, float d2) {
            blend(&buf[(static_cast<std::size_t>(y) * width + x) * 3],
                  lumen ? lumen_rgb : stroma_rgb, 0.8f * (1.0f - smoothstep(0.75f, 1.0f, d2)));
        });
    }

    // Scattered red blood cells: small, bright, strongly eosinophilic.
    const int n_rbc = std::max(1, width * height / 900);
    for (int i = 0; i < n_rbc; ++i) {
        Ellipse e = random_ellipse(rng, width, height, 1.6, 3.2);
        const float rbc_rgb[3] = {static_cast<float>(198.0 + rng.uniform() * 30.0),
                                  static_cast<float>(58.0 + rng.uniform() * 24.0),
                                  static_cast<float>(66.0 + rng.uniform() * 24.0)};
        stamp(e, width, height, [&](int x, int y, float d2) {
            blend(&buf[(static_cast<std::size_t>(y) * width + x) * 3], rbc_rgb,
                  0.95f * (1.0f - smoothstep(0.8f, 1.0f, d2)));
        });
    }

    // Dense cellular field: cytoplasm disc, thin dark membrane, large dark
    // nucleus with chromatin dots. Cells are only a few pixels across, packed
    // to near-full coverage, and the rims are sub-pixel soft, i.e. sharp at
    // the raster scale.
    const int n_cells = std::max(6, width * height / 24);
    for (int i = 0; i < n_cells; ++i) {
        const Ellipse cell = random_ellipse(rng, width, height, 2.2, 5.0);
        const float tone = static_cast<float>(rng.uniform() * 24.0 - 12.0);
        const float cyto_rgb[3] = {233.0f + tone, 176.0f + tone, 206.0f + tone};
        const float membrane_rgb[3] = {138.0f + tone, 76.0f + tone, 130.0f + tone};
        const float nucleus_rgb[3] = {static_cast<float>(52.0 + rng.uniform() * 24.0),
                                      static_cast<float>(34.0 + rng.uniform() * 16.0),
                                      static_cast<float>(98.0 + rng.uniform() * 28.0)};
        const float chromatin_rgb[3] = {26.0f, 16.0f, 58.0f};

        Ellipse nuc = cell;
        nuc.rx = cell.rx * 0.6f;
        nuc.ry = cell.ry * 0.6f;
        nuc.cx += static_cast<float>((rng.uniform() - 0.5) * cell.rx * 0.4);
        nuc.cy += static_cast<float>((rng.uniform() - 0.5) * cell.ry * 0.4);

        stamp(cell, width, height, [&](int x, int y, float d2) {
            float* px = &buf[(static_cast<std::size_t>(y) * width + x) * 3];
            blend(px, cyto_rgb, 0.92f * (1.0f - smoothstep(0.9f, 1.0f, d2)));
            const float ring = smoothstep(0.6f, 0.72f, d2) * (1.0f - smoothstep(0.94f, 1.0f, d2));
            if (ring > 0.0f) blend(px, membrane_rgb, 0.95f * ring);
        });
        stamp(nuc, width, height, [&](int x, int y, float d2) {
            float* px = &buf[(static_cast<std::size_t>(y) * width + x) * 3];
            blend(px, nucleus_rgb, 0.97f * (1.0f - smoothstep(0.88f, 1.0f, d2)));
        });
        const int n_dots = 3 + static_cast<int>(rng.uniform_below(3));
        for (int d = 0; d < n_dots; ++d) {
            Ellipse dot;
            dot.cx = nuc.cx + static_cast<float>((rng.uniform() - 0.5) * nuc.rx * 1.3);
            dot.cy = nuc.cy + static_cast<float>((rng.uniform() - 0.5) * nuc.ry * 1.3);
            dot.rx = dot.ry = static_cast<float>(0.6 + rng.uniform() * 0.9);
            dot.cos_a = 1.0f;
            dot.sin_a = 0.0f;
            stamp(dot, width, height, [&](int x, int y, float d2) {
                blend(&buf[(static_cast<std::size_t>(y) * width + x) * 3], chromatin_rgb,
                      0.92f * (1.0f - smoothstep(0.7f, 1.0f, d2)));
            });
        }
    }

    // Band-limited grain on top.
    ImageRGB8 out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const float g = grain.at(x, y) * 6.0f + fine.at(x, y) * 9.0f;
            const float* px = &buf[(static_cast<std::size_t>(y) * width + x) * 3];
            for (int ch = 0; ch < 3; ++ch) {
                out.at(x, y, ch) = quantize_byte(static_cast<double>(px[ch] + g));
            }
        }
    }
    return out;
}

}  // namespace

std::vector<ImageRGB8> synth_generate(int n, int width, int height, std::uint64_t seed) {
    if (n < 1) throw ConfigError("synth_generate: count must be >= 1");
    if (width < 1 || height < 1) {
        throw ConfigError("synth_generate: size must be at least 1x1, got " +
                          std::to_string(width) + "x" + std::to_string(height));
    }
    std::vector<ImageRGB8> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(i));
        out.push_back(synth_one(width, height, rng));
    }
    return out;
}

}  // namespace histosr
