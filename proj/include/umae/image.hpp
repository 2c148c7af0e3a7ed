#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "umae/corpus.hpp"

namespace umae {

// Interleaved 8-bit RGB buffer.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // width * height * 3

    uint8_t* at(int x, int y) {
        return pixels.data() + 3 * (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x));
    }
    const uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x));
    }
};

struct Rgb {
    uint8_t r, g, b;
};

// Fixed 8-color palette for entity highlights; regions index it modulo 8.
inline constexpr std::array<Rgb, 8> kHighlightPalette{{
    {230, 25, 75},   // red
    {60, 180, 75},   // green
    {255, 225, 25},  // yellow
    {0, 130, 200},   // blue
    {245, 130, 48},  // orange
    {145, 30, 180},  // purple
    {70, 240, 240},  // cyan
    {240, 50, 230},  // magenta
}};

// Binary PPM (P6, maxval 255). Reading accepts '#' header comments; writing
// emits the canonical "P6\n<w> <h>\n255\n" header, so write(read(x)) is
// byte-identical for canonical files.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);

// Draws a rectangular outline of palette color per region, `thickness` pixels
// wide, just inside each bbox. Interior pixels are untouched. Throws
// OutOfBounds when a bbox does not fit the image.
Image render_highlights(const Image& image, std::span<const EntityRegion> regions, int thickness);

} // namespace umae
