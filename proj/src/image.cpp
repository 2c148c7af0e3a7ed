#include "umae/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "umae/errors.hpp"

namespace umae {

namespace {

// Reads one PPM header token, skipping whitespace and '#' comments.
std::string next_header_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) {
                return tok;
            }
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) {
        throw ParseError("truncated ppm header");
    }
    return tok;
}

int parse_header_int(const std::string& tok) {
    size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("bad ppm header token: " + tok);
    }
    if (pos != tok.size() || value <= 0) {
        throw ParseError("bad ppm header token: " + tok);
    }
    return value;
}

} // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    if (next_header_token(in) != "P6") {
        throw ParseError("not a P6 ppm: " + path.string());
    }
    Image img;
    img.width = parse_header_int(next_header_token(in));
    img.height = parse_header_int(next_header_token(in));
    const int maxval = parse_header_int(next_header_token(in));
    if (maxval != 255) {
        throw ParseError("unsupported ppm maxval " + std::to_string(maxval));
    }
    // The header ends with exactly one whitespace byte before the raster.
    img.pixels.resize(static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw ParseError("truncated ppm raster: " + path.string());
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3) {
        throw ValidationError("image buffer does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

namespace {

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb color) {
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            uint8_t* px = img.at(x, y);
            px[0] = color.r;
            px[1] = color.g;
            px[2] = color.b;
        }
    }
}

} // namespace

Image render_highlights(const Image& image, std::span<const EntityRegion> regions, int thickness) {
    if (thickness <= 0) {
        throw ValidationError("outline thickness must be positive");
    }
    Image out = image;
    for (const EntityRegion& region : regions) {
        if (region.x0 < 0 || region.y0 < 0 || region.x1 > image.width || region.y1 > image.height ||
            region.x0 >= region.x1 || region.y0 >= region.y1) {
            throw OutOfBounds("region " + region.entity_id + " does not fit a " + std::to_string(image.width) +
                              "x" + std::to_string(image.height) + " image");
        }
        const Rgb color = kHighlightPalette[static_cast<size_t>(region.color_index) % kHighlightPalette.size()];
        // Border bands clipped so thick outlines on small boxes degrade to a
        // filled rectangle instead of painting outside the bbox.
        const int t = thickness;
        const int top_end = std::min(region.y0 + t, region.y1);
        const int bottom_start = std::max(region.y1 - t, region.y0);
        const int left_end = std::min(region.x0 + t, region.x1);
        const int right_start = std::max(region.x1 - t, region.x0);
        fill_rect(out, region.x0, region.y0, region.x1, top_end, color);
        fill_rect(out, region.x0, bottom_start, region.x1, region.y1, color);
        fill_rect(out, region.x0, region.y0, left_end, region.y1, color);
        fill_rect(out, right_start, region.y0, region.x1, region.y1, color);
    }
    return out;
}

} // namespace umae
