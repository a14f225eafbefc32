#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hdfuzz/rng.hpp"

namespace hdfuzz {

/// W x H grayscale pixel grid, row-major, levels 0..255.
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
    Image(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> px)
        : width(w), height(h), pixels(std::move(px)) {
        if (pixels.size() != static_cast<std::size_t>(w) * h)
            throw std::invalid_argument("Image: pixel count does not match width*height");
    }

    std::size_t size() const noexcept { return pixels.size(); }

    std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(std::uint32_t x, std::uint32_t y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }

    bool operator==(const Image&) const = default;
};

/// Content fingerprint used to derive the image's encoding sub-stream.
/// Hashing the pixels (not the dataset position) makes encoding a pure
/// function of the image, which keeps training order-invariant.
inline std::uint64_t content_hash(const Image& img) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    feed(img.width, 4);
    feed(img.height, 4);
    for (std::uint8_t p : img.pixels) {
        h ^= p;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace hdfuzz
