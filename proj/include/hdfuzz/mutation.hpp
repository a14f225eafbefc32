#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hdfuzz/errors.hpp"
#include "hdfuzz/image.hpp"
#include "hdfuzz/rng.hpp"

namespace hdfuzz {

enum class MutationKind {
    row_rand,     // one uniformly chosen row rewritten with uniform bytes
    col_rand,     // one uniformly chosen column rewritten with uniform bytes
    row_col_rand, // coin flip, then row_rand or col_rand
    rand,         // every pixel offset by a uniform integer in [-delta, +delta]
    gauss,        // every pixel offset by rounded N(0, sigma^2) noise
    shift,        // whole-image translation by `step` pixels, zero fill
};

struct MutationStrategy {
    MutationKind kind = MutationKind::gauss;
    double gauss_sigma = 2.0; // gray levels
    unsigned rand_delta = 3;  // gray levels
    unsigned shift_step = 1;  // pixels

    void validate() const {
        if (gauss_sigma <= 0.0) throw ConfigError("gauss_sigma must be positive");
        if (rand_delta == 0) throw ConfigError("rand_delta must be positive");
        if (shift_step == 0) throw ConfigError("shift_step must be positive");
    }
};

inline std::string_view to_string(MutationKind k) {
    switch (k) {
        case MutationKind::row_rand: return "row_rand";
        case MutationKind::col_rand: return "col_rand";
        case MutationKind::row_col_rand: return "row_col_rand";
        case MutationKind::rand: return "rand";
        case MutationKind::gauss: return "gauss";
        case MutationKind::shift: return "shift";
    }
    return "unknown";
}

inline MutationKind mutation_kind_from_string(std::string_view s) {
    if (s == "row_rand") return MutationKind::row_rand;
    if (s == "col_rand") return MutationKind::col_rand;
    if (s == "row_col_rand") return MutationKind::row_col_rand;
    if (s == "rand") return MutationKind::rand;
    if (s == "gauss") return MutationKind::gauss;
    if (s == "shift") return MutationKind::shift;
    throw ConfigError("unknown mutation strategy \"" + std::string(s) +
                      "\" (choose row_rand, col_rand, row_col_rand, rand, gauss, shift)");
}

namespace detail {

inline std::uint8_t clamp_pixel(long long v) {
    return static_cast<std::uint8_t>(std::clamp<long long>(v, 0, 255));
}

inline void mutate_row(Image& img, RngStream& rng) {
    const std::uint32_t r = static_cast<std::uint32_t>(rng.next_below(img.height));
    for (std::uint32_t x = 0; x < img.width; ++x)
        img.pixels[static_cast<std::size_t>(r) * img.width + x] =
            static_cast<std::uint8_t>(rng.next_below(256));
}

inline void mutate_col(Image& img, RngStream& rng) {
    const std::uint32_t c = static_cast<std::uint32_t>(rng.next_below(img.width));
    for (std::uint32_t y = 0; y < img.height; ++y)
        img.pixels[static_cast<std::size_t>(y) * img.width + c] =
            static_cast<std::uint8_t>(rng.next_below(256));
}

/// dx, dy in pixels; out[x][y] = in[x - dx][y - dy], zero outside.
inline Image shift_image(const Image& img, long long dx, long long dy) {
    Image out(img.width, img.height, 0);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        const long long sy = static_cast<long long>(y) - dy;
        if (sy < 0 || sy >= static_cast<long long>(img.height)) continue;
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const long long sx = static_cast<long long>(x) - dx;
            if (sx < 0 || sx >= static_cast<long long>(img.width)) continue;
            out.pixels[static_cast<std::size_t>(y) * img.width + x] =
                img.pixels[static_cast<std::size_t>(sy) * img.width + static_cast<std::size_t>(sx)];
        }
    }
    return out;
}

} // namespace detail

/// Applies one mutation and returns the result; the input is not
/// modified. Pixel writes and random draws happen in raster order, so a
/// given (image, strategy, stream state) always produces the same
/// output.
inline Image mutate(const Image& img, const MutationStrategy& strategy, RngStream& rng) {
    strategy.validate();
    switch (strategy.kind) {
        case MutationKind::row_rand: {
            Image out = img;
            detail::mutate_row(out, rng);
            return out;
        }
        case MutationKind::col_rand: {
            Image out = img;
            detail::mutate_col(out, rng);
            return out;
        }
        case MutationKind::row_col_rand: {
            Image out = img;
            if (rng.next_below(2) == 0)
                detail::mutate_row(out, rng);
            else
                detail::mutate_col(out, rng);
            return out;
        }
        case MutationKind::rand: {
            Image out = img;
            const std::uint64_t span = 2ull * strategy.rand_delta + 1;
            for (std::uint8_t& p : out.pixels) {
                const long long off =
                    static_cast<long long>(rng.next_below(span)) - strategy.rand_delta;
                p = detail::clamp_pixel(static_cast<long long>(p) + off);
            }
            return out;
        }
        case MutationKind::gauss: {
            Image out = img;
            for (std::uint8_t& p : out.pixels) {
                const long long off = std::llround(rng.next_gaussian() * strategy.gauss_sigma);
                p = detail::clamp_pixel(static_cast<long long>(p) + off);
            }
            return out;
        }
        case MutationKind::shift: {
            const long long step = static_cast<long long>(strategy.shift_step);
            switch (rng.next_below(4)) {
                case 0: return detail::shift_image(img, 0, -step); // up
                case 1: return detail::shift_image(img, 0, step);  // down
                case 2: return detail::shift_image(img, -step, 0); // left
                default: return detail::shift_image(img, step, 0); // right
            }
        }
    }
    throw std::logic_error("mutate: unhandled strategy");
}

} // namespace hdfuzz
