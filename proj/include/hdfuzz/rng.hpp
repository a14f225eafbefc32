#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace hdfuzz {

namespace detail {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 state advance + finalizer (Steele, Lea, Flood 2014).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += kGoldenGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Deterministic pseudo-random stream built on SplitMix64.
///
/// Every consumer derives a stream from a 64-bit master seed plus a
/// (name, index) pair; identical derivations replay identical sequences on
/// every platform. Only unsigned 64-bit arithmetic and IEEE double
/// addition are used, so the streams are bit-stable across compilers and
/// architectures. The exact derivation chain is documented in
/// docs/formats.md and is part of the model-file compatibility contract.
///
/// Streams are single-owner: parallel callers must derive disjoint
/// sub-streams rather than share one instance.
class RngStream {
public:
    explicit constexpr RngStream(std::uint64_t seed) noexcept : state_(seed) {}

    /// Named sub-stream: state = mix64(mix64(master ^ fnv1a64(name)) ^ index).
    static constexpr RngStream derive(std::uint64_t master_seed, std::string_view name,
                                      std::uint64_t index = 0) noexcept {
        const std::uint64_t tagged = detail::mix64(master_seed ^ detail::fnv1a64(name));
        return RngStream(detail::mix64(tagged ^ index));
    }

    constexpr std::uint64_t next_u64() noexcept {
        state_ += detail::kGoldenGamma;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Unbiased integer in [0, bound) via rejection sampling. bound >= 1.
    constexpr std::uint64_t next_below(std::uint64_t bound) noexcept {
        const std::uint64_t reject_below = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= reject_below) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    constexpr double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard-normal variate via the Irwin-Hall sum of 12 uniforms.
    /// Chosen over Box-Muller so the stream stays bit-stable: it needs no
    /// libm transcendentals, only IEEE additions. Tails truncate at +/-6.
    constexpr double next_gaussian() noexcept {
        double sum = 0.0;
        for (int i = 0; i < 12; ++i) sum += next_double();
        return sum - 6.0;
    }

    /// +1 or -1, from the low bit of the next word.
    constexpr std::int8_t next_sign() noexcept {
        return (next_u64() & 1u) ? std::int8_t{1} : std::int8_t{-1};
    }

private:
    std::uint64_t state_;
};

} // namespace hdfuzz
