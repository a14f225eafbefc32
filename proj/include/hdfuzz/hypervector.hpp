#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hdfuzz/rng.hpp"

namespace hdfuzz {

/// Dense bipolar vector: every element is -1 or +1.
///
/// Stored as signed bytes. This is the reference representation; all
/// arithmetic below is exact integer arithmetic.
struct Hypervector {
    std::vector<std::int8_t> elems;

    Hypervector() = default;
    explicit Hypervector(std::vector<std::int8_t> e) : elems(std::move(e)) {}

    std::size_t dim() const noexcept { return elems.size(); }
    bool operator==(const Hypervector&) const = default;
};

/// Integer-component sum of bipolar vectors, kept exact (no saturation)
/// so that later additions and re-bipolarization stay well defined.
/// 32-bit components hold bundles of up to ~2 billion hypervectors.
struct AccumulatorVector {
    std::vector<std::int32_t> elems;

    AccumulatorVector() = default;
    explicit AccumulatorVector(std::size_t d) : elems(d, 0) {}
    explicit AccumulatorVector(std::vector<std::int32_t> e) : elems(std::move(e)) {}

    std::size_t dim() const noexcept { return elems.size(); }
    bool operator==(const AccumulatorVector&) const = default;
};

/// i.i.d. bipolar vector of dimension d; each element +/-1 with
/// probability 1/2. Consumes ceil(d/64) words from the stream, one bit
/// per element starting at the word's least significant bit.
inline Hypervector random_hv(RngStream& rng, std::size_t d) {
    if (d == 0) throw std::invalid_argument("random_hv: dimension must be >= 1");
    Hypervector hv;
    hv.elems.resize(d);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < d; ++i) {
        if ((i & 63u) == 0) word = rng.next_u64();
        hv.elems[i] = (word >> (i & 63u)) & 1u ? std::int8_t{1} : std::int8_t{-1};
    }
    return hv;
}

/// Element-wise multiplication. The result is pseudo-orthogonal to both
/// operands.
inline Hypervector bind(const Hypervector& a, const Hypervector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("bind: dimension mismatch");
    Hypervector out;
    out.elems.resize(a.dim());
    const std::int8_t* pa = a.elems.data();
    const std::int8_t* pb = b.elems.data();
    std::int8_t* po = out.elems.data();
    const std::size_t d = a.dim();
    for (std::size_t i = 0; i < d; ++i) po[i] = static_cast<std::int8_t>(pa[i] * pb[i]);
    return out;
}

inline Hypervector negate(const Hypervector& a) {
    Hypervector out;
    out.elems.resize(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out.elems[i] = static_cast<std::int8_t>(-a.elems[i]);
    return out;
}

/// acc += weight * hv, element-wise, exact.
inline void accumulate(AccumulatorVector& acc, const Hypervector& hv, std::int32_t weight = 1) {
    if (acc.dim() != hv.dim()) throw std::invalid_argument("accumulate: dimension mismatch");
    std::int32_t* pa = acc.elems.data();
    const std::int8_t* ph = hv.elems.data();
    const std::size_t d = acc.dim();
    for (std::size_t i = 0; i < d; ++i) pa[i] += weight * static_cast<std::int32_t>(ph[i]);
}

/// Element-wise sum of a nonempty list of equal-dimension hypervectors.
inline AccumulatorVector bundle(std::span<const Hypervector> vs) {
    if (vs.empty()) throw std::invalid_argument("bundle: empty operand list");
    AccumulatorVector acc(vs.front().dim());
    for (const Hypervector& hv : vs) accumulate(acc, hv);
    return acc;
}

inline AccumulatorVector bundle(const std::vector<Hypervector>& vs) {
    return bundle(std::span<const Hypervector>(vs));
}

/// Cyclic shift: out[(i+k) mod D] = a[i]. k may be negative; it is taken
/// mod D. Preserves the element multiset.
inline Hypervector permute(const Hypervector& a, long long k) {
    const std::size_t d = a.dim();
    if (d == 0) return a;
    const long long dd = static_cast<long long>(d);
    std::size_t shift = static_cast<std::size_t>(((k % dd) + dd) % dd);
    Hypervector out;
    out.elems.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t j = i + shift;
        if (j >= d) j -= d;
        out.elems[j] = a.elems[i];
    }
    return out;
}

/// Majority sign with random tie-break:
///   out[i] = -1 if acc[i] < 0, +1 if acc[i] > 0, random +/-1 if acc[i] == 0.
/// Zero entries consume the stream in index order, one draw per zero.
inline Hypervector bipolarize(const AccumulatorVector& acc, RngStream& rng) {
    Hypervector out;
    out.elems.resize(acc.dim());
    const std::int32_t* pa = acc.elems.data();
    std::int8_t* po = out.elems.data();
    const std::size_t d = acc.dim();
    for (std::size_t i = 0; i < d; ++i) {
        const std::int32_t v = pa[i];
        po[i] = v < 0 ? std::int8_t{-1} : v > 0 ? std::int8_t{1} : rng.next_sign();
    }
    return out;
}

namespace detail {

template <typename A, typename B>
inline double cosine_impl(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    // Exact 64-bit sums; safe for |elem| <= 2^31 and D <= 2^31.
    std::int64_t dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t x = a[i];
        const std::int64_t y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0 || nb == 0) throw std::domain_error("cosine: zero-norm operand");
    return static_cast<double>(dot) /
           (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
}

} // namespace detail

inline double cosine(const Hypervector& a, const Hypervector& b) {
    return detail::cosine_impl<std::int8_t, std::int8_t>(a.elems, b.elems);
}
inline double cosine(const Hypervector& a, const AccumulatorVector& b) {
    return detail::cosine_impl<std::int8_t, std::int32_t>(a.elems, b.elems);
}
inline double cosine(const AccumulatorVector& a, const Hypervector& b) {
    return detail::cosine_impl<std::int32_t, std::int8_t>(a.elems, b.elems);
}
inline double cosine(const AccumulatorVector& a, const AccumulatorVector& b) {
    return detail::cosine_impl<std::int32_t, std::int32_t>(a.elems, b.elems);
}

} // namespace hdfuzz
