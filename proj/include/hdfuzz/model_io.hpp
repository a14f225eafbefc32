#pragma once

#include <cstdint>
#include <cstddef>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hdfuzz/errors.hpp"
#include "hdfuzz/model.hpp"

namespace hdfuzz {

/// Model file layout (all integers little-endian):
///   0   u8[4]  magic "HDCM"
///   4   u32    format version (currently 1)
///   8   u64    master seed
///   16  u64    dimension D
///   24  u32    width W
///   28  u32    height H
///   32  u32    gray levels L
///   36  u32    class count C
///   40  u64[C] per-class trained counts
///   ..  i32[C*D] per-class accumulators (class-major)
///   ..  i8[C*D]  per-class bipolar references (class-major)
/// Untrained classes are stored as all-zero rows. Item memories are not
/// stored; they are regenerated from (seed, W, H, L, D) on load.

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_model(const HdcModel& model) {
    const std::size_t d = model.dim();
    const std::size_t C = model.num_classes();
    std::vector<std::uint8_t> out;
    out.reserve(40 + C * 8 + C * d * 5);
    out.insert(out.end(), {'H', 'D', 'C', 'M'});
    detail::put_u32(out, kModelFormatVersion);
    detail::put_u64(out, model.seed());
    detail::put_u64(out, d);
    detail::put_u32(out, model.memories().width);
    detail::put_u32(out, model.memories().height);
    detail::put_u32(out, model.memories().levels);
    detail::put_u32(out, static_cast<std::uint32_t>(C));
    for (const ClassMemory& cm : model.am().classes) detail::put_u64(out, cm.trained_count);
    for (const ClassMemory& cm : model.am().classes) {
        if (cm.accumulator.dim() == 0) {
            out.insert(out.end(), d * 4, 0);
            continue;
        }
        for (std::int32_t v : cm.accumulator.elems)
            detail::put_u32(out, static_cast<std::uint32_t>(v));
    }
    for (const ClassMemory& cm : model.am().classes) {
        if (cm.reference.dim() == 0) {
            out.insert(out.end(), d, 0);
            continue;
        }
        for (std::int8_t v : cm.reference.elems)
            out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

inline HdcModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 40) throw FormatError("model file: too short for header");
    if (std::memcmp(bytes.data(), "HDCM", 4) != 0)
        throw FormatError("model file: bad magic (want \"HDCM\")");
    const std::uint32_t version = detail::get_u32(bytes, 4);
    if (version != kModelFormatVersion)
        throw FormatError("model file: unsupported format version " + std::to_string(version));
    const std::uint64_t seed = detail::get_u64(bytes, 8);
    const std::uint64_t d = detail::get_u64(bytes, 16);
    const std::uint32_t w = detail::get_u32(bytes, 24);
    const std::uint32_t h = detail::get_u32(bytes, 28);
    const std::uint32_t levels = detail::get_u32(bytes, 32);
    const std::uint32_t C = detail::get_u32(bytes, 36);
    if (d == 0 || w == 0 || h == 0 || levels == 0 || C == 0)
        throw FormatError("model file: zero-sized field in header");
    if (d > (1ull << 31))
        throw FormatError("model file: implausible dimension " + std::to_string(d));
    if (C > (1u << 16))
        throw FormatError("model file: implausible class count " + std::to_string(C));
    const std::uint64_t expect = 40 + static_cast<std::uint64_t>(C) * 8 + C * d * 5;
    if (bytes.size() != expect)
        throw FormatError("model file: size is " + std::to_string(bytes.size()) +
                          " bytes, header implies " + std::to_string(expect));
    HdcModel model = HdcModel::create(seed, w, h, levels, static_cast<std::size_t>(d), C);
    std::size_t off = 40;
    std::vector<std::uint64_t> counts(C);
    for (std::uint32_t c = 0; c < C; ++c, off += 8) counts[c] = detail::get_u64(bytes, off);
    for (std::uint32_t c = 0; c < C; ++c) {
        ClassMemory& cm = model.am().classes[c];
        cm.trained_count = counts[c];
        if (counts[c] == 0) {
            off += d * 4;
            continue;
        }
        cm.accumulator = AccumulatorVector(static_cast<std::size_t>(d));
        for (std::uint64_t i = 0; i < d; ++i, off += 4)
            cm.accumulator.elems[i] = static_cast<std::int32_t>(detail::get_u32(bytes, off));
    }
    for (std::uint32_t c = 0; c < C; ++c) {
        ClassMemory& cm = model.am().classes[c];
        if (cm.trained_count == 0) {
            off += d;
            continue;
        }
        cm.reference.elems.resize(static_cast<std::size_t>(d));
        for (std::uint64_t i = 0; i < d; ++i, ++off) {
            const std::int8_t v = static_cast<std::int8_t>(bytes[off]);
            if (v != 1 && v != -1)
                throw FormatError("model file: reference element " + std::to_string(i) +
                                  " of class " + std::to_string(c) + " is not bipolar");
            cm.reference.elems[i] = v;
        }
    }
    return model;
}

inline void save_model(const HdcModel& model, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline HdcModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    try {
        return deserialize_model(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace hdfuzz
