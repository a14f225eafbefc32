#pragma once

#include <cstdint>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include "hdfuzz/errors.hpp"
#include "hdfuzz/image.hpp"

namespace hdfuzz {

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<std::uint8_t> labels;
    std::string name;

    std::size_t size() const noexcept { return images.size(); }

    /// Zips images with labels. Counts must match; every label must be
    /// below num_classes.
    static LabeledDataset make(std::vector<Image> images, std::vector<std::uint8_t> labels,
                               std::string name, unsigned num_classes = 10) {
        if (images.size() != labels.size())
            throw FormatError(name + ": " + std::to_string(images.size()) + " images but " +
                              std::to_string(labels.size()) + " labels");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] >= num_classes)
                throw FormatError(name + ": label " + std::to_string(labels[i]) + " at index " +
                                  std::to_string(i) + " out of range (classes: " +
                                  std::to_string(num_classes) + ")");
        LabeledDataset ds;
        ds.images = std::move(images);
        ds.labels = std::move(labels);
        ds.name = std::move(name);
        return ds;
    }
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t off) {
    return (static_cast<std::uint32_t>(bytes[off]) << 24) |
           (static_cast<std::uint32_t>(bytes[off + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[off + 3]);
}

} // namespace detail

/// Parses an IDX3 unsigned-byte image stream (the MNIST image layout):
/// big-endian magic 0x00000803, count, rows, cols, then count*rows*cols
/// pixel bytes, row-major. The byte count must match the header exactly.
inline std::vector<Image> parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16)
        throw FormatError("IDX3: stream too short for header (" + std::to_string(bytes.size()) +
                          " bytes, need 16)");
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != 0x00000803u) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "0x%08x", magic);
        throw FormatError(std::string("IDX3: bad magic ") + buf + " (want 0x00000803)");
    }
    const std::uint64_t count = detail::read_be32(bytes, 4);
    const std::uint32_t rows = detail::read_be32(bytes, 8);
    const std::uint32_t cols = detail::read_be32(bytes, 12);
    if (rows == 0 || cols == 0)
        throw FormatError("IDX3: zero image dimension (" + std::to_string(rows) + "x" +
                          std::to_string(cols) + ")");
    const std::uint64_t stride64 = static_cast<std::uint64_t>(rows) * cols;
    const std::uint64_t have = bytes.size() - 16;
    if (count > have / stride64 || count * stride64 != have)
        throw FormatError("IDX3: payload is " + std::to_string(bytes.size()) +
                          " bytes, header implies " + std::to_string(count) + "*" +
                          std::to_string(rows) + "*" + std::to_string(cols) + "+16");
    std::vector<Image> out;
    out.reserve(count);
    const std::size_t stride = static_cast<std::size_t>(rows) * cols;
    std::size_t off = 16;
    for (std::uint64_t i = 0; i < count; ++i, off += stride)
        out.emplace_back(cols, rows,
                         std::vector<std::uint8_t>(bytes.begin() + off, bytes.begin() + off + stride));
    return out;
}

/// Parses an IDX1 unsigned-byte label stream: big-endian magic
/// 0x00000801, count, then count label bytes. Exact length required.
inline std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8)
        throw FormatError("IDX1: stream too short for header (" + std::to_string(bytes.size()) +
                          " bytes, need 8)");
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != 0x00000801u) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "0x%08x", magic);
        throw FormatError(std::string("IDX1: bad magic ") + buf + " (want 0x00000801)");
    }
    const std::uint64_t count = detail::read_be32(bytes, 4);
    if (bytes.size() != 8 + count)
        throw FormatError("IDX1: payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(8 + count));
    return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.end());
}

/// Inflates a gzip stream (must start with the 0x1f 0x8b magic).
inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw FormatError("gzip: inflate init failed");
    std::vector<std::uint8_t> out;
    out.resize(std::max<std::size_t>(bytes.size() * 4, 1 << 16));
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::size_t written = 0;
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        rc = inflate(&zs, Z_NO_FLUSH);
        written = out.size() - zs.avail_out;
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError(std::string("gzip: corrupt stream (") +
                              (zs.msg ? zs.msg : "inflate error") + ")");
        }
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out > 0) {
            inflateEnd(&zs);
            throw FormatError("gzip: truncated stream");
        }
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

/// Reads a file, transparently gunzipping when it starts with the
/// two-byte gzip magic.
inline std::vector<std::uint8_t> read_maybe_gzipped(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes);
    return bytes;
}

inline std::vector<Image> load_idx_images(const std::filesystem::path& path) {
    try {
        return parse_idx_images(read_maybe_gzipped(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
    try {
        return parse_idx_labels(read_maybe_gzipped(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline LabeledDataset load_dataset(const std::filesystem::path& images_path,
                                   const std::filesystem::path& labels_path, std::string name,
                                   unsigned num_classes = 10) {
    return LabeledDataset::make(load_idx_images(images_path), load_idx_labels(labels_path),
                                std::move(name), num_classes);
}

/// Serializes an image as binary PGM (P5, maxval 255).
inline std::vector<std::uint8_t> to_pgm(const Image& img) {
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline void write_pgm(const Image& img, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = to_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

/// Minimal binary-PGM reader: P5, maxval <= 255, '#' comments allowed in
/// the header. Counterpart of write_pgm; accepts any conforming P5 file.
inline Image parse_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto peek = [&]() -> int { return pos < bytes.size() ? bytes[pos] : -1; };
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (bytes[pos] == ' ' || bytes[pos] == '\t' || bytes[pos] == '\r' ||
                       bytes[pos] == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) -> std::uint64_t {
        skip_space();
        if (peek() < '0' || peek() > '9')
            throw FormatError(std::string("PGM: expected ") + what);
        std::uint64_t v = 0;
        while (peek() >= '0' && peek() <= '9') {
            v = v * 10 + static_cast<std::uint64_t>(bytes[pos] - '0');
            if (v > 0xffffffffu) throw FormatError(std::string("PGM: ") + what + " overflows");
            ++pos;
        }
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw FormatError("PGM: missing P5 signature");
    pos = 2;
    const std::uint64_t width = read_uint("width");
    const std::uint64_t height = read_uint("height");
    const std::uint64_t maxval = read_uint("maxval");
    if (width == 0 || height == 0) throw FormatError("PGM: zero dimension");
    if (maxval == 0 || maxval > 255)
        throw FormatError("PGM: unsupported maxval " + std::to_string(maxval));
    if (pos >= bytes.size() ||
        (bytes[pos] != ' ' && bytes[pos] != '\t' && bytes[pos] != '\r' && bytes[pos] != '\n'))
        throw FormatError("PGM: missing whitespace after maxval");
    ++pos;
    const std::uint64_t need = width * height;
    if (bytes.size() - pos != need)
        throw FormatError("PGM: pixel payload is " + std::to_string(bytes.size() - pos) +
                          " bytes, header implies " + std::to_string(need));
    return Image(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height),
                 std::vector<std::uint8_t>(bytes.begin() + pos, bytes.end()));
}

inline Image load_pgm(const std::filesystem::path& path) {
    try {
        return parse_pgm(read_file_bytes(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace hdfuzz
