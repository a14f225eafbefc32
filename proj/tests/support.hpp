#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hdfuzz/dataset.hpp"
#include "hdfuzz/image.hpp"
#include "hdfuzz/model.hpp"
#include "hdfuzz/rng.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("HDFUZZ_DATA")) return env;
    return HDFUZZ_DATA_DIR;
}

inline bool have_mnist() {
    namespace fs = std::filesystem;
    const fs::path d = data_dir();
    return fs::exists(d / "train-images-idx3-ubyte") && fs::exists(d / "train-labels-idx1-ubyte") &&
           fs::exists(d / "t10k-images-idx3-ubyte") && fs::exists(d / "t10k-labels-idx1-ubyte");
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("hdfuzz_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

inline hdfuzz::Image random_image(hdfuzz::RngStream& rng, std::uint32_t w, std::uint32_t h) {
    hdfuzz::Image img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_below(256));
    return img;
}

/// Small synthetic classification task: `per_class` random prototype
/// images per class, perturbed copies as the training set. Gives the
/// fuzzer and CLI something dataset-independent to chew on.
struct SyntheticTask {
    std::vector<hdfuzz::Image> train_images;
    std::vector<std::uint8_t> train_labels;
    std::vector<hdfuzz::Image> test_images;
    std::vector<std::uint8_t> test_labels;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    unsigned classes = 0;
};

inline SyntheticTask make_synthetic_task(std::uint64_t seed, std::uint32_t w = 8, std::uint32_t h = 8,
                                         unsigned classes = 3, unsigned train_per_class = 20,
                                         unsigned test_per_class = 10) {
    SyntheticTask task;
    task.width = w;
    task.height = h;
    task.classes = classes;
    hdfuzz::RngStream rng = hdfuzz::RngStream::derive(seed, "synthetic");
    std::vector<hdfuzz::Image> prototypes;
    for (unsigned c = 0; c < classes; ++c) prototypes.push_back(random_image(rng, w, h));
    auto emit = [&](std::vector<hdfuzz::Image>& images, std::vector<std::uint8_t>& labels,
                    unsigned count) {
        for (unsigned c = 0; c < classes; ++c) {
            for (unsigned i = 0; i < count; ++i) {
                hdfuzz::Image img = prototypes[c];
                // Value item vectors are independent per gray level, so
                // class evidence is exact pixel matches; keep the noise
                // narrow so the prototypes stay recoverable.
                for (auto& p : img.pixels) {
                    const long long noisy =
                        static_cast<long long>(p) + static_cast<long long>(rng.next_below(5)) - 2;
                    p = static_cast<std::uint8_t>(noisy < 0 ? 0 : noisy > 255 ? 255 : noisy);
                }
                images.push_back(std::move(img));
                labels.push_back(static_cast<std::uint8_t>(c));
            }
        }
    };
    emit(task.train_images, task.train_labels, train_per_class);
    emit(task.test_images, task.test_labels, test_per_class);
    return task;
}

inline hdfuzz::HdcModel make_synthetic_model(const SyntheticTask& task, std::uint64_t seed = 17,
                                             std::size_t d = 2048) {
    hdfuzz::HdcModel model =
        hdfuzz::HdcModel::create(seed, task.width, task.height, 256, d, task.classes);
    model.train(task.train_images, task.train_labels, 1);
    return model;
}

/// IDX3 byte stream for a list of equal-size images.
inline std::vector<std::uint8_t> idx3_bytes(const std::vector<hdfuzz::Image>& images) {
    const std::uint32_t rows = images.empty() ? 1 : images.front().height;
    const std::uint32_t cols = images.empty() ? 1 : images.front().width;
    auto be32 = [](std::vector<std::uint8_t>& out, std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    std::vector<std::uint8_t> out;
    be32(out, 0x00000803u);
    be32(out, static_cast<std::uint32_t>(images.size()));
    be32(out, rows);
    be32(out, cols);
    for (const auto& img : images) out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> idx1_bytes(const std::vector<std::uint8_t>& labels) {
    auto be32 = [](std::vector<std::uint8_t>& out, std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    std::vector<std::uint8_t> out;
    be32(out, 0x00000801u);
    be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace testsupport
