#pragma once

#include <cstdint>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hdfuzz/errors.hpp"
#include "hdfuzz/fuzzer.hpp"
#include "hdfuzz/mutation.hpp"

namespace hdfuzz {

/// Everything a command run needs. JSON config files carry the same
/// keys as the struct fields; unknown keys are rejected so typos fail
/// loudly instead of silently running defaults.
struct RunConfig {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::string model = "model.hdcm";
    std::string out_dir = ".";

    std::uint64_t seed = 1;
    std::uint64_t d = 10000;
    unsigned levels = 256;
    unsigned classes = 10;
    unsigned threads = 0; // 0 = hardware concurrency (HDFUZZ_THREADS still caps)

    unsigned iter_times = 50;
    unsigned top_n = 3;
    unsigned batch = 10;
    double l2_threshold = 1.0;
    bool guided = true;
    std::string strategy = "gauss";
    double gauss_sigma = 2.0;
    unsigned rand_delta = 3;
    unsigned shift_step = 1;

    std::uint64_t inputs = 500; // fuzz slice size; 0 = whole test set
    std::uint64_t input_offset = 0;
    std::uint64_t emit_triples = 0;

    std::uint64_t defend_target = 1000; // adversarials to generate before the split
    bool replay = false;                // re-attack with stored adversarials instead of re-fuzzing
    std::int32_t retrain_weight = 1;

    FuzzConfig fuzz_config() const {
        FuzzConfig fc;
        fc.iter_times = iter_times;
        fc.top_n = top_n;
        fc.batch = batch;
        fc.l2_threshold = l2_threshold;
        fc.guided = guided;
        fc.master_seed = seed;
        fc.strategy.kind = mutation_kind_from_string(strategy);
        fc.strategy.gauss_sigma = gauss_sigma;
        fc.strategy.rand_delta = rand_delta;
        fc.strategy.shift_step = shift_step;
        fc.validate();
        return fc;
    }

    void apply_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("config: top-level JSON value must be an object");
        try {
            for (const auto& [key, value] : j.items()) {
                if (key == "train_images") train_images = value.get<std::string>();
                else if (key == "train_labels") train_labels = value.get<std::string>();
                else if (key == "test_images") test_images = value.get<std::string>();
                else if (key == "test_labels") test_labels = value.get<std::string>();
                else if (key == "model") model = value.get<std::string>();
                else if (key == "out_dir") out_dir = value.get<std::string>();
                else if (key == "seed") seed = value.get<std::uint64_t>();
                else if (key == "d") d = value.get<std::uint64_t>();
                else if (key == "levels") levels = value.get<unsigned>();
                else if (key == "classes") classes = value.get<unsigned>();
                else if (key == "threads") threads = value.get<unsigned>();
                else if (key == "iter_times") iter_times = value.get<unsigned>();
                else if (key == "top_n") top_n = value.get<unsigned>();
                else if (key == "batch") batch = value.get<unsigned>();
                else if (key == "l2_threshold") l2_threshold = value.get<double>();
                else if (key == "guided") guided = value.get<bool>();
                else if (key == "strategy") strategy = value.get<std::string>();
                else if (key == "gauss_sigma") gauss_sigma = value.get<double>();
                else if (key == "rand_delta") rand_delta = value.get<unsigned>();
                else if (key == "shift_step") shift_step = value.get<unsigned>();
                else if (key == "inputs") inputs = value.get<std::uint64_t>();
                else if (key == "input_offset") input_offset = value.get<std::uint64_t>();
                else if (key == "emit_triples") emit_triples = value.get<std::uint64_t>();
                else if (key == "defend_target") defend_target = value.get<std::uint64_t>();
                else if (key == "replay") replay = value.get<bool>();
                else if (key == "retrain_weight") retrain_weight = value.get<std::int32_t>();
                else throw ConfigError("config: unknown key \"" + key + "\"");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("config: cannot open " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: " + path.string() + ": " + e.what());
        }
        apply_json(j);
    }
};

} // namespace hdfuzz
