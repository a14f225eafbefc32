#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hdfuzz/model_io.hpp"
#include "support.hpp"

using namespace hdfuzz;

namespace {

bool models_equal(const HdcModel& a, const HdcModel& b) {
    if (a.seed() != b.seed() || a.dim() != b.dim() || a.num_classes() != b.num_classes())
        return false;
    if (a.memories().width != b.memories().width || a.memories().height != b.memories().height ||
        a.memories().levels != b.memories().levels)
        return false;
    for (std::size_t c = 0; c < a.num_classes(); ++c) {
        const ClassMemory& ca = a.am().classes[c];
        const ClassMemory& cb = b.am().classes[c];
        if (ca.trained_count != cb.trained_count) return false;
        if (ca.accumulator.elems != cb.accumulator.elems) return false;
        if (ca.reference.elems != cb.reference.elems) return false;
    }
    return true;
}

} // namespace

TEST_CASE("serialize/deserialize is a byte-stable round trip", "[model_io]") {
    const testsupport::SyntheticTask task = testsupport::make_synthetic_task(41, 6, 6, 4, 6, 2);
    const HdcModel model = testsupport::make_synthetic_model(task, 23, 256);

    const std::vector<std::uint8_t> bytes = serialize_model(model);
    CHECK(bytes.size() == 40 + 4 * 8 + 4 * 256 * 5);
    const HdcModel back = deserialize_model(bytes);
    CHECK(models_equal(model, back));
    CHECK(serialize_model(back) == bytes);

    // The restored model behaves identically.
    RngStream rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Image img = testsupport::random_image(rng, 6, 6);
        CHECK(model.predict(img).label == back.predict(img).label);
    }
}

TEST_CASE("untrained classes survive the round trip as untrained", "[model_io]") {
    HdcModel model = HdcModel::create(3, 4, 4, 256, 128, 5);
    RngStream rng(6);
    model.train({testsupport::random_image(rng, 4, 4)}, {2});

    const HdcModel back = deserialize_model(serialize_model(model));
    CHECK(back.am().trained_classes() == 1);
    CHECK(back.am().classes[0].trained_count == 0);
    CHECK(back.am().classes[0].accumulator.dim() == 0);
    CHECK(back.am().classes[0].reference.dim() == 0);
    CHECK(back.am().classes[2].trained_count == 1);
    CHECK(models_equal(model, back));
}

TEST_CASE("deserialize rejects malformed model bytes", "[model_io]") {
    HdcModel model = HdcModel::create(3, 2, 2, 16, 32, 2);
    RngStream rng(8);
    Image img(2, 2);
    Image img2(2, 2);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_below(16));
    for (auto& p : img2.pixels) p = static_cast<std::uint8_t>(rng.next_below(16));
    // Both classes trained, so the reference rows at the end of the file
    // are live data.
    model.train({img, img2}, {0, 1});
    const std::vector<std::uint8_t> good = serialize_model(model);
    REQUIRE_NOTHROW(deserialize_model(good));

    SECTION("bad magic") {
        auto bad = good;
        bad[0] = 'X';
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("unknown version") {
        auto bad = good;
        bad[4] = 9;
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("truncated") {
        auto bad = good;
        bad.pop_back();
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("trailing bytes") {
        auto bad = good;
        bad.push_back(0);
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("short header") {
        auto bad = good;
        bad.resize(12);
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("zero class count") {
        auto bad = good;
        bad[36] = bad[37] = bad[38] = bad[39] = 0;
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("implausible dimension") {
        auto bad = good;
        for (int i = 0; i < 8; ++i) bad[16 + i] = 0xff;
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
    SECTION("non-bipolar reference byte") {
        auto bad = good;
        bad[bad.size() - 1] = 7;
        CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    }
}

TEST_CASE("save_model/load_model work through the filesystem", "[model_io]") {
    const testsupport::SyntheticTask task = testsupport::make_synthetic_task(42, 5, 5, 3, 5, 2);
    const HdcModel model = testsupport::make_synthetic_model(task, 29, 128);

    const auto dir = testsupport::fresh_temp_dir("model");
    const auto path = dir / "m.hdcm";
    save_model(model, path);
    CHECK(models_equal(model, load_model(path)));

    CHECK_THROWS_AS(save_model(model, "/nonexistent-dir/m.hdcm"), IoError);
    CHECK_THROWS_AS(load_model(dir / "missing.hdcm"), IoError);

    testsupport::write_bytes(dir / "garbage.hdcm", {1, 2, 3, 4});
    CHECK_THROWS_AS(load_model(dir / "garbage.hdcm"), FormatError);
    std::filesystem::remove_all(dir);
}
