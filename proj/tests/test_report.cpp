#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hdfuzz/fuzzer.hpp"
#include "hdfuzz/model.hpp"
#include "hdfuzz/report.hpp"
#include "support.hpp"

using namespace hdfuzz;

namespace {

CampaignCase make_case(std::size_t idx, unsigned ref, bool success, unsigned adv, unsigned iters,
                       double l1, double l2) {
    CampaignCase c;
    c.input_index = idx;
    c.reference_label = ref;
    c.iterations = iters;
    c.elapsed = 0.01 * static_cast<double>(idx + 1);
    c.success = success;
    if (success) {
        c.adversarial_label = adv;
        c.l1 = l1;
        c.l2 = l2;
    }
    return c;
}

CampaignReport make_report() {
    CampaignReport r;
    r.config.strategy.kind = MutationKind::rand;
    r.config.master_seed = 31;
    r.num_classes = 3;
    r.wall_seconds = 2.5;
    r.cases.push_back(make_case(0, 1, true, 0, 2, 0.50, 0.10));
    r.cases.push_back(make_case(1, 1, false, 0, 12, 0.0, 0.0));
    r.cases.push_back(make_case(2, 0, true, 2, 4, 0.30, 0.20));
    r.cases.push_back(make_case(3, 2, true, 1, 1, 0.10, 0.06));
    return r;
}

} // namespace

TEST_CASE("per-class stats aggregate by reference label", "[report]") {
    const CampaignReport r = make_report();
    const PerClassStats stats = per_class_stats(r);
    REQUIRE(stats.classes.size() == 3);

    CHECK(stats.classes[0].attempts == 1);
    CHECK(stats.classes[0].successes == 1);
    CHECK(*stats.classes[0].mean_l1 == Catch::Approx(0.30));
    CHECK(*stats.classes[0].mean_iterations == Catch::Approx(4.0));

    CHECK(stats.classes[1].attempts == 2);
    CHECK(stats.classes[1].successes == 1);
    CHECK(*stats.classes[1].mean_l1 == Catch::Approx(0.50));
    // Iterations average over attempts, the failure at full budget.
    CHECK(*stats.classes[1].mean_iterations == Catch::Approx(7.0));

    CHECK(stats.classes[2].attempts == 1);
    CHECK(*stats.classes[2].mean_l2 == Catch::Approx(0.06));

    CHECK_THROWS_AS(per_class_stats(CampaignReport{}), std::invalid_argument);
}

TEST_CASE("report aggregates come straight from the cases", "[report]") {
    const CampaignReport r = make_report();
    CHECK(r.attempt_count() == 4);
    CHECK(r.success_count() == 3);
    CHECK(*r.mean_l1() == Catch::Approx((0.50 + 0.30 + 0.10) / 3.0));
    CHECK(*r.mean_l2() == Catch::Approx((0.10 + 0.20 + 0.06) / 3.0));
    CHECK(*r.mean_iterations() == Catch::Approx((2 + 12 + 4 + 1) / 4.0));
    CHECK(*r.seconds_per_1k_successes() == Catch::Approx(2.5 / 3.0 * 1000.0));
    CHECK(r.successes_per_class() == std::vector<std::size_t>{1, 1, 1});

    CampaignReport none = r;
    for (auto& c : none.cases) c.success = false;
    CHECK_FALSE(none.mean_l1().has_value());
    CHECK_FALSE(none.seconds_per_1k_successes().has_value());
    CHECK(none.mean_iterations().has_value());
}

TEST_CASE("text table lists one column per report", "[report]") {
    CampaignReport guided = make_report();
    CampaignReport unguided = make_report();
    unguided.config.strategy.kind = MutationKind::gauss;
    unguided.config.guided = false;
    const std::vector<CampaignReport> reports = {guided, unguided};

    const std::string table = render_table(reports);
    CHECK(table.find("metric") != std::string::npos);
    CHECK(table.find("rand") != std::string::npos);
    CHECK(table.find("gauss(unguided)") != std::string::npos);
    CHECK(table.find("mean_l1") != std::string::npos);
    CHECK(table.find("seconds_per_1k") != std::string::npos);
    CHECK(table.find("0.3000") != std::string::npos);

    // Five lines, all equally wide (the table is aligned).
    std::istringstream lines(table);
    std::string line;
    std::vector<std::size_t> widths;
    while (std::getline(lines, line)) widths.push_back(line.size());
    REQUIRE(widths.size() == 5);
    for (std::size_t w : widths) CHECK(w == widths[0]);

    const std::string empty = render_table({});
    CHECK(empty.find("mean_iterations") != std::string::npos);
    CHECK(empty.find("rand") == std::string::npos);
}

TEST_CASE("csv table mirrors the text table", "[report]") {
    CampaignReport failures = make_report();
    for (auto& c : failures.cases) c.success = false;
    const std::vector<CampaignReport> reports = {make_report(), failures};
    const std::string csv = render_table_csv(reports);

    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "metric,rand,rand");
    CHECK(rows[1].substr(0, 8) == "mean_l1,");
    // The all-failure column renders absent distances as empty fields.
    CHECK(rows[1].back() == ',');
    CHECK(rows[3].substr(0, 16) == "mean_iterations,");
}

TEST_CASE("campaign JSON round trips every aggregate", "[report]") {
    const CampaignReport r = make_report();
    const nlohmann::json j = campaign_to_json(r);
    CHECK(j.at("schema_version") == kReportSchemaVersion);
    CHECK(j.at("strategy") == "rand");
    CHECK(j.at("distance_budget") == "enforced");
    CHECK(j.at("attempts") == 4);
    CHECK(j.at("successes") == 3);
    CHECK(j.at("cases").size() == 4);
    CHECK(j.at("cases")[1].at("l1").is_null());
    CHECK(j.at("cases")[1].at("adversarial_label").is_null());

    const CampaignReport back = campaign_from_json(j);
    CHECK(back.config.strategy.kind == r.config.strategy.kind);
    CHECK(back.config.guided == r.config.guided);
    CHECK(back.config.master_seed == r.config.master_seed);
    CHECK(back.num_classes == r.num_classes);
    CHECK(back.wall_seconds == r.wall_seconds);
    REQUIRE(back.cases.size() == r.cases.size());
    for (std::size_t i = 0; i < r.cases.size(); ++i) {
        CHECK(back.cases[i].input_index == r.cases[i].input_index);
        CHECK(back.cases[i].success == r.cases[i].success);
        CHECK(back.cases[i].iterations == r.cases[i].iterations);
        if (r.cases[i].success) {
            CHECK(back.cases[i].l1 == r.cases[i].l1);
            CHECK(back.cases[i].l2 == r.cases[i].l2);
            CHECK(back.cases[i].adversarial_label == r.cases[i].adversarial_label);
        }
    }
    CHECK(*back.mean_l1() == *r.mean_l1());
    CHECK(*back.mean_iterations() == *r.mean_iterations());
    CHECK(*back.seconds_per_1k_successes() == *r.seconds_per_1k_successes());

    // Shift campaigns advertise the budget exemption.
    CampaignReport shifted = make_report();
    shifted.config.strategy.kind = MutationKind::shift;
    CHECK(campaign_to_json(shifted).at("distance_budget") == "exempt");
}

TEST_CASE("campaign JSON files survive a disk round trip", "[report]") {
    const auto dir = testsupport::fresh_temp_dir("report");
    const CampaignReport r = make_report();
    write_campaign_json(r, dir / "c.json");
    const CampaignReport back = load_campaign_json(dir / "c.json");
    CHECK(back.cases.size() == r.cases.size());
    CHECK(*back.mean_l2() == Catch::Approx(*r.mean_l2()));

    write_text_file(dir / "bad.json", "{\"schema_version\": 99}");
    CHECK_THROWS_AS(load_campaign_json(dir / "bad.json"), FormatError);
    write_text_file(dir / "nojson.json", "not json at all");
    CHECK_THROWS_AS(load_campaign_json(dir / "nojson.json"), FormatError);
    write_text_file(dir / "missing.json", "{\"schema_version\": 1}");
    CHECK_THROWS_AS(load_campaign_json(dir / "missing.json"), FormatError);
    CHECK_THROWS_AS(load_campaign_json(dir / "absent.json"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("case CSV has one row per case", "[report]") {
    const std::string csv = campaign_to_csv(make_report());
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "input_index,success,reference_label,adversarial_label,iterations,l1,l2,elapsed");
    CHECK(rows[1].substr(0, 11) == "0,1,1,0,2,0");
    CHECK(rows[2] == "1,0,1,,12,,,0.020000");
    CHECK(rows[4].substr(0, 4) == "3,1,");
}

TEST_CASE("diff_mask is the absolute pixel difference", "[report]") {
    Image a(2, 2, std::vector<std::uint8_t>{10, 200, 0, 255});
    Image b(2, 2, std::vector<std::uint8_t>{15, 100, 0, 0});
    const Image mask = diff_mask(a, b);
    CHECK(mask.pixels == std::vector<std::uint8_t>{5, 100, 0, 255});
    CHECK(diff_mask(b, a) == mask);
    CHECK_THROWS_AS(diff_mask(a, Image(1, 2)), std::invalid_argument);
}

TEST_CASE("case triples land on disk and reproduce the differential", "[report]") {
    const testsupport::SyntheticTask task = testsupport::make_synthetic_task(120);
    const HdcModel model = testsupport::make_synthetic_model(task);
    FuzzConfig cfg;
    cfg.iter_times = 12;
    cfg.top_n = 3;
    cfg.batch = 6;
    cfg.master_seed = 7;
    const CampaignReport report =
        fuzz_campaign(model, std::span(task.test_images.data(), 10), cfg);
    REQUIRE(report.success_count() >= 2);

    const auto dir = testsupport::fresh_temp_dir("triples");
    const auto files = emit_case_triples(report, dir / "cases", 2);
    REQUIRE(files.size() == 6);
    for (const auto& f : files) CHECK(std::filesystem::exists(f));

    std::ifstream in(dir / "cases" / "index.json");
    REQUIRE(in.good());
    nlohmann::json index;
    in >> index;
    REQUIRE(index.size() == 2);

    // The emitted PGMs re-predict to the recorded labels.
    for (const auto& entry : index) {
        const Image orig = load_pgm(dir / "cases" / entry.at("original").get<std::string>());
        const Image adv = load_pgm(dir / "cases" / entry.at("adversarial").get<std::string>());
        const Image mask = load_pgm(dir / "cases" / entry.at("mask").get<std::string>());
        CHECK(model.predict(orig).label == entry.at("reference_label").get<unsigned>());
        CHECK(model.predict(adv).label == entry.at("adversarial_label").get<unsigned>());
        CHECK(diff_mask(adv, orig) == mask);
    }

    // limit 0 still writes an index, with no cases.
    const auto none = emit_case_triples(report, dir / "empty", 0);
    CHECK(none.empty());
    std::ifstream ein(dir / "empty" / "index.json");
    REQUIRE(ein.good());
    nlohmann::json eindex;
    ein >> eindex;
    CHECK(eindex.is_array());
    CHECK(eindex.empty());
    std::filesystem::remove_all(dir);
}
