#pragma once

#include <cstdint>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdfuzz/dataset.hpp"
#include "hdfuzz/errors.hpp"
#include "hdfuzz/fuzzer.hpp"

namespace hdfuzz {

inline constexpr int kReportSchemaVersion = 1;

struct ClassStats {
    std::size_t attempts = 0;
    std::size_t successes = 0;
    std::optional<double> mean_l1;         // over this class' successes
    std::optional<double> mean_l2;         // over this class' successes
    std::optional<double> mean_iterations; // over this class' attempts
};

struct PerClassStats {
    std::vector<ClassStats> classes;
};

/// Groups cases by reference label. Distances average over successes,
/// iterations over every attempt of the class.
inline PerClassStats per_class_stats(const CampaignReport& report) {
    if (report.cases.empty()) throw std::invalid_argument("per_class_stats: empty report");
    std::size_t n = report.num_classes;
    for (const CampaignCase& c : report.cases) n = std::max<std::size_t>(n, c.reference_label + 1);
    PerClassStats out;
    out.classes.resize(n);
    std::vector<double> l1(n, 0.0), l2(n, 0.0), iters(n, 0.0);
    for (const CampaignCase& c : report.cases) {
        ClassStats& cs = out.classes[c.reference_label];
        ++cs.attempts;
        iters[c.reference_label] += c.iterations;
        if (c.success) {
            ++cs.successes;
            l1[c.reference_label] += c.l1;
            l2[c.reference_label] += c.l2;
        }
    }
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
        ClassStats& cs = out.classes[c];
        if (cs.attempts > 0) cs.mean_iterations = iters[c] / static_cast<double>(cs.attempts);
        if (cs.successes > 0) {
            cs.mean_l1 = l1[c] / static_cast<double>(cs.successes);
            cs.mean_l2 = l2[c] / static_cast<double>(cs.successes);
        }
    }
    return out;
}

namespace detail {

inline std::string fmt_opt(const std::optional<double>& v, const char* spec = "%.4f") {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, *v);
    return buf;
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

} // namespace detail

/// Aligned text table, one column per report (labeled by strategy), rows
/// fixed: mean L1, mean L2, mean iterations, seconds per 1000 successes.
inline std::string render_table(std::span<const CampaignReport> reports) {
    static const char* kRows[] = {"mean_l1", "mean_l2", "mean_iterations", "seconds_per_1k"};
    std::vector<std::vector<std::string>> cols;
    for (const CampaignReport& r : reports) {
        std::string head(to_string(r.config.strategy.kind));
        if (!r.config.guided) head += "(unguided)";
        cols.push_back({std::move(head), detail::fmt_opt(r.mean_l1()), detail::fmt_opt(r.mean_l2()),
                        detail::fmt_opt(r.mean_iterations()),
                        detail::fmt_opt(r.seconds_per_1k_successes(), "%.1f")});
    }
    std::size_t metric_w = 0;
    for (const char* row : kRows) metric_w = std::max(metric_w, std::string(row).size());
    std::vector<std::size_t> widths(cols.size(), 0);
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (const std::string& cell : cols[c]) widths[c] = std::max(widths[c], cell.size());

    std::string out;
    auto put_row = [&](std::size_t row_in_col, const std::string& label) {
        out += label;
        out.append(metric_w - label.size(), ' ');
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::string& cell = cols[c][row_in_col];
            out += "  ";
            out.append(widths[c] - cell.size(), ' ');
            out += cell;
        }
        out += '\n';
    };
    put_row(0, "metric");
    for (std::size_t r = 0; r < 4; ++r) put_row(r + 1, kRows[r]);
    return out;
}

/// CSV twin of render_table: header "metric,<strategy>..." then the four
/// fixed metric rows. Absent values are empty fields.
inline std::string render_table_csv(std::span<const CampaignReport> reports) {
    auto cell = [](const std::optional<double>& v) { return v ? detail::fmt_opt(v, "%.6f") : ""; };
    std::string out = "metric";
    for (const CampaignReport& r : reports) {
        out += ',';
        out += to_string(r.config.strategy.kind);
        if (!r.config.guided) out += "(unguided)";
    }
    out += "\nmean_l1";
    for (const CampaignReport& r : reports) out += ',' + cell(r.mean_l1());
    out += "\nmean_l2";
    for (const CampaignReport& r : reports) out += ',' + cell(r.mean_l2());
    out += "\nmean_iterations";
    for (const CampaignReport& r : reports) out += ',' + cell(r.mean_iterations());
    out += "\nseconds_per_1k";
    for (const CampaignReport& r : reports) out += ',' + cell(r.seconds_per_1k_successes());
    out += '\n';
    return out;
}

inline nlohmann::json campaign_to_json(const CampaignReport& report) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["strategy"] = to_string(report.config.strategy.kind);
    j["guided"] = report.config.guided;
    j["distance_budget"] =
        report.config.strategy.kind == MutationKind::shift ? "exempt" : "enforced";
    j["config"] = {
        {"iter_times", report.config.iter_times},
        {"top_n", report.config.top_n},
        {"batch", report.config.batch},
        {"l2_threshold", report.config.l2_threshold},
        {"master_seed", report.config.master_seed},
        {"gauss_sigma", report.config.strategy.gauss_sigma},
        {"rand_delta", report.config.strategy.rand_delta},
        {"shift_step", report.config.strategy.shift_step},
    };
    j["num_classes"] = report.num_classes;
    j["attempts"] = report.attempt_count();
    j["successes"] = report.success_count();
    // Distances average over successes only; iterations over every
    // attempt, failures counted at the full budget.
    j["mean_l1"] = detail::opt_json(report.mean_l1());
    j["mean_l2"] = detail::opt_json(report.mean_l2());
    j["mean_iterations"] = detail::opt_json(report.mean_iterations());
    j["wall_seconds"] = report.wall_seconds;
    j["seconds_per_1k_successes"] = detail::opt_json(report.seconds_per_1k_successes());
    j["successes_per_class"] = report.successes_per_class();
    nlohmann::json cases = nlohmann::json::array();
    for (const CampaignCase& c : report.cases) {
        nlohmann::json jc;
        jc["input_index"] = c.input_index;
        jc["reference_label"] = c.reference_label;
        jc["success"] = c.success;
        jc["iterations"] = c.iterations;
        jc["elapsed"] = c.elapsed;
        if (c.success) {
            jc["adversarial_label"] = c.adversarial_label;
            jc["l1"] = c.l1;
            jc["l2"] = c.l2;
        } else {
            jc["adversarial_label"] = nullptr;
            jc["l1"] = nullptr;
            jc["l2"] = nullptr;
        }
        cases.push_back(std::move(jc));
    }
    j["cases"] = std::move(cases);
    return j;
}

/// Rebuilds a CampaignReport (without pixel data) from its JSON form.
inline CampaignReport campaign_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || j.at("schema_version").get<int>() != kReportSchemaVersion)
            throw FormatError("campaign JSON: unsupported schema");
        CampaignReport report;
        report.config.strategy.kind = mutation_kind_from_string(j.at("strategy").get<std::string>());
        report.config.guided = j.at("guided").get<bool>();
        const nlohmann::json& cfg = j.at("config");
        report.config.iter_times = cfg.at("iter_times").get<unsigned>();
        report.config.top_n = cfg.at("top_n").get<unsigned>();
        report.config.batch = cfg.at("batch").get<unsigned>();
        report.config.l2_threshold = cfg.at("l2_threshold").get<double>();
        report.config.master_seed = cfg.at("master_seed").get<std::uint64_t>();
        report.config.strategy.gauss_sigma = cfg.at("gauss_sigma").get<double>();
        report.config.strategy.rand_delta = cfg.at("rand_delta").get<unsigned>();
        report.config.strategy.shift_step = cfg.at("shift_step").get<unsigned>();
        report.num_classes = j.at("num_classes").get<std::size_t>();
        report.wall_seconds = j.at("wall_seconds").get<double>();
        for (const nlohmann::json& jc : j.at("cases")) {
            CampaignCase c;
            c.input_index = jc.at("input_index").get<std::size_t>();
            c.reference_label = jc.at("reference_label").get<unsigned>();
            c.success = jc.at("success").get<bool>();
            c.iterations = jc.at("iterations").get<unsigned>();
            c.elapsed = jc.at("elapsed").get<double>();
            if (c.success) {
                c.adversarial_label = jc.at("adversarial_label").get<unsigned>();
                c.l1 = jc.at("l1").get<double>();
                c.l2 = jc.at("l2").get<double>();
            }
            report.cases.push_back(std::move(c));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("campaign JSON: ") + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_campaign_json(const CampaignReport& report, const std::filesystem::path& path) {
    write_text_file(path, campaign_to_json(report).dump(2) + "\n");
}

inline CampaignReport load_campaign_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    try {
        return campaign_from_json(j);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

/// One row per case: input_index, success, reference_label,
/// adversarial_label, iterations, l1, l2, elapsed. Failure rows leave
/// the success-only fields empty.
inline std::string campaign_to_csv(const CampaignReport& report) {
    std::string out = "input_index,success,reference_label,adversarial_label,iterations,l1,l2,elapsed\n";
    char buf[160];
    for (const CampaignCase& c : report.cases) {
        if (c.success)
            std::snprintf(buf, sizeof buf, "%zu,1,%u,%u,%u,%.6f,%.6f,%.6f\n", c.input_index,
                          c.reference_label, c.adversarial_label, c.iterations, c.l1, c.l2,
                          c.elapsed);
        else
            std::snprintf(buf, sizeof buf, "%zu,0,%u,,%u,,,%.6f\n", c.input_index,
                          c.reference_label, c.iterations, c.elapsed);
        out += buf;
    }
    return out;
}

inline void write_campaign_csv(const CampaignReport& report, const std::filesystem::path& path) {
    write_text_file(path, campaign_to_csv(report));
}

inline Image diff_mask(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("diff_mask: dimension mismatch");
    Image mask(a.width, a.height, 0);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const int d = static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]);
        mask.pixels[i] = static_cast<std::uint8_t>(d < 0 ? -d : d);
    }
    return mask;
}

/// Writes original/mask/adversarial PGMs for up to `limit` successes
/// plus an index.json describing every emitted case. Returns the PGM
/// paths in emission order.
inline std::vector<std::filesystem::path> emit_case_triples(const CampaignReport& report,
                                                            const std::filesystem::path& out_dir,
                                                            std::size_t limit) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> files;
    nlohmann::json index = nlohmann::json::array();
    std::size_t emitted = 0;
    for (const CampaignCase& c : report.cases) {
        if (emitted >= limit) break;
        if (!c.success || !c.images) continue;
        char stem[48];
        std::snprintf(stem, sizeof stem, "case_%05zu", c.input_index);
        const std::string base(stem);
        const auto orig = out_dir / (base + "_original.pgm");
        const auto mask = out_dir / (base + "_mask.pgm");
        const auto adv = out_dir / (base + "_adversarial.pgm");
        write_pgm(c.images->original, orig);
        write_pgm(diff_mask(c.images->adversarial, c.images->original), mask);
        write_pgm(c.images->adversarial, adv);
        index.push_back({
            {"input_index", c.input_index},
            {"reference_label", c.reference_label},
            {"adversarial_label", c.adversarial_label},
            {"iterations", c.iterations},
            {"l1", c.l1},
            {"l2", c.l2},
            {"original", orig.filename().string()},
            {"mask", mask.filename().string()},
            {"adversarial", adv.filename().string()},
        });
        files.push_back(orig);
        files.push_back(mask);
        files.push_back(adv);
        ++emitted;
    }
    write_text_file(out_dir / "index.json", index.dump(2) + "\n");
    return files;
}

} // namespace hdfuzz
