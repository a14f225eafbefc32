#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstddef>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdfuzz/dataset.hpp"
#include "hdfuzz/errors.hpp"
#include "hdfuzz/fuzzer.hpp"
#include "hdfuzz/model.hpp"
#include "hdfuzz/model_io.hpp"
#include "hdfuzz/report.hpp"
#include "hdfuzz/run_config.hpp"

namespace hdfuzz {

struct CmdContext {
    std::ostream* log = &std::cout;
    const std::atomic<bool>* cancel = nullptr;
};

namespace detail {

inline void require_path(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("config: \"") + key + "\" is required");
}

inline std::filesystem::path ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline nlohmann::json campaign_brief(const CampaignReport& rep) {
    nlohmann::json j;
    j["attempts"] = rep.attempt_count();
    j["successes"] = rep.success_count();
    j["mean_l1"] = opt_json(rep.mean_l1());
    j["mean_l2"] = opt_json(rep.mean_l2());
    j["mean_iterations"] = opt_json(rep.mean_iterations());
    j["wall_seconds"] = rep.wall_seconds;
    j["seconds_per_1k_successes"] = opt_json(rep.seconds_per_1k_successes());
    return j;
}

} // namespace detail

/// Builds item memories, trains one epoch, evaluates on the test split,
/// writes the model file and out_dir/train_summary.json.
inline nlohmann::json cmd_train(const RunConfig& cfg, const CmdContext& ctx = {}) {
    detail::require_path(cfg.train_images, "train_images");
    detail::require_path(cfg.train_labels, "train_labels");
    detail::require_path(cfg.test_images, "test_images");
    detail::require_path(cfg.test_labels, "test_labels");
    const auto out_dir = detail::ensure_out_dir(cfg);

    LabeledDataset train = load_dataset(cfg.train_images, cfg.train_labels, "train", cfg.classes);
    LabeledDataset test = load_dataset(cfg.test_images, cfg.test_labels, "test", cfg.classes);
    if (train.images.empty()) throw FormatError("train: dataset is empty");
    const Image& probe = train.images.front();

    HdcModel model = HdcModel::create(cfg.seed, probe.width, probe.height, cfg.levels,
                                      static_cast<std::size_t>(cfg.d), cfg.classes);
    *ctx.log << "training on " << train.size() << " images (d=" << cfg.d << ", seed=" << cfg.seed
             << ")" << std::endl;
    const auto t0 = std::chrono::steady_clock::now();
    model.train(train.images, train.labels, cfg.threads);
    const double train_seconds = detail::seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const EvalStats stats = evaluate(model, test.images, test.labels, cfg.threads);
    const double eval_seconds = detail::seconds_since(t1);
    *ctx.log << "accuracy " << stats.accuracy() << " on " << stats.total << " test images ("
             << train_seconds << " s train, " << eval_seconds << " s eval)" << std::endl;

    save_model(model, cfg.model);

    nlohmann::json summary;
    summary["accuracy"] = stats.accuracy();
    summary["d"] = cfg.d;
    summary["seed"] = cfg.seed;
    summary["levels"] = cfg.levels;
    summary["classes"] = cfg.classes;
    summary["train_images"] = train.size();
    summary["test_images"] = test.size();
    summary["train_seconds"] = train_seconds;
    summary["eval_seconds"] = eval_seconds;
    summary["model"] = cfg.model;
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < stats.per_class_total.size(); ++c)
        per_class.push_back(stats.per_class_total[c] == 0
                                ? nlohmann::json(nullptr)
                                : nlohmann::json(static_cast<double>(stats.per_class_correct[c]) /
                                                 static_cast<double>(stats.per_class_total[c])));
    summary["per_class_accuracy"] = std::move(per_class);
    write_text_file(out_dir / "train_summary.json", summary.dump(2) + "\n");
    return summary;
}

/// Loads a model file and reports accuracy on the test split.
inline nlohmann::json cmd_eval(const RunConfig& cfg, const CmdContext& ctx = {}) {
    detail::require_path(cfg.test_images, "test_images");
    detail::require_path(cfg.test_labels, "test_labels");
    const auto out_dir = detail::ensure_out_dir(cfg);

    HdcModel model = load_model(cfg.model);
    LabeledDataset test =
        load_dataset(cfg.test_images, cfg.test_labels, "test", model.num_classes());
    const auto t0 = std::chrono::steady_clock::now();
    const EvalStats stats = evaluate(model, test.images, test.labels, cfg.threads);
    const double eval_seconds = detail::seconds_since(t0);
    *ctx.log << "accuracy " << stats.accuracy() << " on " << stats.total << " test images ("
             << eval_seconds << " s)" << std::endl;

    nlohmann::json summary;
    summary["accuracy"] = stats.accuracy();
    summary["test_images"] = stats.total;
    summary["eval_seconds"] = eval_seconds;
    summary["model"] = cfg.model;
    summary["d"] = model.dim();
    summary["seed"] = model.seed();
    write_text_file(out_dir / "eval_summary.json", summary.dump(2) + "\n");
    return summary;
}

/// Fuzzes the configured slice of the test images, writing
/// fuzz_<strategy>[_unguided].{json,csv} and optional PGM triples.
/// Cancellation flushes whatever finished.
inline nlohmann::json cmd_fuzz(const RunConfig& cfg, const CmdContext& ctx = {}) {
    detail::require_path(cfg.test_images, "test_images");
    const auto out_dir = detail::ensure_out_dir(cfg);
    const FuzzConfig fc = cfg.fuzz_config();

    HdcModel model = load_model(cfg.model);
    std::vector<Image> images = load_idx_images(cfg.test_images);
    if (cfg.input_offset >= images.size())
        throw ConfigError("config: input_offset " + std::to_string(cfg.input_offset) +
                          " is past the dataset end (" + std::to_string(images.size()) + ")");
    const std::size_t begin = static_cast<std::size_t>(cfg.input_offset);
    const std::size_t count = cfg.inputs == 0
                                  ? images.size() - begin
                                  : std::min<std::size_t>(cfg.inputs, images.size() - begin);
    std::span<const Image> slice(images.data() + begin, count);

    *ctx.log << "fuzzing " << count << " inputs with " << cfg.strategy
             << (fc.guided ? "" : " (unguided)") << std::endl;
    CampaignOptions opts;
    opts.threads = cfg.threads;
    opts.index_offset = begin;
    opts.cancel = ctx.cancel;
    std::size_t last_logged = 0;
    opts.progress = [&](std::size_t done, std::size_t total, std::size_t succ) {
        if (done - last_logged >= 200 || done == total) {
            last_logged = done;
            *ctx.log << "  " << done << "/" << total << " inputs, " << succ << " adversarial"
                     << std::endl;
        }
    };
    CampaignReport rep = fuzz_campaign(model, slice, fc, opts);

    std::string base = "fuzz_" + cfg.strategy + (fc.guided ? "" : "_unguided");
    const auto json_path = out_dir / (base + ".json");
    const auto csv_path = out_dir / (base + ".csv");
    write_campaign_json(rep, json_path);
    write_campaign_csv(rep, csv_path);
    std::vector<std::filesystem::path> triples;
    if (cfg.emit_triples > 0)
        triples = emit_case_triples(rep, out_dir / (base + "_triples"),
                                    static_cast<std::size_t>(cfg.emit_triples));

    const bool interrupted = ctx.cancel && ctx.cancel->load();
    if (interrupted)
        *ctx.log << "interrupted; flushed " << rep.attempt_count() << " finished inputs"
                 << std::endl;
    *ctx.log << rep.success_count() << "/" << rep.attempt_count() << " adversarial, mean iterations "
             << detail::fmt_opt(rep.mean_iterations(), "%.2f") << ", mean L2 "
             << detail::fmt_opt(rep.mean_l2(), "%.3f") << ", " << rep.wall_seconds << " s"
             << std::endl;

    nlohmann::json summary = detail::campaign_brief(rep);
    summary["strategy"] = cfg.strategy;
    summary["guided"] = fc.guided;
    summary["interrupted"] = interrupted;
    summary["report_json"] = json_path.string();
    summary["report_csv"] = csv_path.string();
    summary["triples_emitted"] = triples.size() / 3;
    return summary;
}

namespace detail {

inline constexpr std::size_t kDefendChunk = 256;

/// Fuzzes test inputs in fixed-size chunks (stream indices match a
/// whole-set campaign) until `target` successes exist or inputs run
/// out. Chunk granularity keeps the attempted-input set independent of
/// thread count.
inline CampaignReport defend_attack(const HdcModel& model, const std::vector<Image>& images,
                                    const FuzzConfig& fc, const RunConfig& cfg,
                                    const CmdContext& ctx, std::size_t target) {
    CampaignReport merged;
    merged.config = fc;
    merged.num_classes = model.num_classes();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t begin = 0; begin < images.size(); begin += kDefendChunk) {
        if (merged.success_count() >= target) break;
        if (ctx.cancel && ctx.cancel->load()) break;
        const std::size_t count = std::min(kDefendChunk, images.size() - begin);
        CampaignOptions opts;
        opts.threads = cfg.threads;
        opts.index_offset = begin;
        opts.cancel = ctx.cancel;
        CampaignReport chunk =
            fuzz_campaign(model, std::span<const Image>(images.data() + begin, count), fc, opts);
        for (CampaignCase& c : chunk.cases) merged.cases.push_back(std::move(c));
        *ctx.log << "  attacked " << merged.attempt_count() << " inputs, "
                 << merged.success_count() << "/" << target << " adversarial" << std::endl;
    }
    merged.wall_seconds = seconds_since(t0);
    return merged;
}

} // namespace detail

/// Fig-8-style defense round trip: attack, retrain on half the
/// adversarials with their originals' ground-truth labels, re-attack
/// with the other half's originals (default) or replay its stored
/// adversarials (replay mode), and compare attack rates plus clean
/// accuracy.
inline nlohmann::json cmd_defend(const RunConfig& cfg, const CmdContext& ctx = {}) {
    detail::require_path(cfg.test_images, "test_images");
    detail::require_path(cfg.test_labels, "test_labels");
    const auto out_dir = detail::ensure_out_dir(cfg);
    const FuzzConfig fc = cfg.fuzz_config();

    HdcModel model = load_model(cfg.model);
    LabeledDataset test =
        load_dataset(cfg.test_images, cfg.test_labels, "test", model.num_classes());

    *ctx.log << "clean accuracy before retraining..." << std::endl;
    const EvalStats clean_before = evaluate(model, test.images, test.labels, cfg.threads);

    *ctx.log << "phase 1: generating " << cfg.defend_target << " adversarial images ("
             << cfg.strategy << ")" << std::endl;
    CampaignReport attack = detail::defend_attack(model, test.images, fc, cfg, ctx,
                                                  static_cast<std::size_t>(cfg.defend_target));
    std::vector<const CampaignCase*> successes;
    for (const CampaignCase& c : attack.cases)
        if (c.success && c.images) successes.push_back(&c);
    const double rate_before =
        attack.attempt_count() == 0
            ? 0.0
            : static_cast<double>(attack.success_count()) / attack.attempt_count();

    std::string warning;
    if (successes.size() < cfg.defend_target)
        warning = "only " + std::to_string(successes.size()) + " adversarials available (wanted " +
                  std::to_string(cfg.defend_target) + ")";
    if (successes.size() > cfg.defend_target) successes.resize(cfg.defend_target);

    // Seeded 50/50 split of the generated adversarials.
    RngStream split_rng = RngStream::derive(cfg.seed, "defend-split");
    for (std::size_t i = 0; i + 1 < successes.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(split_rng.next_below(successes.size() - i));
        std::swap(successes[i], successes[j]);
    }
    const std::size_t half = successes.size() / 2;
    std::span<const CampaignCase* const> subset_a(successes.data(), half);
    std::span<const CampaignCase* const> subset_b(successes.data() + half,
                                                  successes.size() - half);

    *ctx.log << "phase 2: retraining on " << subset_a.size() << " adversarials (weight "
             << cfg.retrain_weight << ")" << std::endl;
    std::vector<Image> retrain_images;
    std::vector<std::uint8_t> retrain_labels;
    retrain_images.reserve(subset_a.size());
    for (const CampaignCase* c : subset_a) {
        retrain_images.push_back(c->images->adversarial);
        retrain_labels.push_back(test.labels.at(c->input_index));
    }
    model.retrain(retrain_images, retrain_labels, cfg.retrain_weight, cfg.threads);

    const EvalStats clean_after = evaluate(model, test.images, test.labels, cfg.threads);

    double rate_after = 0.0;
    nlohmann::json phase3;
    if (cfg.replay) {
        *ctx.log << "phase 3: replaying " << subset_b.size() << " stored adversarials" << std::endl;
        std::size_t still_fooled = 0;
        for (const CampaignCase* c : subset_b) {
            const unsigned orig_label = model.predict(c->images->original).label;
            const unsigned adv_label = model.predict(c->images->adversarial).label;
            still_fooled += adv_label != orig_label ? 1 : 0;
        }
        rate_after = subset_b.empty() ? 0.0 : static_cast<double>(still_fooled) / subset_b.size();
        phase3["replayed"] = subset_b.size();
        phase3["still_fooled"] = still_fooled;
    } else {
        *ctx.log << "phase 3: re-attacking with " << subset_b.size() << " fresh originals"
                 << std::endl;
        std::vector<Image> fresh;
        fresh.reserve(subset_b.size());
        for (const CampaignCase* c : subset_b) fresh.push_back(c->images->original);
        if (!fresh.empty()) {
            FuzzConfig fc2 = fc;
            CampaignOptions opts;
            opts.threads = cfg.threads;
            opts.stream_name = "defend-reattack";
            opts.cancel = ctx.cancel;
            CampaignReport reattack = fuzz_campaign(model, fresh, fc2, opts);
            rate_after = static_cast<double>(reattack.success_count()) / reattack.attempt_count();
            phase3 = detail::campaign_brief(reattack);
        }
    }

    const double drop_points = (rate_before - rate_after) * 100.0;
    const double clean_drop_points = (clean_before.accuracy() - clean_after.accuracy()) * 100.0;
    *ctx.log << "attack rate " << rate_before << " -> " << rate_after << " (drop " << drop_points
             << " points); clean accuracy " << clean_before.accuracy() << " -> "
             << clean_after.accuracy() << std::endl;

    nlohmann::json summary;
    summary["mode"] = cfg.replay ? "replay" : "refuzz";
    summary["strategy"] = cfg.strategy;
    summary["defend_target"] = cfg.defend_target;
    summary["generated"] = successes.size();
    summary["phase1_attempts"] = attack.attempt_count();
    summary["phase1_successes"] = attack.success_count();
    summary["subset_a"] = subset_a.size();
    summary["subset_b"] = subset_b.size();
    summary["retrain_weight"] = cfg.retrain_weight;
    summary["attack_rate_before"] = rate_before;
    summary["attack_rate_after"] = rate_after;
    summary["drop_points"] = drop_points;
    summary["drop_relative"] = rate_before > 0.0 ? (rate_before - rate_after) / rate_before : 0.0;
    summary["clean_accuracy_before"] = clean_before.accuracy();
    summary["clean_accuracy_after"] = clean_after.accuracy();
    summary["clean_drop_points"] = clean_drop_points;
    summary["phase3"] = std::move(phase3);
    if (!warning.empty()) summary["warning"] = warning;
    if (ctx.cancel && ctx.cancel->load()) summary["interrupted"] = true;
    write_text_file(out_dir / "defend_summary.json", summary.dump(2) + "\n");
    return summary;
}

/// Renders the strategy-column metric table from stored campaign JSON
/// files; writes table.txt and table.csv next to out_dir and returns
/// per-class statistics for each report.
inline nlohmann::json cmd_report(const std::vector<std::filesystem::path>& report_paths,
                                 const RunConfig& cfg, const CmdContext& ctx = {}) {
    const auto out_dir = detail::ensure_out_dir(cfg);
    std::vector<CampaignReport> reports;
    reports.reserve(report_paths.size());
    for (const auto& p : report_paths) reports.push_back(load_campaign_json(p));

    const std::string table = render_table(reports);
    *ctx.log << table;
    write_text_file(out_dir / "table.txt", table);
    write_text_file(out_dir / "table.csv", render_table_csv(reports));

    nlohmann::json summary;
    summary["reports"] = report_paths.size();
    summary["table_txt"] = (out_dir / "table.txt").string();
    summary["table_csv"] = (out_dir / "table.csv").string();
    nlohmann::json per_report = nlohmann::json::array();
    for (std::size_t r = 0; r < reports.size(); ++r) {
        nlohmann::json entry;
        entry["path"] = report_paths[r].string();
        entry["strategy"] = to_string(reports[r].config.strategy.kind);
        entry["guided"] = reports[r].config.guided;
        nlohmann::json classes = nlohmann::json::array();
        if (!reports[r].cases.empty()) {
            const PerClassStats pcs = per_class_stats(reports[r]);
            for (std::size_t c = 0; c < pcs.classes.size(); ++c) {
                const ClassStats& cs = pcs.classes[c];
                classes.push_back({{"class", c},
                                   {"attempts", cs.attempts},
                                   {"successes", cs.successes},
                                   {"mean_l1", detail::opt_json(cs.mean_l1)},
                                   {"mean_l2", detail::opt_json(cs.mean_l2)},
                                   {"mean_iterations", detail::opt_json(cs.mean_iterations)}});
            }
        }
        entry["per_class"] = std::move(classes);
        per_report.push_back(std::move(entry));
    }
    summary["per_report"] = std::move(per_report);
    write_text_file(out_dir / "report_summary.json", summary.dump(2) + "\n");
    return summary;
}

} // namespace hdfuzz
