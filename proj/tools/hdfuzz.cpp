#include <atomic>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdfuzz/commands.hpp"
#include "hdfuzz/errors.hpp"
#include "hdfuzz/run_config.hpp"

namespace {

std::atomic<bool> g_cancel{false};

void on_sigint(int) { g_cancel.store(true); }

/// Registers every RunConfig field as a same-named flag. Flags override
/// whatever --config loaded because config files are applied before the
/// command line is parsed.
void add_config_options(CLI::App* sub, hdfuzz::RunConfig& cfg, std::string& config_path) {
    sub->add_option("--config", config_path,
                    "JSON config file; applied before flags, so flags win");
    sub->add_option("--train_images,--train-images", cfg.train_images, "training images IDX file");
    sub->add_option("--train_labels,--train-labels", cfg.train_labels, "training labels IDX file");
    sub->add_option("--test_images,--test-images", cfg.test_images, "test images IDX file");
    sub->add_option("--test_labels,--test-labels", cfg.test_labels, "test labels IDX file");
    sub->add_option("--model", cfg.model, "model file path");
    sub->add_option("--out_dir,--out-dir", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--d", cfg.d, "hypervector dimension");
    sub->add_option("--levels", cfg.levels, "gray levels in the value memory");
    sub->add_option("--classes", cfg.classes, "class count");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = auto; HDFUZZ_THREADS caps)");
    sub->add_option("--iter_times,--iter-times", cfg.iter_times, "max fuzzing iterations per input");
    sub->add_option("--top_n,--top-n", cfg.top_n, "survivors kept per iteration");
    sub->add_option("--batch", cfg.batch, "mutants per survivor per iteration");
    sub->add_option("--l2_threshold,--l2-threshold", cfg.l2_threshold,
                    "max normalized L2 perturbation (non-shift)");
    sub->add_flag_function(
        "--guided", [&cfg](std::int64_t) { cfg.guided = true; }, "fitness-guided survivor selection");
    sub->add_flag_function(
        "--unguided", [&cfg](std::int64_t) { cfg.guided = false; },
        "uniform survivor selection instead of fitness-guided");
    sub->add_option("--strategy", cfg.strategy,
                    "row_rand, col_rand, row_col_rand, rand, gauss, or shift");
    sub->add_option("--gauss_sigma,--gauss-sigma", cfg.gauss_sigma, "gauss noise sigma (gray levels)");
    sub->add_option("--rand_delta,--rand-delta", cfg.rand_delta, "rand amplitude (gray levels)");
    sub->add_option("--shift_step,--shift-step", cfg.shift_step, "shift step (pixels)");
    sub->add_option("--inputs", cfg.inputs, "inputs to fuzz (0 = rest of the set)");
    sub->add_option("--input_offset,--input-offset", cfg.input_offset, "first test index to fuzz");
    sub->add_option("--emit_triples,--emit-triples", cfg.emit_triples,
                    "PGM triples to emit for successes");
    sub->add_option("--defend_target,--defend-target", cfg.defend_target,
                    "adversarials to generate before the defense split");
    sub->add_flag_function(
        "--replay", [&cfg](std::int64_t) { cfg.replay = true; },
        "re-attack by replaying stored adversarials instead of re-fuzzing");
    sub->add_option("--retrain_weight,--retrain-weight", cfg.retrain_weight,
                    "accumulator weight for each retraining image");
}

/// --config must apply before flag overrides, so it is pulled out of
/// argv ahead of CLI11's parse (which then re-consumes it as a normal
/// option).
void preload_configs(int argc, char** argv, hdfuzz::RunConfig& cfg) {
    for (int i = 1; i < argc; ++i) {
        const char* arg = argv[i];
        if (std::strcmp(arg, "--config") == 0 && i + 1 < argc) {
            cfg.load_file(argv[i + 1]);
            ++i;
        } else if (std::strncmp(arg, "--config=", 9) == 0) {
            cfg.load_file(arg + 9);
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperdimensional MNIST classifier with a guided differential fuzzer"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    hdfuzz::RunConfig cfg;
    std::string config_path;
    std::vector<std::string> report_paths;

    try {
        preload_configs(argc, argv, cfg);
    } catch (const hdfuzz::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App* train = app.add_subcommand("train", "train a model and evaluate it");
    CLI::App* eval = app.add_subcommand("eval", "evaluate a stored model on the test split");
    CLI::App* fuzz = app.add_subcommand("fuzz", "generate adversarial images against a model");
    CLI::App* defend =
        app.add_subcommand("defend", "attack, retrain on adversarials, attack again");
    CLI::App* report = app.add_subcommand("report", "render tables from stored campaign JSON");
    for (CLI::App* sub : {train, eval, fuzz, defend, report})
        add_config_options(sub, cfg, config_path);
    report->add_option("reports", report_paths, "campaign JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::signal(SIGINT, on_sigint);
    hdfuzz::CmdContext ctx;
    ctx.cancel = &g_cancel;

    try {
        if (train->parsed()) hdfuzz::cmd_train(cfg, ctx);
        else if (eval->parsed()) hdfuzz::cmd_eval(cfg, ctx);
        else if (fuzz->parsed()) hdfuzz::cmd_fuzz(cfg, ctx);
        else if (defend->parsed()) hdfuzz::cmd_defend(cfg, ctx);
        else if (report->parsed()) {
            std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
            hdfuzz::cmd_report(paths, cfg, ctx);
        }
    } catch (const hdfuzz::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hdfuzz::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hdfuzz::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return g_cancel.load() ? 130 : 0;
}
