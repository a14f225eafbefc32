#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hdfuzz/errors.hpp"
#include "hdfuzz/image.hpp"
#include "hdfuzz/model.hpp"
#include "hdfuzz/mutation.hpp"
#include "hdfuzz/parallel.hpp"
#include "hdfuzz/rng.hpp"

namespace hdfuzz {

struct FuzzConfig {
    unsigned iter_times = 50;   // max iterations per input
    unsigned top_n = 3;         // survivors kept per iteration
    unsigned batch = 10;        // mutants generated per survivor per iteration
    double l2_threshold = 1.0;  // max normalized L2 vs the original (non-shift)
    bool guided = true;         // fitness-guided vs uniform survivor selection
    MutationStrategy strategy;
    std::uint64_t master_seed = 1;

    void validate() const {
        if (iter_times == 0) throw ConfigError("iter_times must be >= 1");
        if (top_n == 0) throw ConfigError("top_n must be >= 1");
        if (batch == 0) throw ConfigError("batch must be >= 1");
        if (!(l2_threshold > 0.0)) throw ConfigError("l2_threshold must be positive");
        strategy.validate();
    }
};

struct Seed {
    Image image;
    double fitness = 0.0;   // 1 - cosine(AM[reference], encode(image))
    std::uint64_t order = 0; // generation index; 0 is the original input
};

/// 1 - cosine(reference class HV, encode(img)); grows as the encoding
/// moves away from the reference class.
inline double fitness(const HdcModel& model, unsigned reference_label, const Image& img) {
    if (reference_label >= model.num_classes() ||
        model.am().classes[reference_label].trained_count == 0)
        throw std::logic_error("fitness: class " + std::to_string(reference_label) +
                               " is not trained");
    return 1.0 - cosine(model.encode(img), model.am().classes[reference_label].reference);
}

/// The n highest-fitness seeds; ties resolved toward the lower
/// generation index. Result sorted by (fitness desc, order asc).
inline std::vector<Seed> select_fittest(std::vector<Seed> seeds, std::size_t n) {
    if (seeds.empty()) throw std::invalid_argument("select_fittest: empty seed list");
    if (n == 0) throw std::invalid_argument("select_fittest: n must be >= 1");
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
        if (a.fitness != b.fitness) return a.fitness > b.fitness;
        return a.order < b.order;
    });
    if (seeds.size() > n) seeds.resize(n);
    return seeds;
}

/// L_p distance with pixels scaled to [0,1] (divided by 255). p is 1 or 2.
inline double normalized_distance(const Image& a, const Image& b, int p) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("normalized_distance: dimension mismatch");
    if (p != 1 && p != 2) throw std::invalid_argument("normalized_distance: p must be 1 or 2");
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a.pixels[i]) - b.pixels[i];
        sum += static_cast<std::uint64_t>(p == 1 ? std::llabs(d) : d * d);
    }
    const double scaled = static_cast<double>(sum);
    return p == 1 ? scaled / 255.0 : std::sqrt(scaled) / 255.0;
}

struct FuzzResult {
    Image original;
    Image adversarial;
    unsigned reference_label = 0;   // predicted label of the original
    unsigned adversarial_label = 0; // predicted label of the adversarial
    unsigned iterations = 0;        // iteration the success occurred in
    double l1 = 0.0;                // normalized, vs the original
    double l2 = 0.0;
    MutationKind strategy = MutationKind::gauss;
    double elapsed = 0.0; // seconds spent on this input
};

struct FuzzOutcome {
    unsigned reference_label = 0;
    unsigned iterations = 0; // == iter_times when the budget ran out
    double elapsed = 0.0;
    std::optional<FuzzResult> success;
};

namespace detail {

/// Uniform sample without replacement of min(n, pool.size()) seeds,
/// via partial Fisher-Yates; ignores fitness entirely.
inline std::vector<Seed> sample_uniform(std::vector<Seed> pool, std::size_t n, RngStream& rng) {
    const std::size_t k = std::min(n, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace detail

/// One differential fuzzing run. The oracle is the model's own
/// prediction on the unmodified input; ground truth is never consulted.
/// Each iteration mutates every survivor `batch` times; a non-shift
/// mutant whose L2 distance to the ORIGINAL exceeds the budget is
/// dropped before prediction. The first mutant predicted differently
/// from the original is returned. Survivor selection pools the fresh
/// mutants with the previous survivors.
inline FuzzOutcome fuzz_one(const HdcModel& model, const Image& img, const FuzzConfig& cfg,
                            RngStream& rng) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const Hypervector enc0 = model.encode(img);
    const unsigned y = model.predict_encoded(enc0).label;
    const Hypervector& ref = model.am().classes[y].reference;
    const bool budgeted = cfg.strategy.kind != MutationKind::shift;

    std::vector<Seed> survivors;
    survivors.push_back(Seed{img, 1.0 - cosine(enc0, ref), 0});
    std::uint64_t next_order = 1;

    for (unsigned iter = 1; iter <= cfg.iter_times; ++iter) {
        std::vector<Seed> pool;
        pool.reserve(static_cast<std::size_t>(cfg.top_n) * cfg.batch + survivors.size());
        for (const Seed& s : survivors) {
            for (unsigned b = 0; b < cfg.batch; ++b) {
                Image mutant = mutate(s.image, cfg.strategy, rng);
                if (budgeted && normalized_distance(img, mutant, 2) > cfg.l2_threshold) continue;
                const Hypervector enc = model.encode(mutant);
                const Prediction pred = model.predict_encoded(enc);
                if (pred.label != y) {
                    FuzzResult res;
                    res.original = img;
                    res.reference_label = y;
                    res.adversarial_label = pred.label;
                    res.iterations = iter;
                    res.l1 = normalized_distance(img, mutant, 1);
                    res.l2 = normalized_distance(img, mutant, 2);
                    res.strategy = cfg.strategy.kind;
                    res.adversarial = std::move(mutant);
                    res.elapsed = elapsed();
                    return FuzzOutcome{y, iter, res.elapsed, std::move(res)};
                }
                pool.push_back(Seed{std::move(mutant), 1.0 - cosine(enc, ref), next_order++});
            }
        }
        for (Seed& s : survivors) pool.push_back(std::move(s));
        survivors = cfg.guided ? select_fittest(std::move(pool), cfg.top_n)
                               : detail::sample_uniform(std::move(pool), cfg.top_n, rng);
    }
    return FuzzOutcome{y, cfg.iter_times, elapsed(), std::nullopt};
}

struct CampaignCase {
    std::size_t input_index = 0;
    unsigned reference_label = 0;
    unsigned iterations = 0;
    double elapsed = 0.0;
    bool success = false;
    // Valid only when success:
    unsigned adversarial_label = 0;
    double l1 = 0.0;
    double l2 = 0.0;
    /// Original/adversarial pixel data; present in-process, not
    /// round-tripped through JSON (PGM triples carry the pixels).
    std::optional<FuzzResult> images;
};

struct CampaignReport {
    FuzzConfig config;
    std::size_t num_classes = 0;
    std::vector<CampaignCase> cases; // input order; may be a prefix subset when cancelled
    double wall_seconds = 0.0;

    std::size_t attempt_count() const noexcept { return cases.size(); }

    std::size_t success_count() const noexcept {
        std::size_t n = 0;
        for (const CampaignCase& c : cases) n += c.success ? 1 : 0;
        return n;
    }

    std::optional<double> mean_distance(int p) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const CampaignCase& c : cases) {
            if (!c.success) continue;
            sum += p == 1 ? c.l1 : c.l2;
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
    std::optional<double> mean_l1() const { return mean_distance(1); }
    std::optional<double> mean_l2() const { return mean_distance(2); }

    /// Mean over every attempt, counting failures at their full budget.
    std::optional<double> mean_iterations() const {
        if (cases.empty()) return std::nullopt;
        double sum = 0.0;
        for (const CampaignCase& c : cases) sum += c.iterations;
        return sum / static_cast<double>(cases.size());
    }

    std::vector<std::size_t> successes_per_class() const {
        std::vector<std::size_t> out(num_classes, 0);
        for (const CampaignCase& c : cases)
            if (c.success && c.reference_label < out.size()) ++out[c.reference_label];
        return out;
    }

    std::optional<double> seconds_per_1k_successes() const {
        const std::size_t n = success_count();
        if (n == 0) return std::nullopt;
        return wall_seconds / static_cast<double>(n) * 1000.0;
    }
};

struct CampaignOptions {
    unsigned threads = 1;
    /// Added to each input's position to form the per-input stream
    /// index; lets multi-batch callers keep streams disjoint.
    std::uint64_t index_offset = 0;
    /// Stream name for per-input derivation.
    std::string stream_name = "fuzz";
    /// Polled between inputs; set to stop early with a partial report.
    const std::atomic<bool>* cancel = nullptr;
    /// Called after each finished input: (done, total, successes so far).
    std::function<void(std::size_t, std::size_t, std::size_t)> progress;
};

/// Runs fuzz_one over every input. Input i uses the derived stream
/// (master_seed, stream_name, index_offset + i), so outcomes do not
/// depend on scheduling or thread count. Cancellation keeps the cases
/// already finished (and, in parallel runs, whatever each worker had
/// completed).
inline CampaignReport fuzz_campaign(const HdcModel& model, std::span<const Image> inputs,
                                    const FuzzConfig& cfg, const CampaignOptions& opts = {}) {
    cfg.validate();
    if (inputs.empty()) throw std::invalid_argument("fuzz_campaign: no inputs");
    if (model.am().trained_classes() == 0)
        throw std::logic_error("fuzz_campaign: model has no trained classes");

    CampaignReport report;
    report.config = cfg;
    report.num_classes = model.num_classes();

    std::vector<std::optional<FuzzOutcome>> outcomes(inputs.size());
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> succeeded{0};
    std::mutex progress_mutex;

    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(0, inputs.size(), resolve_threads(opts.threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (opts.cancel && opts.cancel->load(std::memory_order_relaxed)) return;
            RngStream rng =
                RngStream::derive(cfg.master_seed, opts.stream_name, opts.index_offset + i);
            FuzzOutcome out = fuzz_one(model, inputs[i], cfg, rng);
            const bool ok = out.success.has_value();
            outcomes[i] = std::move(out);
            const std::size_t d = done.fetch_add(1, std::memory_order_relaxed) + 1;
            const std::size_t s =
                succeeded.fetch_add(ok ? 1 : 0, std::memory_order_relaxed) + (ok ? 1 : 0);
            if (opts.progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                opts.progress(d, inputs.size(), s);
            }
        }
    });
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    report.cases.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!outcomes[i]) continue;
        CampaignCase c;
        c.input_index = opts.index_offset + i;
        c.reference_label = outcomes[i]->reference_label;
        c.iterations = outcomes[i]->iterations;
        c.elapsed = outcomes[i]->elapsed;
        c.success = outcomes[i]->success.has_value();
        if (c.success) {
            c.adversarial_label = outcomes[i]->success->adversarial_label;
            c.l1 = outcomes[i]->success->l1;
            c.l2 = outcomes[i]->success->l2;
            c.images = std::move(outcomes[i]->success);
        }
        report.cases.push_back(std::move(c));
    }
    return report;
}

} // namespace hdfuzz
