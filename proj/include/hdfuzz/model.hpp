#pragma once

#include <cstdint>
#include <cstddef>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hdfuzz/hypervector.hpp"
#include "hdfuzz/image.hpp"
#include "hdfuzz/parallel.hpp"
#include "hdfuzz/rng.hpp"

namespace hdfuzz {

/// Position and value item memories. Fully reproducible from
/// (seed, w, h, levels, d): position[k] is drawn from the ("pos", k)
/// sub-stream and value[v] from ("val", v).
struct ItemMemories {
    std::vector<Hypervector> position;
    std::vector<Hypervector> value;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t levels = 0;
    std::uint64_t seed = 0;

    std::size_t dim() const noexcept { return position.empty() ? 0 : position.front().dim(); }

    static ItemMemories build(std::uint64_t seed, std::uint32_t w, std::uint32_t h,
                              std::uint32_t levels, std::size_t d) {
        if (w == 0 || h == 0 || levels == 0 || d == 0)
            throw std::invalid_argument("ItemMemories: all sizes must be >= 1");
        ItemMemories m;
        m.width = w;
        m.height = h;
        m.levels = levels;
        m.seed = seed;
        const std::size_t npos = static_cast<std::size_t>(w) * h;
        m.position.reserve(npos);
        for (std::size_t k = 0; k < npos; ++k) {
            RngStream rng = RngStream::derive(seed, "pos", k);
            m.position.push_back(random_hv(rng, d));
        }
        m.value.reserve(levels);
        for (std::size_t v = 0; v < levels; ++v) {
            RngStream rng = RngStream::derive(seed, "val", v);
            m.value.push_back(random_hv(rng, d));
        }
        return m;
    }
};

namespace detail {

/// Pixel-bundle sum before bipolarization:
///   acc = sum_k bind(position[k], value[img[k]]).
inline AccumulatorVector encode_sum(const ItemMemories& m, const Image& img) {
    if (img.width != m.width || img.height != m.height)
        throw std::invalid_argument("encode: image is " + std::to_string(img.width) + "x" +
                                    std::to_string(img.height) + ", memories expect " +
                                    std::to_string(m.width) + "x" + std::to_string(m.height));
    const std::size_t d = m.dim();
    const std::size_t npix = img.pixels.size();
    AccumulatorVector acc(d);
    std::int32_t* a = acc.elems.data();
    for (std::size_t k = 0; k < npix; ++k) {
        const std::uint8_t v = img.pixels[k];
        if (v >= m.levels)
            throw std::out_of_range("encode: pixel value " + std::to_string(v) +
                                    " exceeds level count " + std::to_string(m.levels));
        const std::int8_t* p = m.position[k].elems.data();
        const std::int8_t* q = m.value[v].elems.data();
        for (std::size_t i = 0; i < d; ++i)
            a[i] += static_cast<std::int32_t>(p[i]) * static_cast<std::int32_t>(q[i]);
    }
    return acc;
}

} // namespace detail

/// ImgHV = bipolarize(sum_k bind(position[k], value[img[k]]), rng).
/// The caller supplies the tie-break stream; zero sums consume it in
/// element-index order.
inline Hypervector encode_image(const ItemMemories& m, const Image& img, RngStream& rng) {
    const AccumulatorVector acc = detail::encode_sum(m, img);
    return bipolarize(acc, rng);
}

struct ClassMemory {
    AccumulatorVector accumulator;
    Hypervector reference;
    std::uint64_t trained_count = 0;
};

struct AssociativeMemory {
    std::vector<ClassMemory> classes;

    explicit AssociativeMemory(std::size_t num_classes = 0) : classes(num_classes) {}
    std::size_t num_classes() const noexcept { return classes.size(); }
    std::size_t trained_classes() const noexcept {
        std::size_t n = 0;
        for (const ClassMemory& c : classes) n += c.trained_count > 0 ? 1 : 0;
        return n;
    }
};

struct Prediction {
    unsigned label = 0;
    /// One entry per class; untrained classes carry no similarity.
    std::vector<std::optional<double>> similarities;
};

/// Full pipeline state: item memories plus the per-class associative
/// memory. Encoding and prediction are pure functions of (model, image):
/// the bipolarize tie-break stream for an image is derived from the
/// model seed and the image's content hash, so results are independent
/// of evaluation order and thread count.
class HdcModel {
public:
    HdcModel(ItemMemories memories, std::size_t num_classes)
        : memories_(std::move(memories)), am_(num_classes) {
        if (num_classes == 0) throw std::invalid_argument("HdcModel: need at least one class");
    }

    static HdcModel create(std::uint64_t seed, std::uint32_t w = 28, std::uint32_t h = 28,
                           std::uint32_t levels = 256, std::size_t d = 10000,
                           std::size_t num_classes = 10) {
        return HdcModel(ItemMemories::build(seed, w, h, levels, d), num_classes);
    }

    const ItemMemories& memories() const noexcept { return memories_; }
    const AssociativeMemory& am() const noexcept { return am_; }
    AssociativeMemory& am() noexcept { return am_; }
    std::size_t dim() const noexcept { return memories_.dim(); }
    std::uint64_t seed() const noexcept { return memories_.seed; }
    std::size_t num_classes() const noexcept { return am_.num_classes(); }

    /// Content-addressed encoding: the tie-break stream is
    /// ("enc", content_hash(img)) under the model seed, so identical
    /// pixel data always encodes to the identical hypervector.
    Hypervector encode(const Image& img) const {
        RngStream rng = RngStream::derive(memories_.seed, "enc", content_hash(img));
        return encode_image(memories_, img, rng);
    }

    /// One accumulation epoch over (image, label) pairs, then reference
    /// refresh. Labels must be < num_classes. Order- and thread-count-
    /// invariant: accumulators are exact integer sums.
    void train(const std::vector<Image>& images, const std::vector<std::uint8_t>& labels,
               unsigned threads = 1) {
        add_weighted(images, labels, 1, threads, "train");
    }

    /// Adds w * encode(img) to each pair's class accumulator, then
    /// refreshes all references.
    void retrain(const std::vector<Image>& images, const std::vector<std::uint8_t>& labels,
                 std::int32_t weight = 1, unsigned threads = 1) {
        add_weighted(images, labels, weight, threads, "retrain");
    }

    Prediction predict(const Image& img) const { return predict_encoded(encode(img)); }

    /// Argmax of cosine against every trained class reference; untrained
    /// classes are skipped. Ties go to the lowest class index.
    Prediction predict_encoded(const Hypervector& query) const {
        Prediction pred;
        pred.similarities.resize(am_.num_classes());
        bool any = false;
        double best = 0.0;
        for (std::size_t c = 0; c < am_.num_classes(); ++c) {
            const ClassMemory& cm = am_.classes[c];
            if (cm.trained_count == 0) continue;
            const double sim = cosine(query, cm.reference);
            pred.similarities[c] = sim;
            if (!any || sim > best) {
                any = true;
                best = sim;
                pred.label = static_cast<unsigned>(c);
            }
        }
        if (!any) throw std::logic_error("predict: model has no trained classes");
        return pred;
    }

    /// Recomputes reference[c] from accumulator[c] under the dedicated
    /// ("am", c) stream. Pure in the accumulator: the stream restarts on
    /// every refresh, so equal accumulators give equal references.
    void refresh_reference(std::size_t c) {
        ClassMemory& cm = am_.classes.at(c);
        if (cm.trained_count == 0) return;
        RngStream rng = RngStream::derive(memories_.seed, "am", c);
        cm.reference = bipolarize(cm.accumulator, rng);
    }

private:
    void add_weighted(const std::vector<Image>& images, const std::vector<std::uint8_t>& labels,
                      std::int32_t weight, unsigned threads, const char* what) {
        if (images.size() != labels.size())
            throw std::invalid_argument(std::string(what) + ": " + std::to_string(images.size()) +
                                        " images but " + std::to_string(labels.size()) + " labels");
        const std::size_t d = dim();
        const std::size_t C = am_.num_classes();
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] >= C)
                throw std::out_of_range(std::string(what) + ": label " + std::to_string(labels[i]) +
                                        " at index " + std::to_string(i) + " out of range");
        std::mutex merge_mutex;
        std::vector<std::uint64_t> counts(C, 0);
        parallel_for(0, images.size(), resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
            std::vector<AccumulatorVector> local(C);
            std::vector<std::uint64_t> local_counts(C, 0);
            for (std::size_t i = lo; i < hi; ++i) {
                const Hypervector hv = encode(images[i]);
                const std::uint8_t c = labels[i];
                if (local[c].dim() == 0) local[c] = AccumulatorVector(d);
                accumulate(local[c], hv, weight);
                ++local_counts[c];
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            for (std::size_t c = 0; c < C; ++c) {
                if (local_counts[c] == 0) continue;
                ClassMemory& cm = am_.classes[c];
                if (cm.accumulator.dim() == 0) cm.accumulator = AccumulatorVector(d);
                for (std::size_t i = 0; i < d; ++i)
                    cm.accumulator.elems[i] += local[c].elems[i];
                counts[c] += local_counts[c];
            }
        });
        for (std::size_t c = 0; c < C; ++c) {
            am_.classes[c].trained_count += counts[c];
            refresh_reference(c);
        }
    }

    ItemMemories memories_;
    AssociativeMemory am_;
};

struct EvalStats {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> per_class_total;
    std::vector<std::size_t> per_class_correct;

    double accuracy() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

inline EvalStats evaluate(const HdcModel& model, const std::vector<Image>& images,
                          const std::vector<std::uint8_t>& labels, unsigned threads = 1) {
    if (images.size() != labels.size())
        throw std::invalid_argument("evaluate: image/label count mismatch");
    EvalStats stats;
    stats.total = images.size();
    stats.per_class_total.assign(model.num_classes(), 0);
    stats.per_class_correct.assign(model.num_classes(), 0);
    std::vector<std::uint8_t> hits(images.size(), 0);
    parallel_for(0, images.size(), resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            hits[i] = model.predict(images[i]).label == labels[i] ? 1 : 0;
    });
    for (std::size_t i = 0; i < images.size(); ++i) {
        ++stats.per_class_total[labels[i]];
        if (hits[i]) {
            ++stats.correct;
            ++stats.per_class_correct[labels[i]];
        }
    }
    return stats;
}

} // namespace hdfuzz
