#include "fedns/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "fedns/errors.hpp"
#include "fedns/parallel.hpp"

namespace fedns::metrics {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (std::size_t c = 0; c < classes; ++c) t += at(c, c);
    return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
}

ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> labels,
                                 std::size_t classes) {
    if (preds.size() != labels.size()) throw ShapeError("preds and labels differ in length");
    if (preds.empty()) throw ShapeError("empty prediction list");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int t = labels[i], p = preds[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes ||
            static_cast<std::size_t>(p) >= classes)
            throw ShapeError("class value out of range at sample " + std::to_string(i));
        ++cm.at(t, p);
    }
    return cm;
}

MacroScores macro_scores(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ShapeError("empty confusion matrix");
    MacroScores m;
    for (std::size_t c = 0; c < cm.classes; ++c) {
        std::int64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (std::size_t r = 0; r < cm.classes; ++r) {
            if (r == c) continue;
            fp += cm.at(r, c);
            fn += cm.at(c, r);
        }
        const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        m.precision += p;
        m.recall += r;
        m.f1 += f;
    }
    const double k = static_cast<double>(cm.classes);
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
    return m;
}

double topk_accuracy(std::span<const double> logits, std::size_t classes,
                     std::span<const int> labels, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > classes)
        throw ConfigError("topk: k must be in [1, classes]");
    if (labels.empty() || logits.size() != labels.size() * classes)
        throw ShapeError("topk: logits size does not match labels");
    std::int64_t hits = 0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const double* row = logits.data() + b * classes;
        const int y = labels[b];
        // rank of the true class under (logit desc, index asc)
        std::size_t ahead = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (static_cast<int>(c) == y) continue;
            if (row[c] > row[y] || (row[c] == row[y] && static_cast<int>(c) < y)) ++ahead;
        }
        if (ahead < static_cast<std::size_t>(k)) ++hits;
    }
    return double(hits) / double(labels.size());
}

MetricsRecord evaluate(const nn::Network& net, const nn::ModelParams& params,
                       const data::Dataset& test, std::span<const int> ks) {
    if (test.count == 0) throw ShapeError("empty test set");
    const std::size_t classes = net.num_classes();

    std::vector<int> want_ks;
    for (int k : ks) want_ks.push_back(std::clamp<int>(k, 1, static_cast<int>(classes)));
    want_ks.push_back(1);
    std::sort(want_ks.begin(), want_ks.end());
    want_ks.erase(std::unique(want_ks.begin(), want_ks.end()), want_ks.end());

    constexpr std::size_t kChunk = 256;
    const std::size_t nchunks = (test.count + kChunk - 1) / kChunk;

    struct Partial {
        ConfusionMatrix cm;
        std::vector<std::int64_t> topk_hits;
        explicit Partial(std::size_t classes, std::size_t nks)
            : cm(classes), topk_hits(nks, 0) {}
    };
    std::vector<Partial> partials(nchunks, Partial(classes, want_ks.size()));

    parallel_for(nchunks, [&](std::size_t ci) {
        const std::size_t first = ci * kChunk;
        const std::size_t n = std::min(kChunk, test.count - first);
        nn::Batch batch = test.batch_range(first, n);
        nn::ForwardCache cache = net.forward(params, batch);
        std::span<const double> logits = cache.logits();
        std::vector<int> preds = nn::Network::argmax_rows(logits, classes);
        Partial& part = partials[ci];
        for (std::size_t i = 0; i < n; ++i) ++part.cm.at(batch.labels[i], preds[i]);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = logits.data() + i * classes;
            const int y = batch.labels[i];
            std::size_t ahead = 0;
            for (std::size_t c = 0; c < classes; ++c) {
                if (static_cast<int>(c) == y) continue;
                if (row[c] > row[y] || (row[c] == row[y] && static_cast<int>(c) < y)) ++ahead;
            }
            for (std::size_t ki = 0; ki < want_ks.size(); ++ki)
                if (ahead < static_cast<std::size_t>(want_ks[ki])) ++part.topk_hits[ki];
        }
    });

    ConfusionMatrix cm(classes);
    std::vector<std::int64_t> hits(want_ks.size(), 0);
    for (const Partial& part : partials) {
        cm.merge(part.cm);
        for (std::size_t ki = 0; ki < want_ks.size(); ++ki) hits[ki] += part.topk_hits[ki];
    }

    MetricsRecord rec;
    rec.accuracy = double(cm.trace()) / double(cm.total());
    const MacroScores m = macro_scores(cm);
    rec.macro_precision = m.precision;
    rec.macro_recall = m.recall;
    rec.macro_f1 = m.f1;
    for (std::size_t ki = 0; ki < want_ks.size(); ++ki)
        rec.topk[want_ks[ki]] = double(hits[ki]) / double(test.count);
    return rec;
}

} // namespace fedns::metrics
