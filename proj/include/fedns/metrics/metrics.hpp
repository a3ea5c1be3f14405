#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "fedns/data/dataset.hpp"
#include "fedns/nn/network.hpp"

namespace fedns::metrics {

// rows = true class, columns = predicted class
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::int64_t> counts;

    explicit ConfusionMatrix(std::size_t c) : classes(c), counts(c * c, 0) {}
    std::int64_t& at(std::size_t truth, std::size_t pred) {
        return counts[truth * classes + pred];
    }
    std::int64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * classes + pred];
    }
    std::int64_t total() const;
    std::int64_t trace() const;
    void merge(const ConfusionMatrix& o);
};

ConfusionMatrix confusion_matrix(std::span<const int> preds, std::span<const int> labels,
                                 std::size_t classes);

struct MacroScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Unweighted means of per-class precision, recall and F1; 0/0 terms are 0.
MacroScores macro_scores(const ConfusionMatrix& cm);

// Fraction of rows whose true class is among the k largest logits, ties
// broken by the lower class index.
double topk_accuracy(std::span<const double> logits, std::size_t classes,
                     std::span<const int> labels, int k);

struct MetricsRecord {
    double accuracy = 0; // fraction in [0,1]; equals topk.at(1)
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    std::map<int, double> topk;
};

// Single batched pass over the full test set; deterministic, may parallelize
// internally. ks are clamped to [1, classes].
MetricsRecord evaluate(const nn::Network& net, const nn::ModelParams& params,
                       const data::Dataset& test, std::span<const int> ks);

} // namespace fedns::metrics
