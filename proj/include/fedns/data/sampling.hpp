#pragma once

#include <cstdint>
#include <vector>

#include "fedns/data/dataset.hpp"
#include "fedns/nn/model.hpp"
#include "fedns/rng.hpp"

namespace fedns::data {

enum class SamplingMode { Iid, NonIid };

// iid: a fixed number of images per class each round. non-iid: a per-class
// count drawn uniformly from [lo, hi] each round.
struct SamplingRegime {
    SamplingMode mode = SamplingMode::Iid;
    std::size_t iid_per_class = 5;
    std::size_t noniid_lo = 1;
    std::size_t noniid_hi = 10;

    void validate() const;
};

// One client's data for one round. total == sum of per_class_counts, and the
// counts match the labels actually drawn.
struct ClientRoundData {
    nn::Batch samples;
    std::vector<std::int64_t> per_class_counts;
    std::int64_t total = 0;
};

// Draws per-class samples without replacement within the round; across rounds
// and across clients samples may repeat.
ClientRoundData sample_round_data(const Dataset& ds, const SamplingRegime& regime, Rng& rng);

} // namespace fedns::data
