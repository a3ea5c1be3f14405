#include "fedns/data/sampling.hpp"

#include "fedns/errors.hpp"

namespace fedns::data {

void SamplingRegime::validate() const {
    if (mode == SamplingMode::Iid) {
        if (iid_per_class < 1) throw ConfigError("iid_per_class must be >= 1");
    } else {
        if (noniid_lo < 1) throw ConfigError("noniid_lo must be >= 1");
        if (noniid_lo > noniid_hi) throw ConfigError("noniid_lo must be <= noniid_hi");
    }
}

ClientRoundData sample_round_data(const Dataset& ds, const SamplingRegime& regime, Rng& rng) {
    regime.validate();
    const std::size_t classes = ds.num_classes();
    const std::size_t d = ds.shape.numel();

    ClientRoundData out;
    out.per_class_counts.assign(classes, 0);
    out.samples.shape = ds.shape;

    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t want = regime.mode == SamplingMode::Iid
                               ? regime.iid_per_class
                               : static_cast<std::size_t>(rng.uniform_int(
                                     static_cast<std::int64_t>(regime.noniid_lo),
                                     static_cast<std::int64_t>(regime.noniid_hi)));
        const auto& pool = ds.class_index[c];
        if (want > pool.size())
            throw ConfigError("class " + std::to_string(c) + ": requested " +
                              std::to_string(want) + " samples but only " +
                              std::to_string(pool.size()) + " available");
        for (std::size_t slot : rng.sample_indices(pool.size(), want)) {
            const std::size_t idx = pool[slot];
            out.samples.inputs.insert(out.samples.inputs.end(), ds.images.begin() + idx * d,
                                      ds.images.begin() + (idx + 1) * d);
            out.samples.labels.push_back(ds.labels[idx]);
        }
        out.per_class_counts[c] = static_cast<std::int64_t>(want);
        out.total += static_cast<std::int64_t>(want);
    }
    out.samples.count = static_cast<std::size_t>(out.total);
    return out;
}

} // namespace fedns::data
