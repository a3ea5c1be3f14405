#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedns/nn/arch.hpp"
#include "fedns/nn/model.hpp"

namespace fedns::data {

// Immutable after load. class_index partitions [0, count); every class
// nonempty.
struct Dataset {
    nn::Shape3 shape;
    std::size_t count = 0;
    std::vector<double> images; // count * shape.numel(), values in [0,1]
    std::vector<int> labels;
    std::vector<std::vector<std::size_t>> class_index;

    std::size_t num_classes() const { return class_index.size(); }
    // batch over samples [first, first+n)
    nn::Batch batch_range(std::size_t first, std::size_t n) const;
    void rebuild_class_index(std::size_t classes);
};

// IDX container: big-endian u32 magic (0x00000803 images, 0x00000801 labels),
// big-endian u32 dimension sizes, raw unsigned bytes. Pixels scale to [0,1].
Dataset load_idx_pair(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

// Per-class Gaussian blobs around distinct class means, clamped to [0,1].
Dataset make_synthetic(std::size_t classes, nn::Shape3 dims, std::size_t per_class,
                       std::uint64_t seed, double noise = 0.06);

} // namespace fedns::data
