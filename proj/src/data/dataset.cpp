#include "fedns/data/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "fedns/errors.hpp"
#include "fedns/rng.hpp"

namespace fedns::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw IoError("truncated IDX file while reading " + what);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

} // namespace

nn::Batch Dataset::batch_range(std::size_t first, std::size_t n) const {
    nn::Batch b;
    b.shape = shape;
    b.count = n;
    const std::size_t d = shape.numel();
    b.inputs.assign(images.begin() + first * d, images.begin() + (first + n) * d);
    b.labels.assign(labels.begin() + first, labels.begin() + first + n);
    return b;
}

void Dataset::rebuild_class_index(std::size_t classes) {
    class_index.assign(classes, {});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw IoError("label " + std::to_string(labels[i]) + " out of range at sample " +
                          std::to_string(i));
        class_index[labels[i]].push_back(i);
    }
    for (std::size_t c = 0; c < classes; ++c)
        if (class_index[c].empty())
            throw IoError("class " + std::to_string(c) + " has no samples");
}

Dataset load_idx_pair(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
    std::ifstream imgf(images_path, std::ios::binary);
    if (!imgf) throw IoError("cannot open " + images_path.string());
    std::ifstream lblf(labels_path, std::ios::binary);
    if (!lblf) throw IoError("cannot open " + labels_path.string());

    const std::uint32_t img_magic = read_be32(imgf, "images magic");
    if (img_magic != kImagesMagic)
        throw IoError(images_path.string() + ": bad images magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", img_magic);
            return std::string(buf);
        }());
    const std::uint32_t lbl_magic = read_be32(lblf, "labels magic");
    if (lbl_magic != kLabelsMagic)
        throw IoError(labels_path.string() + ": bad labels magic");

    const std::uint32_t img_count = read_be32(imgf, "image count");
    const std::uint32_t rows = read_be32(imgf, "rows");
    const std::uint32_t cols = read_be32(imgf, "cols");
    const std::uint32_t lbl_count = read_be32(lblf, "label count");
    if (img_count != lbl_count)
        throw IoError("image count " + std::to_string(img_count) + " != label count " +
                      std::to_string(lbl_count));
    if (img_count == 0) throw IoError(images_path.string() + ": empty dataset");

    Dataset ds;
    ds.shape = {1, rows, cols};
    ds.count = img_count;
    const std::size_t pixels = std::size_t(img_count) * rows * cols;
    std::vector<unsigned char> raw(pixels);
    if (!imgf.read(reinterpret_cast<char*>(raw.data()), pixels))
        throw IoError(images_path.string() + ": truncated pixel payload");
    ds.images.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) ds.images[i] = raw[i] / 255.0;

    std::vector<unsigned char> rawlbl(img_count);
    if (!lblf.read(reinterpret_cast<char*>(rawlbl.data()), img_count))
        throw IoError(labels_path.string() + ": truncated label payload");
    ds.labels.assign(rawlbl.begin(), rawlbl.end());

    const int max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
    ds.rebuild_class_index(static_cast<std::size_t>(max_label) + 1);
    return ds;
}

Dataset make_synthetic(std::size_t classes, nn::Shape3 dims, std::size_t per_class,
                       std::uint64_t seed, double noise) {
    if (classes < 2) throw ConfigError("make_synthetic: need at least 2 classes");
    if (per_class < 2) throw ConfigError("make_synthetic: need at least 2 samples per class");

    Rng rng(seed);
    const std::size_t d = dims.numel();
    std::vector<std::vector<double>> means(classes, std::vector<double>(d));
    for (auto& m : means)
        for (double& v : m) v = rng.uniform(0.2, 0.8);

    Dataset ds;
    ds.shape = dims;
    ds.count = classes * per_class;
    ds.images.resize(ds.count * d);
    ds.labels.resize(ds.count);
    std::size_t s = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i, ++s) {
            double* img = ds.images.data() + s * d;
            for (std::size_t q = 0; q < d; ++q)
                img[q] = std::clamp(means[c][q] + noise * rng.normal(), 0.0, 1.0);
            ds.labels[s] = static_cast<int>(c);
        }
    }
    ds.rebuild_class_index(classes);
    return ds;
}

} // namespace fedns::data
