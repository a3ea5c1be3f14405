#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fedns::nn {

struct Shape3 {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t numel() const { return channels * height * width; }
    bool operator==(const Shape3&) const = default;
};

enum class LayerKind { Conv, MaxPool, Relu, Flatten, Dense };

// Conv is a valid (no padding) 5x5 convolution with stride 1; MaxPool is 2x2
// with stride 2. `width` is out-channels for Conv and out-nodes for Dense.
struct LayerSpec {
    LayerKind kind;
    std::size_t width = 0;

    static LayerSpec conv(std::size_t out_channels) { return {LayerKind::Conv, out_channels}; }
    static LayerSpec maxpool() { return {LayerKind::MaxPool, 0}; }
    static LayerSpec relu() { return {LayerKind::Relu, 0}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0}; }
    static LayerSpec dense(std::size_t out_nodes) { return {LayerKind::Dense, out_nodes}; }
};

struct ArchitectureSpec {
    Shape3 input_shape;
    std::vector<LayerSpec> layers;

    // conv(32)-relu-pool-conv(64)-relu-pool-flatten-dense(1024)-relu-
    // dense(256)-relu-dense(classes)
    static ArchitectureSpec paper_cnn(Shape3 input = {1, 28, 28}, std::size_t classes = 10);

    // flatten followed by hidden dense+relu pairs and a final dense(classes)
    static ArchitectureSpec mlp(Shape3 input, const std::vector<std::size_t>& hidden,
                                std::size_t classes);

    // Walks the layer chain and returns each layer's output shape (flattened
    // shapes become {1, 1, n}). Throws ShapeError naming the offending layer
    // if the chain is inconsistent.
    std::vector<Shape3> infer_shapes() const;

    std::size_t num_classes() const; // out-nodes of the final dense layer
};

std::string layer_kind_name(LayerKind kind);

} // namespace fedns::nn
